#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <memory>
#include <queue>

#include "fairtree/solver.hpp"
#include "simplex.hpp"

namespace fairtree {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasibleTimeLimit: return "feasible-time-limit";
    case SolveStatus::kInfeasible: return "infeasible";
    default: return "unbounded";
  }
}

LpResult solve_lp(const MilpModel& model) {
  SimplexSolver spx(model);
  auto status = spx.solve_from_scratch();
  LpResult out;
  out.iterations = spx.iterations();
  switch (status) {
    case SimplexSolver::Status::kOptimal:
      out.status = LpStatus::kOptimal;
      out.x = spx.solution();
      out.objective = spx.objective();
      break;
    case SimplexSolver::Status::kInfeasible:
      out.status = LpStatus::kInfeasible;
      break;
    case SimplexSolver::Status::kUnbounded:
      out.status = LpStatus::kUnbounded;
      break;
    case SimplexSolver::Status::kStalled:
      throw Error("lp: numerical failure (stalled simplex; basis condition suspect)");
  }
  return out;
}

BranchAndBound::BranchAndBound(const MilpModel& model) : model_(model) {}
BranchAndBound::~BranchAndBound() = default;

void BranchAndBound::install_incumbent(std::span<const double> x) {
  if (static_cast<int>(x.size()) != model_.num_vars())
    throw ValidationError("incumbent: assignment size mismatch");
  for (int j = 0; j < model_.num_vars(); ++j) {
    const auto& v = model_.variable(j);
    if (x[j] < v.lb - 1e-6 || x[j] > v.ub + 1e-6)
      throw ValidationError("incumbent: variable '" + v.name + "' violates its bounds");
    if (v.kind == VarKind::kBinary && std::abs(x[j] - std::round(x[j])) > 1e-6)
      throw ValidationError("incumbent: binary '" + v.name + "' is fractional");
  }
  int bad = model_.first_violated_row(x, 1e-6);
  if (bad >= 0)
    throw ValidationError("incumbent: infeasible assignment, violates row '" +
                          model_.row(bad).name + "'");
  incumbent_.assign(x.begin(), x.end());
  incumbent_obj_ = model_.objective_value(x);
  has_incumbent_ = true;
}

namespace {

struct BnbNode {
  int parent = -1;
  int branch_var = -1;
  double fix_lo = 0.0, fix_hi = 0.0;
  double bound = 0.0;  // min-sense bound inherited from the parent LP
  int depth = 0;
  std::shared_ptr<const SimplexSolver::Basis> basis;
};

struct QueueEntry {
  double bound;
  int depth;
  int id;
};

}  // namespace

SolveResult BranchAndBound::solve(const SolverOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  const double flip = model_.sense() == ObjectiveSense::kMaximize ? -1.0 : 1.0;
  const double kInf = std::numeric_limits<double>::infinity();

  SolveResult res;

  // empty-row presolve: a row with no terms is either vacuous or infeasible
  for (const auto& row : model_.rows()) {
    if (!row.terms.empty()) continue;
    bool ok = row.sense == RowSense::kLe   ? 0.0 <= row.rhs + 1e-9
              : row.sense == RowSense::kGe ? 0.0 >= row.rhs - 1e-9
                                           : std::abs(row.rhs) <= 1e-9;
    if (!ok) {
      res.status = SolveStatus::kInfeasible;
      return res;
    }
  }

  std::vector<int> binaries;
  for (int j = 0; j < model_.num_vars(); ++j)
    if (model_.variable(j).kind == VarKind::kBinary) binaries.push_back(j);

  SimplexSolver spx(model_);

  double ub = has_incumbent_ ? flip * incumbent_obj_ : kInf;  // min sense
  std::vector<double> best = incumbent_;

  std::deque<BnbNode> nodes;
  auto cmp = [&](const QueueEntry& a, const QueueEntry& b) {
    if (opts.node_order == SolverOptions::NodeOrder::kBestBound && a.bound != b.bound)
      return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  };
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, decltype(cmp)> open(cmp);

  std::vector<double> pc_sum_up(model_.num_vars(), 0.0), pc_sum_dn(model_.num_vars(), 0.0);
  std::vector<int> pc_cnt_up(model_.num_vars(), 0), pc_cnt_dn(model_.num_vars(), 0);

  auto now_ticks = [&]() {
    return static_cast<double>(spx.iterations()) + 10.0 * static_cast<double>(res.node_count);
  };
  double lb_traced = -kInf;
  auto record = [&](double lo_min, double ub_min) {
    double a = flip * lo_min, b = flip * ub_min;
    res.trace.push_back({now_ticks(), std::min(a, b), std::max(a, b)});
  };
  auto wall = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };
  auto out_of_time = [&]() {
    return wall() > opts.time_limit_s || (opts.cancel && opts.cancel->load());
  };
  auto cutoff = [&]() { return ub - std::max(opts.abs_gap, opts.rel_gap * std::abs(ub)); };

  auto apply_bounds = [&](int id) {
    spx.reset_bounds();
    for (int cur = id; cur >= 0; cur = nodes[cur].parent)
      if (nodes[cur].branch_var >= 0)
        spx.set_bound(nodes[cur].branch_var, nodes[cur].fix_lo, nodes[cur].fix_hi);
  };

  auto pick_branch_var = [&](const std::vector<double>& x) {
    int pick = -1;
    double best_score = 0.0;
    for (int j : binaries) {
      double f = x[j] - std::floor(x[j]);
      double dist = std::min(f, 1.0 - f);
      if (dist <= opts.int_tol) continue;
      double score = dist;
      if (opts.branching == SolverOptions::Branching::kPseudoCost &&
          pc_cnt_up[j] + pc_cnt_dn[j] > 0) {
        double up = pc_cnt_up[j] ? pc_sum_up[j] / pc_cnt_up[j] : 1.0;
        double dn = pc_cnt_dn[j] ? pc_sum_dn[j] / pc_cnt_dn[j] : 1.0;
        score = std::max(up * (1.0 - f), 1e-9) * std::max(dn * f, 1e-9);
      }
      if (pick < 0 || score > best_score + 1e-12) {
        best_score = score;
        pick = j;
      }
    }
    return pick;
  };

  // --- root relaxation ---
  auto st = spx.solve_from_scratch();
  ++res.node_count;
  if (st == SimplexSolver::Status::kInfeasible || st == SimplexSolver::Status::kUnbounded) {
    res.status = st == SimplexSolver::Status::kInfeasible ? SolveStatus::kInfeasible
                                                          : SolveStatus::kUnbounded;
    res.lp_iterations = spx.iterations();
    return res;
  }
  if (st == SimplexSolver::Status::kStalled)
    throw Error("branch and bound: numerical failure in root relaxation");

  nodes.push_back(BnbNode{-1, -1, 0.0, 0.0, flip * spx.objective(), 0, nullptr});
  lb_traced = std::min(nodes[0].bound, ub);
  record(lb_traced, ub);

  bool have_current = true;  // spx holds the LP optimum of `current`
  int current = 0;
  double current_obj = nodes[0].bound;
  std::vector<double> current_x = spx.solution();
  bool hit_limit = false;
  double in_flight = kInf;  // bound of the current subtree when the limit hits

  while (true) {
    if (have_current) {
      if (out_of_time()) {
        hit_limit = true;
        in_flight = current_obj;
        break;
      }
      if (current_obj >= cutoff()) {
        have_current = false;
        continue;
      }
      int bv = pick_branch_var(current_x);
      if (bv < 0) {
        // integral solution
        if (current_obj < ub - 1e-12) {
          ub = current_obj;
          best = current_x;
          record(std::min(!open.empty() ? open.top().bound : ub, ub), ub);
        }
        have_current = false;
        continue;
      }
      // branch; both children share the parent's final basis
      auto basis = std::make_shared<const SimplexSolver::Basis>(spx.save_basis());
      double f = current_x[bv] - std::floor(current_x[bv]);
      int depth = nodes[current].depth + 1;
      int id_dn = static_cast<int>(nodes.size());
      nodes.push_back(BnbNode{current, bv, 0.0, 0.0, current_obj, depth, basis});
      int id_up = static_cast<int>(nodes.size());
      nodes.push_back(BnbNode{current, bv, 1.0, 1.0, current_obj, depth, basis});
      int take = f >= 0.5 ? id_up : id_dn;
      int defer = f >= 0.5 ? id_dn : id_up;
      open.push({current_obj, depth, defer});

      // hot path: one bound changes, dual simplex from the live basis
      spx.set_bound(bv, nodes[take].fix_lo, nodes[take].fix_hi);
      auto cst = spx.reoptimize_dual();
      if (cst == SimplexSolver::Status::kStalled) {
        cst = spx.solve_from_scratch();
        if (cst == SimplexSolver::Status::kStalled)
          throw Error("branch and bound: numerical failure at node " + std::to_string(take));
      }
      ++res.node_count;
      if (cst == SimplexSolver::Status::kInfeasible) {
        have_current = false;
        continue;
      }
      if (cst == SimplexSolver::Status::kUnbounded)
        throw Error("branch and bound: unbounded node relaxation");
      double child_obj = flip * spx.objective();
      // a child bound never drops below its parent's; guards tolerance noise
      child_obj = std::max(child_obj, nodes[take].bound);
      double degr = std::max(0.0, child_obj - current_obj);
      if (take == id_up) {
        pc_sum_up[bv] += degr / std::max(1.0 - f, 1e-9);
        ++pc_cnt_up[bv];
      } else {
        pc_sum_dn[bv] += degr / std::max(f, 1e-9);
        ++pc_cnt_dn[bv];
      }
      nodes[take].bound = child_obj;
      current = take;
      current_obj = child_obj;
      current_x = spx.solution();
      continue;
    }

    // pick the next open node
    if (open.empty()) break;
    if (out_of_time()) {
      hit_limit = true;
      break;
    }
    QueueEntry e = open.top();
    open.pop();
    if (e.bound >= cutoff()) continue;
    apply_bounds(e.id);
    spx.load_basis(*nodes[e.id].basis);
    auto nst = spx.needs_rebuild() ? spx.solve_from_scratch() : spx.reoptimize_dual();
    if (nst == SimplexSolver::Status::kStalled) {
      nst = spx.solve_from_scratch();
      if (nst == SimplexSolver::Status::kStalled)
        throw Error("branch and bound: numerical failure at node " + std::to_string(e.id));
    }
    ++res.node_count;
    if (nst == SimplexSolver::Status::kInfeasible) continue;
    if (nst == SimplexSolver::Status::kUnbounded)
      throw Error("branch and bound: unbounded node relaxation");
    current = e.id;
    current_obj = std::max(flip * spx.objective(), nodes[e.id].bound);
    nodes[e.id].bound = current_obj;
    current_x = spx.solution();
    have_current = true;

    double lb_new = std::min(current_obj, ub);
    if (!open.empty()) lb_new = std::min(lb_new, open.top().bound);
    if (lb_new > lb_traced + 1e-12) {
      lb_traced = lb_new;
      record(lb_traced, ub);
    }
  }

  res.lp_iterations = spx.iterations();
  res.ticks = now_ticks();
  res.wall_seconds = wall();

  double lb_final;
  if (hit_limit) {
    lb_final = std::min(in_flight, ub);
    if (!open.empty()) lb_final = std::min(lb_final, open.top().bound);
    lb_final = std::max(lb_final, lb_traced == -kInf ? lb_final : lb_traced);
    res.status = SolveStatus::kFeasibleTimeLimit;
  } else {
    lb_final = ub;  // search exhausted
    res.status = ub < kInf ? SolveStatus::kOptimal : SolveStatus::kInfeasible;
  }

  if (ub < kInf) {
    res.assignment = best;
    res.objective = flip * ub;
    res.lower_bound = flip * lb_final;
    res.gap = std::max(0.0, (ub - lb_final) / std::max(1.0, std::abs(ub)));
    record(lb_final, ub);
  } else {
    res.lower_bound = flip * lb_final;
    res.gap = kInf;
  }
  return res;
}

}  // namespace fairtree
