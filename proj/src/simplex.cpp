#include "simplex.hpp"

#include <algorithm>
#include <cmath>

namespace fairtree {

namespace {
constexpr double kFeasTol = 1e-7;
constexpr double kDualTol = 1e-7;
constexpr double kPivotTol = 1e-9;
constexpr int kRefactorInterval = 100;
}  // namespace

SimplexSolver::SimplexSolver(const MilpModel& model) : model_(model) {
  n_ = model.num_vars();
  m_ = model.num_rows();
  ntot_ = n_ + 2 * m_;
  sense_flip_ = model.sense() == ObjectiveSense::kMaximize ? -1.0 : 1.0;

  // structural columns (CSC), assembled from rows
  std::vector<int> counts(n_, 0);
  for (const auto& row : model.rows())
    for (const auto& t : row.terms) ++counts[t.var];
  a_ptr_.assign(n_ + 1, 0);
  for (int j = 0; j < n_; ++j) a_ptr_[j + 1] = a_ptr_[j] + counts[j];
  a_row_.resize(a_ptr_[n_]);
  a_val_.resize(a_ptr_[n_]);
  std::vector<int> fill(a_ptr_.begin(), a_ptr_.end() - 1);
  rhs_.resize(m_);
  for (int r = 0; r < m_; ++r) {
    const auto& row = model.row(r);
    rhs_[r] = row.rhs;
    for (const auto& t : row.terms) {
      a_row_[fill[t.var]] = r;
      a_val_[fill[t.var]] = t.coef;
      ++fill[t.var];
    }
  }

  cost_.assign(ntot_, 0.0);
  for (int j = 0; j < n_; ++j) cost_[j] = sense_flip_ * model.objective()[j];

  model_lb_.assign(ntot_, 0.0);
  model_ub_.assign(ntot_, 0.0);
  for (int j = 0; j < n_; ++j) {
    model_lb_[j] = model.variable(j).lb;
    model_ub_[j] = model.variable(j).ub;
  }
  for (int r = 0; r < m_; ++r) {
    switch (model.row(r).sense) {
      case RowSense::kLe: model_lb_[n_ + r] = 0.0; model_ub_[n_ + r] = kInf; break;
      case RowSense::kGe: model_lb_[n_ + r] = -kInf; model_ub_[n_ + r] = 0.0; break;
      case RowSense::kEq: model_lb_[n_ + r] = 0.0; model_ub_[n_ + r] = 0.0; break;
    }
  }
  // artificials stay fixed at zero until phase 1 activates them
  art_sign_.assign(m_, 1.0);
  reset_bounds();

  basic_.assign(m_, -1);
  pos_in_basis_.assign(ntot_, -1);
  vstat_.assign(ntot_, kAtLower);
  x_.assign(ntot_, 0.0);
}

void SimplexSolver::reset_bounds() {
  lb_ = model_lb_;
  ub_ = model_ub_;
}

void SimplexSolver::set_bound(int var, double lb, double ub) {
  lb_[var] = lb;
  ub_[var] = ub;
}

double SimplexSolver::col_dot(int j, const std::vector<double>& v) const {
  double s = 0.0;
  for_col(j, [&](int r, double a) { s += a * v[r]; });
  return s;
}

void SimplexSolver::factorize() {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
  for (int k = 0; k < m_; ++k)
    for_col(basic_[k], [&](int r, double a) { B(r, k) = a; });
  lu_.compute(B);
  double min_diag = kInf;
  for (int i = 0; i < m_; ++i) min_diag = std::min(min_diag, std::abs(lu_.matrixLU()(i, i)));
  if (min_diag < 1e-11) repaired_ = true;  // near-singular: callers re-solve from scratch
  etas_.clear();
  factorized_ = true;
  compute_xb();
}

void SimplexSolver::ftran(std::vector<double>& v) const {
  Eigen::Map<Eigen::VectorXd> vec(v.data(), m_);
  vec = lu_.solve(vec);
  for (const auto& e : etas_) {
    double pivot = v[e.pos];
    if (pivot == 0.0) continue;
    for (int i = 0; i < m_; ++i) v[i] += e.col[i] * pivot;
    v[e.pos] = e.col[e.pos] * pivot;
  }
}

void SimplexSolver::btran(std::vector<double>& v) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) s += it->col[i] * v[i];
    v[it->pos] = s + it->col[it->pos] * v[it->pos];
  }
  Eigen::Map<Eigen::VectorXd> vec(v.data(), m_);
  // B = P^-1 L U  =>  B^T y = v solved as U^T z = v, L^T w = z, y = P^T w
  Eigen::VectorXd z = lu_.matrixLU().triangularView<Eigen::Upper>().transpose().solve(vec);
  z = lu_.matrixLU().triangularView<Eigen::UnitLower>().transpose().solve(z);
  vec = lu_.permutationP().transpose() * z;
}

void SimplexSolver::push_eta(int pos, const std::vector<double>& w) {
  Eta e;
  e.pos = pos;
  e.col.assign(m_, 0.0);
  double inv = 1.0 / w[pos];
  for (int i = 0; i < m_; ++i) e.col[i] = -w[i] * inv;
  e.col[pos] = inv;
  etas_.push_back(std::move(e));
}

void SimplexSolver::compute_xb() {
  std::vector<double> r = rhs_;
  for (int j = 0; j < ntot_; ++j) {
    if (vstat_[j] == kBasic || x_[j] == 0.0) continue;
    for_col(j, [&](int row, double a) { r[row] -= a * x_[j]; });
  }
  ftran(r);
  for (int k = 0; k < m_; ++k) x_[basic_[k]] = r[k];
}

double SimplexSolver::primal_infeasibility() const {
  double worst = 0.0;
  for (int k = 0; k < m_; ++k) {
    int j = basic_[k];
    worst = std::max(worst, lb_[j] - x_[j]);
    worst = std::max(worst, x_[j] - ub_[j]);
  }
  return worst;
}

void SimplexSolver::setup_crash_basis() {
  repaired_ = false;
  // nonbasic columns at the finite bound nearest zero
  for (int j = 0; j < ntot_; ++j) {
    pos_in_basis_[j] = -1;
    if (lb_[j] > -kInf && ub_[j] < kInf) {
      vstat_[j] = std::abs(lb_[j]) <= std::abs(ub_[j]) ? kAtLower : kAtUpper;
    } else if (lb_[j] > -kInf) {
      vstat_[j] = kAtLower;
    } else if (ub_[j] < kInf) {
      vstat_[j] = kAtUpper;
    } else {
      vstat_[j] = kFreeAtZero;
    }
    x_[j] = vstat_[j] == kAtLower ? lb_[j] : vstat_[j] == kAtUpper ? ub_[j] : 0.0;
  }

  // row residuals with all columns nonbasic
  std::vector<double> resid = rhs_;
  for (int j = 0; j < n_; ++j) {
    if (x_[j] == 0.0) continue;
    for (int p = a_ptr_[j]; p < a_ptr_[j + 1]; ++p) resid[a_row_[p]] -= a_val_[p] * x_[j];
  }
  for (int r = 0; r < m_; ++r) resid[r] -= x_[n_ + r];

  num_artificial_ = 0;
  for (int r = 0; r < m_; ++r) {
    double lo = lb_[n_ + r] - x_[n_ + r];
    double hi = ub_[n_ + r] - x_[n_ + r];
    int art = n_ + m_ + r;
    if (resid[r] >= lo - kFeasTol && resid[r] <= hi + kFeasTol) {
      // slack absorbs the residual
      basic_[r] = n_ + r;
      vstat_[n_ + r] = kBasic;
      x_[n_ + r] += resid[r];
      lb_[art] = ub_[art] = 0.0;
      x_[art] = 0.0;
    } else {
      art_sign_[r] = resid[r] >= 0.0 ? 1.0 : -1.0;
      lb_[art] = 0.0;
      ub_[art] = kInf;
      basic_[r] = art;
      vstat_[art] = kBasic;
      x_[art] = std::abs(resid[r]);
      ++num_artificial_;
    }
  }
  for (int k = 0; k < m_; ++k) pos_in_basis_[basic_[k]] = k;
  factorize();
}

bool SimplexSolver::choose_entering(const std::vector<double>& cost, bool bland, int& q,
                                    double& dq) {
  std::vector<double> y(m_, 0.0);
  for (int k = 0; k < m_; ++k) y[k] = cost[basic_[k]];
  btran(y);

  q = -1;
  dq = 0.0;
  double best = kDualTol;
  for (int j = 0; j < ntot_; ++j) {
    if (vstat_[j] == kBasic || lb_[j] == ub_[j]) continue;
    double d = cost[j] - col_dot(j, y);
    double viol;
    if (vstat_[j] == kAtLower) viol = -d;
    else if (vstat_[j] == kAtUpper) viol = d;
    else viol = std::abs(d);
    if (viol > best) {
      q = j;
      dq = d;
      if (bland) return true;  // smallest index wins
      best = viol;
    }
  }
  return q >= 0;
}

SimplexSolver::Status SimplexSolver::primal_loop(const std::vector<double>& cost, bool phase1) {
  const long stall_limit = 2L * (m_ + ntot_) + 1000;
  long since_progress = 0;
  bool bland = false;
  double last_obj = kInf;

  const long iter_cap = 200L * (m_ + ntot_) + 20000;
  for (long it = 0; it < iter_cap; ++it) {
    int q;
    double dq;
    if (!choose_entering(cost, bland, q, dq)) return Status::kOptimal;

    double sigma;
    if (vstat_[q] == kAtLower) sigma = 1.0;
    else if (vstat_[q] == kAtUpper) sigma = -1.0;
    else sigma = dq < 0.0 ? 1.0 : -1.0;

    std::vector<double> w(m_, 0.0);
    for_col(q, [&](int r, double a) { w[r] = a; });
    ftran(w);
    if (repaired_) return Status::kStalled;

    // ratio test, two passes: find the smallest step that puts a basic
    // variable (or the entering variable itself) on a bound, then break ties
    // by pivot magnitude (Bland mode: by variable index)
    double t_flip = (lb_[q] > -kInf && ub_[q] < kInf) ? ub_[q] - lb_[q] : kInf;
    double t_min = t_flip;
    for (int k = 0; k < m_; ++k) {
      double rate = -sigma * w[k];
      if (std::abs(rate) <= kPivotTol) continue;
      int b = basic_[k];
      double t;
      if (rate < 0.0) {
        if (lb_[b] <= -kInf) continue;
        t = (x_[b] - lb_[b]) / -rate;
      } else {
        if (ub_[b] >= kInf) continue;
        t = (ub_[b] - x_[b]) / rate;
      }
      t_min = std::min(t_min, std::max(t, 0.0));
    }
    if (t_min >= kInf) return phase1 ? Status::kStalled : Status::kUnbounded;

    int leave_pos = -1;
    std::uint8_t leave_stat = kAtLower;
    double leave_pivot = 0.0;
    for (int k = 0; k < m_; ++k) {
      double rate = -sigma * w[k];
      if (std::abs(rate) <= kPivotTol) continue;
      int b = basic_[k];
      double t;
      std::uint8_t stat;
      if (rate < 0.0) {
        if (lb_[b] <= -kInf) continue;
        t = std::max(0.0, (x_[b] - lb_[b]) / -rate);
        stat = kAtLower;
      } else {
        if (ub_[b] >= kInf) continue;
        t = std::max(0.0, (ub_[b] - x_[b]) / rate);
        stat = kAtUpper;
      }
      if (t > t_min + 1e-10) continue;
      bool take;
      if (leave_pos < 0) {
        take = true;
      } else if (bland) {
        take = b < basic_[leave_pos];
      } else {
        take = std::abs(w[k]) > std::abs(leave_pivot) + 1e-12 ||
               (std::abs(std::abs(w[k]) - std::abs(leave_pivot)) <= 1e-12 &&
                b < basic_[leave_pos]);
      }
      if (take) {
        leave_pos = k;
        leave_stat = stat;
        leave_pivot = w[k];
      }
    }
    double t_best = leave_pos < 0 ? t_flip : t_min;

    ++iterations_;
    // move
    x_[q] += sigma * t_best;
    for (int k = 0; k < m_; ++k) x_[basic_[k]] -= sigma * t_best * w[k];

    if (leave_pos < 0) {
      // bound flip
      vstat_[q] = vstat_[q] == kAtLower ? kAtUpper : kAtLower;
      x_[q] = vstat_[q] == kAtLower ? lb_[q] : ub_[q];
    } else {
      int leave_var = basic_[leave_pos];
      x_[leave_var] = leave_stat == kAtLower ? lb_[leave_var] : ub_[leave_var];
      vstat_[leave_var] = leave_stat;
      pos_in_basis_[leave_var] = -1;
      basic_[leave_pos] = q;
      pos_in_basis_[q] = leave_pos;
      vstat_[q] = kBasic;
      push_eta(leave_pos, w);
      if (static_cast<int>(etas_.size()) >= kRefactorInterval) {
        factorize();
        if (repaired_) return Status::kStalled;
      }
    }

    // stall detection -> Bland's rule
    double obj = 0.0;
    for (int k = 0; k < m_; ++k) obj += cost[basic_[k]] * x_[basic_[k]];
    for (int j = 0; j < ntot_; ++j)
      if (vstat_[j] != kBasic && cost[j] != 0.0) obj += cost[j] * x_[j];
    if (obj < last_obj - 1e-12) {
      last_obj = obj;
      since_progress = 0;
      bland = false;
    } else if (++since_progress > stall_limit) {
      bland = true;
    }
  }
  return Status::kStalled;
}

SimplexSolver::Status SimplexSolver::solve_from_scratch() {
  setup_crash_basis();

  if (num_artificial_ > 0) {
    std::vector<double> phase1_cost(ntot_, 0.0);
    for (int r = 0; r < m_; ++r)
      if (ub_[n_ + m_ + r] > 0.0) phase1_cost[n_ + m_ + r] = 1.0;
    Status s = primal_loop(phase1_cost, true);
    if (s == Status::kStalled) return s;
    double infeas = 0.0;
    for (int r = 0; r < m_; ++r) infeas += x_[n_ + m_ + r];
    if (infeas > 1e-6) return Status::kInfeasible;
    // freeze artificials
    for (int r = 0; r < m_; ++r) {
      int art = n_ + m_ + r;
      lb_[art] = ub_[art] = 0.0;
      if (vstat_[art] != kBasic) x_[art] = 0.0;
    }
  }
  Status s = primal_loop(cost_, false);
  if (s == Status::kOptimal && primal_infeasibility() > 1e-5) {
    // numerical drift: refactor once and retry
    factorize();
    s = primal_loop(cost_, false);
    if (s == Status::kOptimal && primal_infeasibility() > 1e-5) return Status::kStalled;
  }
  return s;
}

SimplexSolver::Status SimplexSolver::reoptimize_dual() {
  const long iter_cap = 40L * (m_ + ntot_) + 10000;
  for (long it = 0; it < iter_cap; ++it) {
    // leaving: worst primal bound violation among basics
    int leave_pos = -1;
    bool below = false;
    double worst = kFeasTol;
    for (int k = 0; k < m_; ++k) {
      int b = basic_[k];
      double v_below = lb_[b] - x_[b];
      double v_above = x_[b] - ub_[b];
      if (v_below > worst) {
        worst = v_below;
        leave_pos = k;
        below = true;
      }
      if (v_above > worst) {
        worst = v_above;
        leave_pos = k;
        below = false;
      }
    }
    if (leave_pos < 0) return Status::kOptimal;

    // rho = e_r B^-1, alpha_j = rho . a_j
    std::vector<double> rho(m_, 0.0);
    rho[leave_pos] = 1.0;
    btran(rho);

    std::vector<double> y(m_, 0.0);
    for (int k = 0; k < m_; ++k) y[k] = cost_[basic_[k]];
    btran(y);

    double flip = below ? -1.0 : 1.0;
    int q = -1;
    double best_ratio = kInf, best_alpha = 0.0;
    for (int j = 0; j < ntot_; ++j) {
      if (vstat_[j] == kBasic || lb_[j] == ub_[j]) continue;
      double alpha = col_dot(j, rho);
      double fa = flip * alpha;
      bool ok = (vstat_[j] == kAtLower && fa > kPivotTol) ||
                (vstat_[j] == kAtUpper && fa < -kPivotTol) ||
                (vstat_[j] == kFreeAtZero && std::abs(fa) > kPivotTol);
      if (!ok) continue;
      double d = cost_[j] - col_dot(j, y);
      double ratio = std::max(0.0, d / fa);
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && std::abs(alpha) > std::abs(best_alpha) + 1e-12)) {
        best_ratio = ratio;
        best_alpha = alpha;
        q = j;
      }
    }
    if (q < 0) return Status::kInfeasible;

    std::vector<double> w(m_, 0.0);
    for_col(q, [&](int r, double a) { w[r] = a; });
    ftran(w);
    if (std::abs(w[leave_pos]) < kPivotTol) {
      factorize();
      if (repaired_) return Status::kStalled;
      continue;  // stale eta chain; retry with a fresh factorization
    }

    int leave_var = basic_[leave_pos];
    double target = below ? lb_[leave_var] : ub_[leave_var];
    double delta = (x_[leave_var] - target) / w[leave_pos];

    ++iterations_;
    x_[q] += delta;
    for (int k = 0; k < m_; ++k) x_[basic_[k]] -= delta * w[k];
    x_[leave_var] = target;
    vstat_[leave_var] = below ? kAtLower : kAtUpper;
    pos_in_basis_[leave_var] = -1;
    basic_[leave_pos] = q;
    pos_in_basis_[q] = leave_pos;
    vstat_[q] = kBasic;
    push_eta(leave_pos, w);
    if (static_cast<int>(etas_.size()) >= kRefactorInterval) {
      factorize();
      if (repaired_) return Status::kStalled;
    }
  }
  return Status::kStalled;
}

SimplexSolver::Basis SimplexSolver::save_basis() const {
  return Basis{basic_, vstat_};
}

void SimplexSolver::load_basis(const Basis& basis) {
  basic_ = basis.basic;
  vstat_ = basis.vstat;
  std::fill(pos_in_basis_.begin(), pos_in_basis_.end(), -1);
  for (int k = 0; k < m_; ++k) pos_in_basis_[basic_[k]] = k;
  for (int j = 0; j < ntot_; ++j) {
    if (vstat_[j] == kBasic) continue;
    x_[j] = vstat_[j] == kAtLower ? lb_[j] : vstat_[j] == kAtUpper ? ub_[j] : 0.0;
    if (!std::isfinite(x_[j])) x_[j] = 0.0;
  }
  factorize();
}

double SimplexSolver::objective() const {
  double obj = 0.0;
  for (int j = 0; j < n_; ++j) obj += cost_[j] * x_[j];
  return sense_flip_ * obj + model_.objective_constant();
}

std::vector<double> SimplexSolver::solution() const {
  return std::vector<double>(x_.begin(), x_.begin() + n_);
}

}  // namespace fairtree
