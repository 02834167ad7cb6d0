#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fairtree/milp.hpp"
#include "json.hpp"

namespace fairtree {

const char* to_string(TreeClass c) {
  switch (c) {
    case TreeClass::kClassical: return "classical";
    case TreeClass::kLinearBranching: return "linbranch";
    default: return "linleaf";
  }
}

int MilpModel::add_variable(const std::string& name, VarKind kind, double lb, double ub) {
  if (by_name_.count(name)) throw ConsistencyError("duplicate variable '" + name + "'");
  if (kind == VarKind::kBinary && (lb != 0.0 || ub != 1.0))
    throw ConsistencyError("binary variable '" + name + "' must have bounds [0,1]");
  int idx = num_vars();
  vars_.push_back({name, kind, lb, ub});
  objective_.push_back(0.0);
  by_name_.emplace(name, idx);
  return idx;
}

int MilpModel::add_row(const std::string& name, std::vector<RowTerm> terms, RowSense sense,
                       double rhs) {
  for (const auto& t : terms)
    if (t.var < 0 || t.var >= num_vars())
      throw ConsistencyError("row '" + name + "' references unregistered variable");
  int idx = num_rows();
  rows_.push_back({name, std::move(terms), sense, rhs});
  return idx;
}

int MilpModel::var(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ConsistencyError("unknown variable '" + name + "'");
  return it->second;
}

int MilpModel::find_var(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

double MilpModel::objective_value(std::span<const double> x) const {
  double v = objective_constant_;
  for (int j = 0; j < num_vars(); ++j) v += objective_[j] * x[j];
  return v;
}

double MilpModel::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (int j = 0; j < num_vars(); ++j) {
    worst = std::max(worst, vars_[j].lb - x[j]);
    worst = std::max(worst, x[j] - vars_[j].ub);
  }
  for (const auto& row : rows_) {
    double a = 0.0;
    for (const auto& t : row.terms) a += t.coef * x[t.var];
    if (row.sense == RowSense::kLe) worst = std::max(worst, a - row.rhs);
    else if (row.sense == RowSense::kGe) worst = std::max(worst, row.rhs - a);
    else worst = std::max(worst, std::abs(a - row.rhs));
  }
  return worst;
}

int MilpModel::first_violated_row(std::span<const double> x, double tol) const {
  for (int r = 0; r < num_rows(); ++r) {
    const auto& row = rows_[r];
    double a = 0.0;
    for (const auto& t : row.terms) a += t.coef * x[t.var];
    double viol = row.sense == RowSense::kLe   ? a - row.rhs
                  : row.sense == RowSense::kGe ? row.rhs - a
                                               : std::abs(a - row.rhs);
    if (viol > tol) return r;
  }
  return -1;
}

std::string BuildInfo::report_json() const {
  nlohmann::json doc;
  doc["big_m"] = big_m;
  doc["epsilon"] = epsilon;
  doc["lambda"] = lambda;
  doc["variables"] = var_counts;
  doc["constraints"] = row_counts;
  int nv = 0, nr = 0;
  for (auto& [k, v] : var_counts) nv += v;
  for (auto& [k, v] : row_counts) nr += v;
  doc["total_variables"] = nv;
  doc["total_constraints"] = nr;
  doc["objective"] = {{"loss_terms", loss_terms},
                      {"fairness_terms", fairness_terms},
                      {"lambda", lambda}};
  return doc.dump(2) + "\n";
}

double choose_epsilon(const Dataset& ds) {
  double min_gap = std::numeric_limits<double>::infinity();
  for (int j : ds.schema().branching_quantitative()) {
    std::vector<double> vals(ds.size());
    for (int i = 0; i < ds.size(); ++i) vals[i] = ds.quant(i, j);
    std::sort(vals.begin(), vals.end());
    for (int i = 1; i < ds.size(); ++i) {
      double gap = vals[i] - vals[i - 1];
      if (gap > 0.0) min_gap = std::min(min_gap, gap);
    }
  }
  if (!std::isfinite(min_gap)) return 1e-6;  // all columns constant
  return std::max(min_gap * 0.5, 1e-6);
}

namespace {

std::string idx_name(const char* stem, int a) { return std::string(stem) + "_" + std::to_string(a); }
std::string idx_name(const char* stem, int a, int b) {
  return std::string(stem) + "_" + std::to_string(a) + "_" + std::to_string(b);
}
std::string idx_name(const char* stem, int a, int b, int c) {
  return std::string(stem) + "_" + std::to_string(a) + "_" + std::to_string(b) + "_" +
         std::to_string(c);
}

class Builder {
 public:
  Builder(const Dataset& ds, const TreeShape& shape, const BuildConfig& cfg)
      : ds_(ds), shape_(shape), cfg_(cfg), built_{MilpModel{}, {}, {}, shape, cfg} {}

  BuiltModel run() {
    validate_config();
    choose_constants();
    add_structure();
    add_quantitative_branching();
    add_categorical_branching();
    add_assignment();
    add_objective();
    add_interpretability();
    built_.info.lambda = cfg_.lambda;
    return std::move(built_);
  }

 private:
  int add_var(const std::string& family, const std::string& name, VarKind kind, double lb,
              double ub) {
    ++built_.info.var_counts[family];
    return model().add_variable(name, kind, lb, ub);
  }

  int add_row(const std::string& family, const std::string& name, std::vector<RowTerm> terms,
              RowSense sense, double rhs) {
    ++built_.info.row_counts[family];
    return model().add_row(name, std::move(terms), sense, rhs);
  }

  MilpModel& model() { return built_.model; }
  ModelLayout& L() { return built_.layout; }

  void validate_config() {
    if (cfg_.lambda < 0) throw ValidationError("lambda must be nonnegative");
    fq_ = ds_.schema().branching_quantitative();
    fc_ = ds_.schema().branching_categorical();
    if (cfg_.tree_class == TreeClass::kLinearBranching && !fc_.empty())
      throw ValidationError(
          "linear branching treats all features as quantitative; categorical "
          "features present");
    if (cfg_.tree_class == TreeClass::kLinearLeafing) {
      if (cfg_.task != TaskKind::kRegression)
        throw ValidationError("linear leafing applies to regression tasks");
      if (fq_.empty()) throw ValidationError("linear leafing needs quantitative features");
    }
    if (fq_.empty() && fc_.empty())
      throw ValidationError("no unprotected features available for branching");
    if (cfg_.task == TaskKind::kClassification && ds_.task() != TaskKind::kClassification)
      throw ValidationError("classification config on a regression dataset");
    if (cfg_.task == TaskKind::kRegression && ds_.task() != TaskKind::kRegression)
      throw ValidationError("regression config on a classification dataset");
    // normalized-dataset precondition
    for (int j : fq_)
      for (int i = 0; i < ds_.size(); ++i) {
        double v = ds_.quant(i, j);
        if (v < -1e-9 || v > 1.0 + 1e-9)
          throw ValidationError("dataset is not normalized: feature '" +
                                ds_.schema().feature(j).name + "' outside [0,1]");
      }
  }

  void choose_constants() {
    eps_ = cfg_.epsilon > 0 ? cfg_.epsilon : choose_epsilon(ds_);
    double required = cfg_.tree_class == TreeClass::kLinearBranching
                          ? 1.0 + static_cast<double>(fq_.size())
                          : 2.0;
    big_m_ = cfg_.big_m > 0 ? cfg_.big_m : required;
    if (big_m_ < required - 1e-12)
      throw ValidationError("big-M too small relative to data range: need at least " +
                            std::to_string(required) + ", got " + std::to_string(big_m_));
    built_.info.big_m = big_m_;
    built_.info.epsilon = eps_;
  }

  // 10b: branching structure p in P and leaf-prediction structure
  void add_structure() {
    const int V = shape_.num_nodes();
    const int nl = shape_.num_leaves();
    const int d = ds_.schema().num_features();
    const bool linear = cfg_.tree_class == TreeClass::kLinearBranching;

    L().p.assign(V, std::vector<int>(d, -1));
    L().q.assign(V, -1);
    std::vector<int> branch_features = fq_;
    branch_features.insert(branch_features.end(), fc_.begin(), fc_.end());
    std::sort(branch_features.begin(), branch_features.end());

    for (int v = 0; v < V; ++v) {
      for (int j : branch_features) {
        if (linear) {
          double lb = cfg_.nonneg_linear_weights ? 0.0 : -1.0;
          L().p[v][j] = add_var("p", idx_name("p", v, j), VarKind::kContinuous, lb, 1.0);
        } else {
          L().p[v][j] = add_var("p", idx_name("p", v, j), VarKind::kBinary, 0.0, 1.0);
        }
      }
    }
    for (int v = 0; v < V; ++v) {
      std::vector<RowTerm> terms;
      for (int j : branch_features) terms.push_back({L().p[v][j], 1.0});
      add_row("10b_p", idx_name("sum_p", v), std::move(terms), RowSense::kEq, 1.0);
    }

    // cutoff variables exist whenever quantitative branching machinery does
    if (!fq_.empty()) {
      double q_lo = linear ? -static_cast<double>(fq_.size()) : 0.0;
      double q_hi = linear ? static_cast<double>(fq_.size()) : 1.0;
      for (int v = 0; v < V; ++v)
        L().q[v] = add_var("q", idx_name("q", v), VarKind::kContinuous, q_lo, q_hi);
    }

    // leaf predictors
    if (cfg_.task == TaskKind::kClassification) {
      const int ny = ds_.num_labels();
      L().u_label.assign(nl, std::vector<int>(ny, -1));
      for (int l = 0; l < nl; ++l)
        for (int y = 0; y < ny; ++y)
          L().u_label[l][y] = add_var("u_label", idx_name("ul", l, y), VarKind::kBinary, 0.0, 1.0);
      for (int l = 0; l < nl; ++l) {
        std::vector<RowTerm> terms;
        for (int y = 0; y < ny; ++y) terms.push_back({L().u_label[l][y], 1.0});
        add_row("10b_u", idx_name("sum_u", l), std::move(terms), RowSense::kEq, 1.0);
      }
    } else if (cfg_.tree_class == TreeClass::kLinearLeafing) {
      const double B = cfg_.leaf_coef_box;
      if (B <= 0) throw ValidationError("linear leafing needs a positive coefficient box");
      L().u_coef.assign(nl, std::vector<int>(d, -1));
      for (int l = 0; l < nl; ++l)
        for (int j : fq_)
          L().u_coef[l][j] = add_var("u_coef", idx_name("uc", l, j), VarKind::kContinuous, -B, B);
    } else {
      L().u_value.assign(nl, -1);
      for (int l = 0; l < nl; ++l)
        L().u_value[l] = add_var("u_value", idx_name("uv", l), VarKind::kContinuous, -1.0, 1.0);
    }
  }

  // 10c-10h
  void add_quantitative_branching() {
    if (fq_.empty()) return;
    const int n = ds_.size();
    const int V = shape_.num_nodes();

    L().g_pos.assign(n, std::vector<int>(V, -1));
    L().g_neg.assign(n, std::vector<int>(V, -1));
    L().w_q.assign(n, std::vector<int>(V, -1));
    for (int v = 0; v < V; ++v)
      for (int i = 0; i < n; ++i) {
        L().g_pos[i][v] = add_var("g_pos", idx_name("gp", i, v), VarKind::kContinuous, 0.0, big_m_);
        L().g_neg[i][v] = add_var("g_neg", idx_name("gm", i, v), VarKind::kContinuous, 0.0, big_m_);
        L().w_q[i][v] = add_var("w_q", idx_name("wq", i, v), VarKind::kBinary, 0.0, 1.0);
      }

    for (int v = 0; v < V; ++v) {
      for (int i = 0; i < n; ++i) {
        // 10c: q_v - sum_j p_vj x_ij = g+ - g-
        std::vector<RowTerm> terms{{L().q[v], 1.0}};
        for (int j : fq_) terms.push_back({L().p[v][j], -ds_.quant(i, j)});
        terms.push_back({L().g_pos[i][v], -1.0});
        terms.push_back({L().g_neg[i][v], 1.0});
        add_row("10c", idx_name("gap", i, v), std::move(terms), RowSense::kEq, 0.0);
        // 10d: g+ <= M w
        add_row("10d", idx_name("gpos_bound", i, v),
                {{L().g_pos[i][v], 1.0}, {L().w_q[i][v], -big_m_}}, RowSense::kLe, 0.0);
        // 10e: g- <= M (1-w)
        add_row("10e", idx_name("gneg_bound", i, v),
                {{L().g_neg[i][v], 1.0}, {L().w_q[i][v], big_m_}}, RowSense::kLe, big_m_);
        // 10f: g+ + g- >= eps (1-w)
        add_row("10f", idx_name("gap_eps", i, v),
                {{L().g_pos[i][v], 1.0}, {L().g_neg[i][v], 1.0}, {L().w_q[i][v], eps_}},
                RowSense::kGe, eps_);
      }
    }

    // 10g / 10h need z; created in add_assignment, so rows are deferred
  }

  // 10i-10j (10k/10l deferred with z)
  void add_categorical_branching() {
    if (fc_.empty()) return;
    const int n = ds_.size();
    const int V = shape_.num_nodes();
    const int d = ds_.schema().num_features();

    L().s.assign(V, std::vector<std::vector<int>>(d));
    L().w_c.assign(n, std::vector<int>(V, -1));
    for (int v = 0; v < V; ++v)
      for (int j : fc_) {
        const int nk = static_cast<int>(ds_.schema().feature(j).levels.size());
        L().s[v][j].assign(nk, -1);
        for (int k = 0; k < nk; ++k)
          L().s[v][j][k] = add_var("s", idx_name("s", v, j, k), VarKind::kBinary, 0.0, 1.0);
      }
    for (int v = 0; v < V; ++v)
      for (int i = 0; i < n; ++i)
        L().w_c[i][v] = add_var("w_c", idx_name("wc", i, v), VarKind::kBinary, 0.0, 1.0);

    for (int v = 0; v < V; ++v) {
      // 10i: s_vjk <= p_vj
      for (int j : fc_)
        for (std::size_t k = 0; k < L().s[v][j].size(); ++k)
          add_row("10i", idx_name("s_bound", v, j, static_cast<int>(k)),
                  {{L().s[v][j][k], 1.0}, {L().p[v][j], -1.0}}, RowSense::kLe, 0.0);
      // 10j: w^c_iv = sum_j s_{v j x_ij}
      for (int i = 0; i < ds_.size(); ++i) {
        std::vector<RowTerm> terms{{L().w_c[i][v], 1.0}};
        for (int j : fc_) terms.push_back({L().s[v][j][ds_.cat(i, j)], -1.0});
        add_row("10j", idx_name("wc_def", i, v), std::move(terms), RowSense::kEq, 0.0);
      }
    }
  }

  // z variables, 10g/10h/10k/10l, 10m
  void add_assignment() {
    const int n = ds_.size();
    const int V = shape_.num_nodes();
    const int nl = shape_.num_leaves();

    L().z.assign(n, std::vector<int>(nl, -1));
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < nl; ++l)
        L().z[i][l] = add_var("z", idx_name("z", i, l), VarKind::kBinary, 0.0, 1.0);

    if (!fq_.empty()) {
      for (int v = 0; v < V; ++v) {
        auto [lb, le] = shape_.left_leaves(v);
        auto [rb, re] = shape_.right_leaves(v);
        for (int i = 0; i < n; ++i) {
          // 10g: z_il <= 1 - w^q + (1 - sum_{Fq} p_vj), right leaves
          for (int l = rb; l < re; ++l) {
            std::vector<RowTerm> terms{{L().z[i][l], 1.0}, {L().w_q[i][v], 1.0}};
            for (int j : fq_) terms.push_back({L().p[v][j], 1.0});
            add_row("10g", idx_name("cut_right_q", i, v * nl + l), std::move(terms), RowSense::kLe,
                    2.0);
          }
          // 10h: z_il <= w^q + (1 - sum_{Fq} p_vj), left leaves
          for (int l = lb; l < le; ++l) {
            std::vector<RowTerm> terms{{L().z[i][l], 1.0}, {L().w_q[i][v], -1.0}};
            for (int j : fq_) terms.push_back({L().p[v][j], 1.0});
            add_row("10h", idx_name("cut_left_q", i, v * nl + l), std::move(terms), RowSense::kLe,
                    1.0);
          }
        }
      }
    }
    if (!fc_.empty()) {
      for (int v = 0; v < V; ++v) {
        auto [lb, le] = shape_.left_leaves(v);
        auto [rb, re] = shape_.right_leaves(v);
        for (int i = 0; i < n; ++i) {
          // 10k: z_il <= w^c + (1 - sum_{Fc} p_vj), left leaves
          for (int l = lb; l < le; ++l) {
            std::vector<RowTerm> terms{{L().z[i][l], 1.0}, {L().w_c[i][v], -1.0}};
            for (int j : fc_) terms.push_back({L().p[v][j], 1.0});
            add_row("10k", idx_name("cut_left_c", i, v * nl + l), std::move(terms), RowSense::kLe,
                    1.0);
          }
          // 10l: z_il <= 1 - w^c + (1 - sum_{Fc} p_vj), right leaves
          for (int l = rb; l < re; ++l) {
            std::vector<RowTerm> terms{{L().z[i][l], 1.0}, {L().w_c[i][v], 1.0}};
            for (int j : fc_) terms.push_back({L().p[v][j], 1.0});
            add_row("10l", idx_name("cut_right_c", i, v * nl + l), std::move(terms), RowSense::kLe,
                    2.0);
          }
        }
      }
    }
    // 10m: each record in exactly one leaf
    for (int i = 0; i < n; ++i) {
      std::vector<RowTerm> terms;
      for (int l = 0; l < nl; ++l) terms.push_back({L().z[i][l], 1.0});
      add_row("10m", idx_name("one_leaf", i), std::move(terms), RowSense::kEq, 1.0);
    }
  }

  void add_objective() {
    if (cfg_.task == TaskKind::kClassification) add_classification_objective();
    else add_regression_objective();
  }

  // prediction indicators via z*u products, misclassification loss, and the
  // DIDI_c / DTDI_c regularizer on the indicators
  void add_classification_objective() {
    const int n = ds_.size();
    const int nl = shape_.num_leaves();
    const int ny = ds_.num_labels();

    // r_ily = z_il * u_ly (exact 3-row product of binaries)
    std::vector<std::vector<std::vector<int>>> r(
        n, std::vector<std::vector<int>>(nl, std::vector<int>(ny, -1)));
    L().products.assign(n, std::vector<int>(static_cast<std::size_t>(nl) * ny, -1));
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < nl; ++l)
        for (int y = 0; y < ny; ++y) {
          r[i][l][y] = add_var("r", idx_name("r", i, l, y), VarKind::kContinuous, 0.0, 1.0);
          L().products[i][static_cast<std::size_t>(l) * ny + y] = r[i][l][y];
        }
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < nl; ++l)
        for (int y = 0; y < ny; ++y) {
          add_row("product", idx_name("r_le_z", i, l * ny + y),
                  {{r[i][l][y], 1.0}, {L().z[i][l], -1.0}}, RowSense::kLe, 0.0);
          add_row("product", idx_name("r_le_u", i, l * ny + y),
                  {{r[i][l][y], 1.0}, {L().u_label[l][y], -1.0}}, RowSense::kLe, 0.0);
          add_row("product", idx_name("r_ge_zu", i, l * ny + y),
                  {{r[i][l][y], 1.0}, {L().z[i][l], -1.0}, {L().u_label[l][y], -1.0}},
                  RowSense::kGe, -1.0);
        }

    // yhat indicator: yh_iy = sum_l r_ily
    L().yhat_ind.assign(n, std::vector<int>(ny, -1));
    for (int i = 0; i < n; ++i)
      for (int y = 0; y < ny; ++y)
        L().yhat_ind[i][y] = add_var("yhat", idx_name("yh", i, y), VarKind::kContinuous, 0.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int y = 0; y < ny; ++y) {
        std::vector<RowTerm> terms{{L().yhat_ind[i][y], 1.0}};
        for (int l = 0; l < nl; ++l) terms.push_back({r[i][l][y], -1.0});
        add_row("yhat_def", idx_name("yh_def", i, y), std::move(terms), RowSense::kEq, 0.0);
      }

    // misclassification rate: 1 - (1/n) sum_i yh_{i, y_i}
    model().set_objective_constant(1.0);
    for (int i = 0; i < n; ++i) {
      model().add_objective(L().yhat_ind[i][ds_.label_id(i)], -1.0 / n);
      ++built_.info.loss_terms;
    }

    if (cfg_.lambda <= 0.0) return;

    if (cfg_.fairness.index == FairnessIndex::kDidi) {
      // per (label, group): |sum_i yh_iy / n - sum_{i in g} yh_iy / n_g|
      for (int y = 0; y < ny; ++y)
        for (int g = 0; g < ds_.num_groups(); ++g) {
          if (ds_.group_size(g) == 0)
            throw ValidationError("empty protected group '" + ds_.schema().group_name(g) + "'");
          add_abs_pair(idx_name("didi", y, g), didi_expr(y, g), cfg_.lambda, 2.0);
        }
    } else {
      WeightMatrix w = fairness_weights();
      for (int y = 0; y < ny; ++y)
        for (int g = 0; g < ds_.num_groups(); ++g)
          for (int j = 0; j < n; ++j)
            add_abs_pair(idx_name("dtdi", (y * ds_.num_groups() + g), j),
                         dtdi_expr_c(y, g, j, w), cfg_.lambda, 2.0);
    }
  }

  std::vector<RowTerm> didi_expr(int y, int g) {
    const int n = ds_.size();
    std::vector<RowTerm> expr;
    for (int i = 0; i < n; ++i) {
      double coef = 1.0 / n - (ds_.group(i) == g ? 1.0 / ds_.group_size(g) : 0.0);
      if (coef != 0.0) expr.push_back({L().yhat_ind[i][y], coef});
    }
    return expr;
  }

  std::vector<RowTerm> dtdi_expr_c(int y, int g, int j, const WeightMatrix& w) {
    double wj = 0.0, wgj = 0.0;
    for (const auto& e : w.column(j)) {
      wj += e.w;
      if (ds_.group(e.row) == g) wgj += e.w;
    }
    if (wj <= 0.0 || wgj <= 0.0)
      throw ValidationError("dtdi regularizer: zero kernel denominator at reference point " +
                            std::to_string(j) + ", group '" + ds_.schema().group_name(g) + "'");
    std::vector<RowTerm> expr;
    for (const auto& e : w.column(j)) {
      double coef = e.w / wj - (ds_.group(e.row) == g ? e.w / wgj : 0.0);
      if (coef != 0.0) expr.push_back({L().yhat_ind[e.row][y], coef});
    }
    return expr;
  }

  WeightMatrix fairness_weights() {
    if (cfg_.fairness.kernel.kind == KernelSpec::Kind::kUnit)
      return WeightMatrix::unit(ds_.size());
    WeightMatrix w = knn_weights(ds_, cfg_.fairness.kernel.k);
    // detect zero group denominators up front so the fallback is explicit
    for (int j = 0; j < ds_.size(); ++j) {
      std::vector<double> wg(ds_.num_groups(), 0.0);
      for (const auto& e : w.column(j)) wg[ds_.group(e.row)] += e.w;
      for (int g = 0; g < ds_.num_groups(); ++g)
        if (wg[g] <= 0.0) {
          if (cfg_.fairness.unit_fallback) return WeightMatrix::unit(ds_.size());
          throw ValidationError(
              "dtdi regularizer: zero kernel denominator at reference point " +
              std::to_string(j) + ", group '" + ds_.schema().group_name(g) +
              "' (consider --knn-fallback)");
        }
    }
    return w;
  }

  // t >= expr, t >= -expr, objective += weight * t
  void add_abs_pair(const std::string& name, std::vector<RowTerm> expr, double weight,
                    double bound) {
    int t = add_var("t_fairness", "t_" + name, VarKind::kContinuous, 0.0, bound);
    std::vector<RowTerm> pos = expr;
    pos.push_back({t, -1.0});
    int rp = add_row("fairness_abs", name + "_pos", std::move(pos), RowSense::kLe, 0.0);
    std::vector<RowTerm> neg = std::move(expr);
    for (auto& term : neg) term.coef = -term.coef;
    neg.push_back({t, -1.0});
    int rn = add_row("fairness_abs", name + "_neg", std::move(neg), RowSense::kLe, 0.0);
    model().add_objective(t, weight);
    L().abs_aux.push_back({t, rp, rn});
    ++built_.info.fairness_terms;
  }

  // regression: yhat via big-M products, MAE loss, DIDI_r / DTDI_r
  void add_regression_objective() {
    const int n = ds_.size();
    const int nl = shape_.num_leaves();
    const bool linleaf = cfg_.tree_class == TreeClass::kLinearLeafing;
    const double box = linleaf ? cfg_.leaf_coef_box * static_cast<double>(fq_.size()) : 1.0;

    // products: rho_il = z_il * (leaf score of record i at leaf l)
    std::vector<std::vector<int>> rho(n, std::vector<int>(nl, -1));
    L().products.assign(n, std::vector<int>(nl, -1));
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < nl; ++l) {
        rho[i][l] = add_var(linleaf ? "theta" : "rho", idx_name(linleaf ? "th" : "rho", i, l),
                            VarKind::kContinuous, -box, box);
        L().products[i][l] = rho[i][l];
      }

    for (int i = 0; i < n; ++i)
      for (int l = 0; l < nl; ++l) {
        // score expression for record i at leaf l
        std::vector<RowTerm> score;
        if (linleaf) {
          for (int j : fq_)
            if (ds_.quant(i, j) != 0.0) score.push_back({L().u_coef[l][j], ds_.quant(i, j)});
        } else {
          score.push_back({L().u_value[l], 1.0});
        }
        // rho <= box * z ; rho >= -box * z
        add_row("product", idx_name("rho_ub_z", i, l),
                {{rho[i][l], 1.0}, {L().z[i][l], -box}}, RowSense::kLe, 0.0);
        add_row("product", idx_name("rho_lb_z", i, l),
                {{rho[i][l], 1.0}, {L().z[i][l], box}}, RowSense::kGe, 0.0);
        // rho <= score + box (1 - z) ; rho >= score - box (1 - z)
        std::vector<RowTerm> ub{{rho[i][l], 1.0}, {L().z[i][l], box}};
        for (const auto& tm : score) ub.push_back({tm.var, -tm.coef});
        add_row("product", idx_name("rho_ub_s", i, l), std::move(ub), RowSense::kLe, box);
        std::vector<RowTerm> lb{{rho[i][l], 1.0}, {L().z[i][l], -box}};
        for (const auto& tm : score) lb.push_back({tm.var, -tm.coef});
        add_row("product", idx_name("rho_lb_s", i, l), std::move(lb), RowSense::kGe, -box);
      }

    L().yhat.assign(n, -1);
    for (int i = 0; i < n; ++i)
      L().yhat[i] = add_var("yhat", idx_name("yh", i), VarKind::kContinuous, -box, box);
    for (int i = 0; i < n; ++i) {
      std::vector<RowTerm> terms{{L().yhat[i], 1.0}};
      for (int l = 0; l < nl; ++l) terms.push_back({rho[i][l], -1.0});
      add_row("yhat_def", idx_name("yh_def", i), std::move(terms), RowSense::kEq, 0.0);
    }

    // MAE: (1/n) sum_i t_i with t_i >= |yhat_i - y_i|
    for (int i = 0; i < n; ++i) {
      int t = add_var("t_loss", idx_name("tmae", i), VarKind::kContinuous, 0.0, box + 1.0);
      int rp = add_row("loss", idx_name("mae_pos", i), {{L().yhat[i], 1.0}, {t, -1.0}},
                       RowSense::kLe, ds_.value(i));
      int rn = add_row("loss", idx_name("mae_neg", i), {{L().yhat[i], -1.0}, {t, -1.0}},
                       RowSense::kLe, -ds_.value(i));
      model().add_objective(t, 1.0 / n);
      L().abs_aux.push_back({t, rp, rn});
      ++built_.info.loss_terms;
    }

    if (cfg_.lambda <= 0.0) return;

    if (cfg_.fairness.index == FairnessIndex::kDidi) {
      for (int g = 0; g < ds_.num_groups(); ++g) {
        if (ds_.group_size(g) == 0)
          throw ValidationError("empty protected group '" + ds_.schema().group_name(g) + "'");
        std::vector<RowTerm> expr;
        for (int i = 0; i < n; ++i) {
          double coef = (ds_.group(i) == g ? 1.0 / ds_.group_size(g) : 0.0) - 1.0 / n;
          if (coef != 0.0) expr.push_back({L().yhat[i], coef});
        }
        add_abs_pair(idx_name("didi", g, 0), std::move(expr), cfg_.lambda, 2.0 * box);
      }
    } else {
      WeightMatrix w = fairness_weights();
      for (int g = 0; g < ds_.num_groups(); ++g)
        for (int j = 0; j < n; ++j) {
          double wj = 0.0, wgj = 0.0;
          for (const auto& e : w.column(j)) {
            wj += e.w;
            if (ds_.group(e.row) == g) wgj += e.w;
          }
          if (wj <= 0.0 || wgj <= 0.0)
            throw ValidationError(
                "dtdi regularizer: zero kernel denominator at reference point " +
                std::to_string(j) + ", group '" + ds_.schema().group_name(g) + "'");
          std::vector<RowTerm> expr;
          for (const auto& e : w.column(j)) {
            double coef = e.w / wj - (ds_.group(e.row) == g ? e.w / wgj : 0.0);
            if (coef != 0.0) expr.push_back({L().yhat[e.row], coef});
          }
          add_abs_pair(idx_name("dtdi", g, j), std::move(expr), cfg_.lambda, 2.0 * box);
        }
    }
  }

  void add_interpretability() {
    const int V = shape_.num_nodes();
    std::vector<int> branch_features = fq_;
    branch_features.insert(branch_features.end(), fc_.begin(), fc_.end());
    std::sort(branch_features.begin(), branch_features.end());

    if (cfg_.tree_class != TreeClass::kLinearBranching) {
      if (cfg_.max_uses_per_feature > 0) {
        for (int j : branch_features) {
          std::vector<RowTerm> terms;
          for (int v = 0; v < V; ++v) terms.push_back({L().p[v][j], 1.0});
          add_row("interpretability", idx_name("max_uses", j), std::move(terms), RowSense::kLe,
                  static_cast<double>(cfg_.max_uses_per_feature));
        }
      }
      return;
    }

    // linear branching: support binaries b_vj with |p_vj| <= b_vj
    if (cfg_.max_uses_per_feature <= 0 && cfg_.max_features_per_rule <= 0) return;
    std::vector<std::vector<int>> b(V, std::vector<int>(ds_.schema().num_features(), -1));
    for (int v = 0; v < V; ++v)
      for (int j : branch_features)
        b[v][j] = add_var("b_support", idx_name("b", v, j), VarKind::kBinary, 0.0, 1.0);
    for (int v = 0; v < V; ++v)
      for (int j : branch_features) {
        add_row("interpretability", idx_name("support_ub", v, j),
                {{L().p[v][j], 1.0}, {b[v][j], -1.0}}, RowSense::kLe, 0.0);
        add_row("interpretability", idx_name("support_lb", v, j),
                {{L().p[v][j], 1.0}, {b[v][j], 1.0}}, RowSense::kGe, 0.0);
      }
    if (cfg_.max_features_per_rule > 0)
      for (int v = 0; v < V; ++v) {
        std::vector<RowTerm> terms;
        for (int j : branch_features) terms.push_back({b[v][j], 1.0});
        add_row("interpretability", idx_name("max_features", v), std::move(terms), RowSense::kLe,
                static_cast<double>(cfg_.max_features_per_rule));
      }
    if (cfg_.max_uses_per_feature > 0)
      for (int j : branch_features) {
        std::vector<RowTerm> terms;
        for (int v = 0; v < V; ++v) terms.push_back({b[v][j], 1.0});
        add_row("interpretability", idx_name("max_uses", j), std::move(terms), RowSense::kLe,
                static_cast<double>(cfg_.max_uses_per_feature));
      }
  }

  const Dataset& ds_;
  const TreeShape& shape_;
  const BuildConfig& cfg_;
  BuiltModel built_;
  std::vector<int> fq_, fc_;
  double big_m_ = 2.0;
  double eps_ = 1e-6;
};

}  // namespace

BuiltModel build_fair_tree_model(const Dataset& ds, const TreeShape& shape,
                                 const BuildConfig& cfg) {
  return Builder(ds, shape, cfg).run();
}

}  // namespace fairtree
