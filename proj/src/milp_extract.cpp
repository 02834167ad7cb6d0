#include <algorithm>
#include <cmath>

#include "fairtree/milp.hpp"

namespace fairtree {

namespace {

constexpr double kIntTol = 1e-6;

void check_integral(const BuiltModel& built, std::span<const double> x) {
  const auto& model = built.model;
  for (int j = 0; j < model.num_vars(); ++j) {
    if (model.variable(j).kind != VarKind::kBinary) continue;
    double v = x[j];
    if (std::abs(v - std::round(v)) > kIntTol)
      throw ConsistencyError("extract: binary '" + model.variable(j).name +
                             "' is fractional (" + std::to_string(v) + ")");
  }
}

bool is_one(double v) { return v > 0.5; }

}  // namespace

DecisionTree extract_tree(const BuiltModel& built, const Dataset& ds,
                          std::span<const double> solution,
                          const NormalizationReport& normalization) {
  check_integral(built, solution);
  const auto& L = built.layout;
  const auto& cfg = built.config;
  const auto& shape = built.shape;
  const auto& schema = ds.schema();
  const double eps = built.info.epsilon;

  auto fq = schema.branching_quantitative();
  auto fc = schema.branching_categorical();
  std::vector<int> branch_features = fq;
  branch_features.insert(branch_features.end(), fc.begin(), fc.end());
  std::sort(branch_features.begin(), branch_features.end());

  std::vector<BranchRule> branches;
  for (int v = 0; v < shape.num_nodes(); ++v) {
    if (cfg.tree_class == TreeClass::kLinearBranching) {
      LinearRule rule;
      for (int j : branch_features) {
        double w = solution[L.p[v][j]];
        if (std::abs(w) > 1e-9) rule.weights.emplace_back(j, w);
      }
      // nudging the cutoff into the epsilon margin makes re-routing immune
      // to LP tolerance slop at the boundary
      rule.cutoff = solution[L.q[v]] + eps * 0.5;
      branches.push_back(std::move(rule));
      continue;
    }
    int picked = -1;
    for (int j : branch_features)
      if (is_one(solution[L.p[v][j]])) {
        picked = j;
        break;
      }
    if (picked < 0)
      throw ConsistencyError("extract: node " + std::to_string(v) + " has no branching feature");
    if (schema.feature(picked).kind == FeatureKind::kQuantitative) {
      double cutoff = std::min(1.0, solution[L.q[v]] + eps * 0.5);
      branches.push_back(QuantitativeRule{picked, cutoff});
    } else {
      CategoricalRule rule;
      rule.feature = picked;
      for (std::size_t k = 0; k < L.s[v][picked].size(); ++k)
        if (is_one(solution[L.s[v][picked][k]])) rule.left_levels.push_back(static_cast<int>(k));
      branches.push_back(std::move(rule));
    }
  }

  std::vector<LeafRule> leaves;
  for (int l = 0; l < shape.num_leaves(); ++l) {
    if (cfg.task == TaskKind::kClassification) {
      int best = 0;
      double best_v = -1.0;
      for (int y = 0; y < ds.num_labels(); ++y)
        if (solution[L.u_label[l][y]] > best_v) {
          best_v = solution[L.u_label[l][y]];
          best = y;
        }
      leaves.push_back(LabelLeaf{best});
    } else if (cfg.tree_class == TreeClass::kLinearLeafing) {
      LinearLeaf rule;
      for (int j : fq) rule.coefficients.emplace_back(j, solution[L.u_coef[l][j]]);
      leaves.push_back(std::move(rule));
    } else {
      leaves.push_back(ValueLeaf{std::clamp(solution[L.u_value[l]], -1.0, 1.0)});
    }
  }

  DecisionTree tree(shape, std::move(branches), std::move(leaves), cfg.task,
                    schema.fingerprint(), normalization);

  // routing consistency: the extracted tree must reproduce the solver's z
  for (int i = 0; i < ds.size(); ++i) {
    int solver_leaf = -1;
    for (int l = 0; l < shape.num_leaves(); ++l)
      if (is_one(solution[L.z[i][l]])) {
        solver_leaf = l;
        break;
      }
    int routed = tree.route(ds, i);
    if (routed != solver_leaf)
      throw ConsistencyError("extract: record " + std::to_string(i) + " routes to leaf " +
                             std::to_string(routed) + " but solver assigned leaf " +
                             std::to_string(solver_leaf));
  }
  return tree;
}

std::vector<int> solution_labels(const BuiltModel& built, std::span<const double> solution) {
  const auto& L = built.layout;
  std::vector<int> out(L.yhat_ind.size());
  for (std::size_t i = 0; i < L.yhat_ind.size(); ++i) {
    int best = 0;
    double best_v = -1.0;
    for (std::size_t y = 0; y < L.yhat_ind[i].size(); ++y)
      if (solution[L.yhat_ind[i][y]] > best_v) {
        best_v = solution[L.yhat_ind[i][y]];
        best = static_cast<int>(y);
      }
    out[i] = best;
  }
  return out;
}

std::vector<double> solution_values(const BuiltModel& built, std::span<const double> solution) {
  const auto& L = built.layout;
  std::vector<double> out(L.yhat.size());
  for (std::size_t i = 0; i < L.yhat.size(); ++i) out[i] = solution[L.yhat[i]];
  return out;
}

std::vector<double> embed_tree(const BuiltModel& built, const Dataset& ds,
                               const DecisionTree& tree) {
  const auto& L = built.layout;
  const auto& cfg = built.config;
  const auto& shape = built.shape;
  const auto& model = built.model;
  const int n = ds.size();
  const int nl = shape.num_leaves();

  std::vector<double> x(model.num_vars(), 0.0);

  auto fq = ds.schema().branching_quantitative();

  for (int v = 0; v < shape.num_nodes(); ++v) {
    const BranchRule& rule = tree.branch(v);
    bool quant_branch = false;
    double cutoff = 0.0;
    if (const auto* q = std::get_if<QuantitativeRule>(&rule)) {
      x[L.p[v][q->feature]] = 1.0;
      x[L.q[v]] = std::clamp(q->cutoff, 0.0, 1.0);
      quant_branch = true;
      cutoff = x[L.q[v]];
    } else if (const auto* c = std::get_if<CategoricalRule>(&rule)) {
      x[L.p[v][c->feature]] = 1.0;
      for (int k : c->left_levels) x[L.s[v][c->feature][k]] = 1.0;
    } else {
      const auto& lin = std::get<LinearRule>(rule);
      for (auto& [j, wj] : lin.weights) x[L.p[v][j]] = wj;
      x[L.q[v]] = lin.cutoff;
      quant_branch = true;
      cutoff = lin.cutoff;
    }

    if (!L.g_pos.empty()) {
      for (int i = 0; i < n; ++i) {
        double score = 0.0;
        if (quant_branch) {
          // same term order as row 10c so the equality holds exactly
          for (int j : fq) score += x[L.p[v][j]] * ds.quant(i, j);
          double gap = cutoff - score;
          if (gap >= 0.0) {
            x[L.w_q[i][v]] = 1.0;
            x[L.g_pos[i][v]] = gap;
          } else {
            x[L.w_q[i][v]] = 0.0;
            x[L.g_neg[i][v]] = -gap;
          }
        } else {
          // categorical branch: q = g = 0 forces w^q = 1 through 10f
          x[L.w_q[i][v]] = 1.0;
        }
      }
    }
    if (!L.w_c.empty()) {
      for (int i = 0; i < n; ++i) {
        if (const auto* c = std::get_if<CategoricalRule>(&rule)) {
          int lvl = ds.cat(i, c->feature);
          x[L.w_c[i][v]] =
              std::binary_search(c->left_levels.begin(), c->left_levels.end(), lvl) ? 1.0 : 0.0;
        } else {
          x[L.w_c[i][v]] = 0.0;
        }
      }
    }
  }

  // leaf assignment by routing
  std::vector<int> leaf_of(n);
  for (int i = 0; i < n; ++i) {
    leaf_of[i] = tree.route(ds, i);
    x[L.z[i][leaf_of[i]]] = 1.0;
  }

  // leaf predictors + products + predictions
  if (cfg.task == TaskKind::kClassification) {
    const int ny = ds.num_labels();
    for (int l = 0; l < nl; ++l) {
      const auto* leaf = std::get_if<LabelLeaf>(&tree.leaf(l));
      if (!leaf) throw ConsistencyError("embed: leaf rule does not match classification model");
      x[L.u_label[l][leaf->label]] = 1.0;
    }
    for (int i = 0; i < n; ++i) {
      int l = leaf_of[i];
      int y = std::get<LabelLeaf>(tree.leaf(l)).label;
      x[L.products[i][static_cast<std::size_t>(l) * ny + y]] = 1.0;
      x[L.yhat_ind[i][y]] = 1.0;
    }
  } else {
    for (int l = 0; l < nl; ++l) {
      if (const auto* leaf = std::get_if<ValueLeaf>(&tree.leaf(l))) {
        x[L.u_value[l]] = leaf->value;
      } else {
        const auto& lin = std::get<LinearLeaf>(tree.leaf(l));
        for (auto& [j, cj] : lin.coefficients) x[L.u_coef[l][j]] = cj;
      }
    }
    for (int i = 0; i < n; ++i) {
      int l = leaf_of[i];
      double score = 0.0;
      if (cfg.tree_class == TreeClass::kLinearLeafing) {
        for (int j : fq)
          if (ds.quant(i, j) != 0.0) score += x[L.u_coef[l][j]] * ds.quant(i, j);
      } else {
        score = x[L.u_value[l]];
      }
      x[L.products[i][l]] = score;
      x[L.yhat[i]] = score;
    }
  }

  // absolute-value auxiliaries: t = max over its two rows of (activity - rhs)
  for (const auto& aux : L.abs_aux) {
    double t = model.variable(aux[0]).lb;
    for (int which = 1; which <= 2; ++which) {
      const auto& row = model.row(aux[which]);
      double act = 0.0;
      for (const auto& term : row.terms)
        if (term.var != aux[0]) act += term.coef * x[term.var];
      t = std::max(t, act - row.rhs);
    }
    x[aux[0]] = t;
  }

  return x;
}

}  // namespace fairtree
