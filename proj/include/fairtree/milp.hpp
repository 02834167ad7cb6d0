#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairtree/dataset.hpp"
#include "fairtree/fairness.hpp"
#include "fairtree/tree.hpp"

namespace fairtree {

enum class VarKind { kContinuous, kBinary };
enum class RowSense { kLe, kEq, kGe };
enum class ObjectiveSense { kMinimize, kMaximize };

struct Variable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lb = 0.0;
  double ub = 0.0;
};

struct RowTerm {
  int var;
  double coef;
};

struct ConstraintRow {
  std::string name;
  std::vector<RowTerm> terms;
  RowSense sense = RowSense::kLe;
  double rhs = 0.0;
};

// Sparse MILP container: variable registry with bounds and integrality marks,
// constraint rows, linear objective.
class MilpModel {
 public:
  int add_variable(const std::string& name, VarKind kind, double lb, double ub);
  int add_row(const std::string& name, std::vector<RowTerm> terms, RowSense sense, double rhs);

  int var(const std::string& name) const;        // throws if absent
  int find_var(const std::string& name) const;   // -1 if absent

  void set_objective(int var, double coef) { objective_[var] = coef; }
  void add_objective(int var, double coef) { objective_[var] += coef; }
  void set_objective_constant(double c) { objective_constant_ = c; }
  void set_sense(ObjectiveSense s) { sense_ = s; }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const Variable& variable(int j) const { return vars_[j]; }
  const ConstraintRow& row(int r) const { return rows_[r]; }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<ConstraintRow>& rows() const { return rows_; }
  std::span<const double> objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }
  ObjectiveSense sense() const { return sense_; }

  double objective_value(std::span<const double> x) const;
  // max violation over all rows and variable bounds
  double max_violation(std::span<const double> x) const;
  // first row violated beyond tol, or -1
  int first_violated_row(std::span<const double> x, double tol) const;

 private:
  std::vector<Variable> vars_;
  std::vector<ConstraintRow> rows_;
  std::vector<double> objective_;
  double objective_constant_ = 0.0;
  ObjectiveSense sense_ = ObjectiveSense::kMinimize;
  std::unordered_map<std::string, int> by_name_;
};

enum class TreeClass { kClassical, kLinearBranching, kLinearLeafing };

const char* to_string(TreeClass c);

struct BuildConfig {
  TreeClass tree_class = TreeClass::kClassical;
  TaskKind task = TaskKind::kClassification;
  FairnessConfig fairness;
  double lambda = 0.0;
  double big_m = 0.0;           // <= 0: choose per tree class (2 classical, 1+d linear)
  double epsilon = 0.0;         // <= 0: half the minimum nonzero feature gap, floored at 1e-6
  double leaf_coef_box = 10.0;  // box B for linear-leaf coefficients
  int max_uses_per_feature = 0;   // 0 = unlimited
  int max_features_per_rule = 0;  // 0 = unlimited (linear branching)
  bool nonneg_linear_weights = false;
};

// Index maps from structural entities to registry indices. Entries are -1
// when a family is absent from the model.
struct ModelLayout {
  std::vector<std::vector<int>> p;      // [node][feature]
  std::vector<int> q;                   // [node]
  std::vector<std::vector<int>> g_pos;  // [record][node]
  std::vector<std::vector<int>> g_neg;
  std::vector<std::vector<int>> w_q;    // [record][node]
  std::vector<std::vector<int>> w_c;
  std::vector<std::vector<std::vector<int>>> s;  // [node][feature][level]
  std::vector<std::vector<int>> z;      // [record][leaf]
  std::vector<std::vector<int>> u_label;   // [leaf][label] one-hot (classification)
  std::vector<int> u_value;                // [leaf] constant leaf value (regression)
  std::vector<std::vector<int>> u_coef;    // [leaf][quant feature] linear leafing
  std::vector<std::vector<int>> yhat_ind;  // [record][label] prediction indicator
  std::vector<int> yhat;                   // [record] regression prediction
  std::vector<std::vector<int>> products;  // [record][leaf*labels+label] r, or [leaf] rho/theta
  // absolute-value auxiliaries: {variable, >= expr row, >= -expr row}
  std::vector<std::array<int, 3>> abs_aux;
};

struct BuildInfo {
  double big_m = 0.0;
  double epsilon = 0.0;
  std::map<std::string, int> var_counts;  // by family
  std::map<std::string, int> row_counts;  // by constraint family
  int loss_terms = 0;
  int fairness_terms = 0;
  double lambda = 0.0;
  std::string report_json() const;
};

struct BuiltModel {
  MilpModel model;
  ModelLayout layout;
  BuildInfo info;
  TreeShape shape;
  BuildConfig config;
};

// Assemble the fair-tree MILP for a normalized dataset: tree-structure rows,
// quantitative and categorical branching rows, one-leaf-per-record
// assignment, linearized loss plus lambda-weighted discrimination objective,
// and optional interpretability rows.
BuiltModel build_fair_tree_model(const Dataset& ds, const TreeShape& shape,
                                 const BuildConfig& cfg);

// Read the branching and leaf variables out of an integral solution.
// Verifies that re-routing every training record through the extracted tree
// reproduces the solution's leaf assignment.
DecisionTree extract_tree(const BuiltModel& built, const Dataset& ds,
                          std::span<const double> solution,
                          const NormalizationReport& normalization);

// Prediction vector encoded in a solution (label ids / regression values).
std::vector<int> solution_labels(const BuiltModel& built, std::span<const double> solution);
std::vector<double> solution_values(const BuiltModel& built, std::span<const double> solution);

// Full feasible assignment representing a given tree; used for warm starts
// and for the feasibility-embedding tests.
std::vector<double> embed_tree(const BuiltModel& built, const Dataset& ds,
                               const DecisionTree& tree);

// Data-driven epsilon: half the minimum nonzero gap between consecutive
// sorted values over all branching features, floored at 1e-6.
double choose_epsilon(const Dataset& ds);

}  // namespace fairtree
