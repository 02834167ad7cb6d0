#pragma once

#include <string>
#include <variant>
#include <vector>

#include "fairtree/dataset.hpp"

namespace fairtree {

// Complete binary tree of depth K: branching nodes in heap order (root 0,
// children 2v+1 / 2v+2), leaves 0..2^K-1 left to right.
struct TreeShape {
  int depth = 1;

  int num_nodes() const { return (1 << depth) - 1; }
  int num_leaves() const { return 1 << depth; }
  int node_level(int node) const;
  // leaves under the left / right child of a node, as [begin, end) leaf ranges
  std::pair<int, int> left_leaves(int node) const;
  std::pair<int, int> right_leaves(int node) const;

  explicit TreeShape(int k) : depth(k) {
    if (k < 1 || k > 10) throw ValidationError("tree depth must be in [1, 10]");
  }
};

struct QuantitativeRule {
  int feature = 0;    // global feature index, quantitative, unprotected
  double cutoff = 0;  // go left iff cutoff >= x
};

struct CategoricalRule {
  int feature = 0;
  std::vector<int> left_levels;  // sorted level ids routed left
};

struct LinearRule {
  std::vector<std::pair<int, double>> weights;  // (quantitative feature, weight), sum to 1
  double cutoff = 0;                            // go left iff cutoff >= w.x
};

using BranchRule = std::variant<QuantitativeRule, CategoricalRule, LinearRule>;

struct LabelLeaf {
  int label = 0;  // label id
};

struct ValueLeaf {
  double value = 0;  // in [-1, 1]
};

struct LinearLeaf {
  std::vector<std::pair<int, double>> coefficients;  // (quantitative feature, coef)
};

using LeafRule = std::variant<LabelLeaf, ValueLeaf, LinearLeaf>;

class DecisionTree {
 public:
  DecisionTree(TreeShape shape, std::vector<BranchRule> branches, std::vector<LeafRule> leaves,
               TaskKind task, std::string schema_fingerprint, NormalizationReport normalization);

  const TreeShape& shape() const { return shape_; }
  TaskKind task() const { return task_; }
  const BranchRule& branch(int node) const { return branches_[node]; }
  const LeafRule& leaf(int l) const { return leaves_[l]; }
  const std::string& schema_fingerprint() const { return fingerprint_; }
  const NormalizationReport& normalization() const { return normalization_; }

  // Route a normalized record to its unique leaf. Boundary cutoff == value
  // goes left.
  int route(const Dataset& ds, int row) const;
  int route(const Record& normalized_record, const FeatureSchema& schema) const;

  // Leaf prediction for a normalized record; linear leaf scores are clamped
  // to [-1, 1].
  int predict_label(const Dataset& ds, int row) const;
  double predict_value(const Dataset& ds, int row) const;

  // per-feature branch counts (nonzero-weight rule)
  std::vector<int> feature_usage(int num_features) const;

  std::string to_json() const;
  static DecisionTree from_json(const std::string& text);

 private:
  TreeShape shape_;
  std::vector<BranchRule> branches_;
  std::vector<LeafRule> leaves_;
  TaskKind task_;
  std::string fingerprint_;
  NormalizationReport normalization_;
};

// Batch prediction over a normalized dataset (parallel over records).
std::vector<int> predict_labels(const DecisionTree& tree, const Dataset& ds);
std::vector<double> predict_values(const DecisionTree& tree, const Dataset& ds);

}  // namespace fairtree
