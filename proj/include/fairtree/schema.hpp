#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairtree/error.hpp"

namespace fairtree {

enum class FeatureKind { kQuantitative, kCategorical };
enum class FeatureRole { kUnprotected, kProtected };
enum class TaskKind { kClassification, kRegression };

const char* to_string(FeatureKind kind);
const char* to_string(FeatureRole role);
const char* to_string(TaskKind task);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kQuantitative;
  FeatureRole role = FeatureRole::kUnprotected;
  std::vector<std::string> levels;  // categorical only, non-empty, duplicate-free
};

struct LabelSpec {
  std::string name;
  TaskKind task = TaskKind::kClassification;
  std::vector<std::string> levels;  // classification alphabet
};

// Feature layout of a tabular dataset. Protected features are categorical and
// never enter branching rules; quantitative protected attributes must be
// binned before ingestion.
class FeatureSchema {
 public:
  FeatureSchema(std::vector<FeatureSpec> features, LabelSpec label);

  // Plain-text schema config, one declaration per line:
  //   feature <name> kind=quantitative|categorical role=protected|unprotected
  //           [levels=a,b,c]
  //   label <name> task=classification|regression [levels=-1,1]
  // '#' starts a comment.
  static FeatureSchema parse_text(const std::string& text);
  static FeatureSchema parse_file(const std::string& path);

  int num_features() const { return static_cast<int>(features_.size()); }
  const FeatureSpec& feature(int j) const { return features_[j]; }
  const std::vector<FeatureSpec>& features() const { return features_; }
  const LabelSpec& label() const { return label_; }
  TaskKind task() const { return label_.task; }

  int feature_index(const std::string& name) const;  // -1 if absent
  int level_index(int feature, const std::string& level) const;  // -1 if absent
  int label_index(const std::string& level) const;               // -1 if absent
  int num_label_levels() const { return static_cast<int>(label_.levels.size()); }

  std::vector<int> protected_features() const;
  std::vector<int> unprotected_features() const;
  std::vector<int> branching_quantitative() const;  // unprotected quantitative
  std::vector<int> branching_categorical() const;   // unprotected categorical

  // Number of protected-level combos |X_p| (cross product over protected
  // features). Group ids enumerate the combos in mixed-radix order.
  int num_groups() const;
  std::string group_name(int group) const;

  // Stable content hash of the schema; stored in models and checked at
  // prediction time.
  std::string fingerprint() const;

 private:
  void validate() const;

  std::vector<FeatureSpec> features_;
  LabelSpec label_;
};

// FNV-1a 64-bit, used for schema fingerprints and artifact manifests.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string fnv1a64_hex(const std::string& data);

}  // namespace fairtree
