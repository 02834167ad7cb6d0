#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairtree/schema.hpp"

namespace fairtree {

// One data point in schema order: quantitative values by quantitative slot,
// categorical level ids by categorical slot.
struct Record {
  std::vector<double> quant;
  std::vector<int> cat;
};

// Affine maps applied by normalize(); kept with trained models so raw records
// can be normalized at prediction time and predictions de-normalized.
struct NormalizationReport {
  struct AffineMap {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    bool constant = false;  // constant columns map to 0 by convention
  };
  std::vector<AffineMap> features;      // one per quantitative feature, schema order
  std::optional<AffineMap> label;       // regression labels -> [-1, 1]

  double normalize_feature(int slot, double v) const;
  double normalize_label(double v) const;
  double denormalize_label(double v) const;
};

class Dataset {
 public:
  Dataset(FeatureSchema schema, std::vector<Record> records,
          std::vector<int> class_labels, std::vector<double> reg_values);

  const FeatureSchema& schema() const { return schema_; }
  int size() const { return static_cast<int>(records_.size()); }
  TaskKind task() const { return schema_.task(); }

  // feature access by global feature index
  double quant(int row, int feature) const { return records_[row].quant[quant_slot_[feature]]; }
  int cat(int row, int feature) const { return records_[row].cat[cat_slot_[feature]]; }
  int quant_slot(int feature) const { return quant_slot_[feature]; }
  int cat_slot(int feature) const { return cat_slot_[feature]; }
  const Record& record(int row) const { return records_[row]; }

  int label_id(int row) const { return class_labels_[row]; }
  double value(int row) const { return reg_values_[row]; }
  std::span<const int> label_ids() const { return class_labels_; }
  std::span<const double> values() const { return reg_values_; }
  int num_labels() const { return schema_.num_label_levels(); }

  // protected group of a record (cross product of protected levels)
  int num_groups() const { return schema_.num_groups(); }
  int group(int row) const { return groups_[row]; }
  std::span<const int> groups() const { return groups_; }
  int group_size(int g) const { return group_sizes_[g]; }

  Dataset subset(std::span<const int> rows) const;

 private:
  FeatureSchema schema_;
  std::vector<Record> records_;
  std::vector<int> class_labels_;   // classification
  std::vector<double> reg_values_;  // regression
  std::vector<int> quant_slot_, cat_slot_;  // global feature index -> slot
  std::vector<int> groups_;
  std::vector<int> group_sizes_;
};

// Parse a CSV file with a header row against the schema. Every header column
// must be a schema feature or the label column; all schema features and the
// label must be present. Values are base-10 decimals / exact level strings.
Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                 const std::string& label_column);
Dataset load_csv_text(const std::string& text, const FeatureSchema& schema,
                      const std::string& label_column);

// Min-max normalization: quantitative features to [0,1] (constant columns to
// 0), regression labels to [-1,1]. Idempotent.
std::pair<Dataset, NormalizationReport> normalize(const Dataset& ds);

// Apply an existing report (e.g. the training fold's maps to a test fold).
Dataset apply_normalization(const Dataset& ds, const NormalizationReport& report);
Record normalize_record(const Record& r, const NormalizationReport& report);

struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> test_indices;  // pairwise disjoint, partition 0..n-1

  std::vector<int> train_indices(int fold) const;
};

// Deterministic shuffled k-fold split; fold sizes differ by at most one.
FoldPlan make_folds(const Dataset& ds, int k, std::uint64_t seed);

// Deterministic Fisher-Yates permutation of 0..n-1 (does not depend on the
// standard library's distribution implementations).
std::vector<int> shuffled_indices(int n, std::uint64_t seed);

}  // namespace fairtree
