#pragma once

#include <span>
#include <string>
#include <vector>

#include "fairtree/dataset.hpp"
#include "fairtree/weights.hpp"

namespace fairtree {

enum class FairnessIndex { kDidi, kDtdi };

struct KernelSpec {
  enum class Kind { kUnit, kKnn };
  Kind kind = Kind::kUnit;
  int k = 5;  // kNN neighbor count
};

struct FairnessConfig {
  FairnessIndex index = FairnessIndex::kDidi;
  KernelSpec kernel;
  // On a zero kernel denominator, retry with unit weights instead of failing.
  bool unit_fallback = false;
};

// Disparate impact index of a classification labeling: summed absolute gaps
// between overall and per-group label frequencies. Labels are label ids
// (ground truth or predictions). Errors on an empty protected group.
double didi_c(const Dataset& ds, std::span<const int> labels);

// Regression form: summed absolute gaps between group means and the global
// mean.
double didi_r(const Dataset& ds, std::span<const double> values);

// Disparate treatment index: per reference point j, kernel-weighted label
// frequencies conditional on each protected group vs. unconditional, absolute
// gaps summed over (label, group, j). Errors on a zero denominator.
double dtdi_c(const Dataset& ds, std::span<const int> labels, const WeightMatrix& w);
double dtdi_r(const Dataset& ds, std::span<const double> values, const WeightMatrix& w);

WeightMatrix make_weights(const Dataset& ds, const KernelSpec& spec);

// Index selected by cfg on predictions (or ground truth), with the optional
// unit-weight fallback applied for DTDI.
double index_of_labels(const Dataset& ds, std::span<const int> labels,
                       const FairnessConfig& cfg, const WeightMatrix& w);
double index_of_values(const Dataset& ds, std::span<const double> values,
                       const FairnessConfig& cfg, const WeightMatrix& w);

// Discrimination level in percent: 100 * index(predictions) / index(data).
// A zero data index yields 0 when the prediction index is also (numerically)
// zero and +infinity otherwise.
double discrimination_level_pct(double prediction_index, double data_index);

// Empirical P(predicted | true, group) table, plus the group-independent
// P(predicted | true) rows it is compared against.
struct MistreatmentTable {
  int num_labels = 0;
  int num_groups = 0;
  // overall[y][yp] = P(prediction yp | true label y); row absent if no record
  // has true label y.
  std::vector<std::vector<double>> overall;
  std::vector<bool> overall_present;
  // per_group[g][y][yp]; cell row (g, y) absent if no record matches.
  std::vector<std::vector<std::vector<double>>> per_group;
  std::vector<std::vector<bool>> present;

  // largest |per_group - overall| over present cells
  double max_deviation() const;
};

MistreatmentTable mistreatment_table(const Dataset& ds, std::span<const int> predictions);

// Pointwise disparate-treatment estimate for the positive label (the last
// level of the label alphabet): gamma(x_j) = kernel estimate of
// P(y+ | x_unprot, x_prot) - P(y+ | x_unprot) at each reference point.
struct GammaResult {
  std::vector<double> gammas;    // one per included point
  std::vector<int> point_ids;    // matching reference indices
  int excluded = 0;              // points dropped for zero denominators
};

GammaResult gamma_distribution(const Dataset& ds, std::span<const int> predictions,
                               const WeightMatrix& w);

}  // namespace fairtree
