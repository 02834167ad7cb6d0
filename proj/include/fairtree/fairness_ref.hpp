#pragma once

#include <span>
#include <vector>

#include "fairtree/dataset.hpp"

namespace fairtree::ref {

// Serial direct-enumeration implementations of the discrimination indices,
// written straight off their definitions with nested loops and dense weights.
// Kept as the independent reference for tests and as the baseline in the
// kernel benchmark; not used by the library itself.

double didi_c(const Dataset& ds, std::span<const int> labels);
double didi_r(const Dataset& ds, std::span<const double> values);

// weights: dense row-major n*n, w[i*n + j] = w_ij
double dtdi_c(const Dataset& ds, std::span<const int> labels, std::span<const double> weights);
double dtdi_r(const Dataset& ds, std::span<const double> values, std::span<const double> weights);

// brute-force kNN by full pairwise distance sort
std::vector<double> knn_dense(const Dataset& ds, int k);

std::vector<double> gamma_values(const Dataset& ds, std::span<const int> predictions,
                                 std::span<const double> weights);

}  // namespace fairtree::ref
