#pragma once

#include <span>
#include <vector>

#include "fairtree/dataset.hpp"

namespace fairtree {

// Kernel weight matrix w_ij, column j indexed by reference point. Stored
// column-compressed; kNN columns hold exactly k unit entries.
class WeightMatrix {
 public:
  struct Entry {
    int row;
    double w;
  };

  static WeightMatrix unit(int n);  // w_ij = 1 for all pairs, self included

  int size() const { return n_; }
  std::span<const Entry> column(int j) const {
    return {entries_.data() + col_ptr_[j], static_cast<std::size_t>(col_ptr_[j + 1] - col_ptr_[j])};
  }
  double column_sum(int j) const;

  // dense n*n copy (row-major), for small-n reference computations
  std::vector<double> dense() const;

  // builder
  WeightMatrix(int n, std::vector<int> col_ptr, std::vector<Entry> entries)
      : n_(n), col_ptr_(std::move(col_ptr)), entries_(std::move(entries)) {}

 private:
  int n_ = 0;
  std::vector<int> col_ptr_;
  std::vector<Entry> entries_;
};

// Distance over unprotected features of two records: squared Euclidean on
// (normalized) quantitative features plus a 0/1 mismatch term per categorical
// feature, under one square root.
double unprotected_distance(const Dataset& ds, int i, int j);

// w_ij = 1 iff i is among the k nearest neighbors of j, self excluded, ties
// broken toward the smaller index. Requires 1 <= k < |N|.
WeightMatrix knn_weights(const Dataset& ds, int k);

}  // namespace fairtree
