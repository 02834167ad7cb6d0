#include "fairtree/weights.hpp"

#include <algorithm>
#include <cmath>

namespace fairtree {

WeightMatrix WeightMatrix::unit(int n) {
  std::vector<int> col_ptr(n + 1);
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    col_ptr[j] = static_cast<int>(entries.size());
    for (int i = 0; i < n; ++i) entries.push_back({i, 1.0});
  }
  col_ptr[n] = static_cast<int>(entries.size());
  return WeightMatrix(n, std::move(col_ptr), std::move(entries));
}

double WeightMatrix::column_sum(int j) const {
  double s = 0.0;
  for (const auto& e : column(j)) s += e.w;
  return s;
}

std::vector<double> WeightMatrix::dense() const {
  std::vector<double> out(static_cast<std::size_t>(n_) * n_, 0.0);
  for (int j = 0; j < n_; ++j)
    for (const auto& e : column(j)) out[static_cast<std::size_t>(e.row) * n_ + j] = e.w;
  return out;
}

double unprotected_distance(const Dataset& ds, int i, int j) {
  const auto& schema = ds.schema();
  double sq = 0.0;
  for (int f = 0; f < schema.num_features(); ++f) {
    if (schema.feature(f).role != FeatureRole::kUnprotected) continue;
    if (schema.feature(f).kind == FeatureKind::kQuantitative) {
      double d = ds.quant(i, f) - ds.quant(j, f);
      sq += d * d;
    } else {
      sq += ds.cat(i, f) == ds.cat(j, f) ? 0.0 : 1.0;
    }
  }
  return std::sqrt(sq);
}

WeightMatrix knn_weights(const Dataset& ds, int k) {
  const int n = ds.size();
  if (k < 1 || k >= n)
    throw ValidationError("knn: k=" + std::to_string(k) + " must satisfy 1 <= k < " +
                          std::to_string(n));
  if (ds.schema().unprotected_features().empty())
    throw ValidationError("knn: no unprotected features to measure distance on");

  std::vector<int> col_ptr(n + 1);
  std::vector<WeightMatrix::Entry> entries(static_cast<std::size_t>(n) * k);
  for (int j = 0; j <= n; ++j) col_ptr[j] = j * k;

#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n - 1);
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      cand.emplace_back(unprotected_distance(ds, i, j), i);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());  // ties -> smaller index
    for (int t = 0; t < k; ++t) entries[static_cast<std::size_t>(j) * k + t] = {cand[t].second, 1.0};
    std::sort(entries.begin() + static_cast<std::size_t>(j) * k,
              entries.begin() + static_cast<std::size_t>(j) * k + k,
              [](const auto& a, const auto& b) { return a.row < b.row; });
  }
  return WeightMatrix(n, std::move(col_ptr), std::move(entries));
}

}  // namespace fairtree
