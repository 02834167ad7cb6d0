#include "fairtree/fairness_ref.hpp"

#include <algorithm>
#include <cmath>

#include "fairtree/weights.hpp"

namespace fairtree::ref {

double didi_c(const Dataset& ds, std::span<const int> labels) {
  const int n = ds.size();
  double total = 0.0;
  for (int y = 0; y < ds.num_labels(); ++y) {
    for (int g = 0; g < ds.num_groups(); ++g) {
      long long cnt_y = 0, cnt_yg = 0, cnt_g = 0;
      for (int i = 0; i < n; ++i) {
        if (labels[i] == y) ++cnt_y;
        if (ds.group(i) == g) {
          ++cnt_g;
          if (labels[i] == y) ++cnt_yg;
        }
      }
      total += std::abs(static_cast<double>(cnt_y) / n -
                        static_cast<double>(cnt_yg) / static_cast<double>(cnt_g));
    }
  }
  return total;
}

double didi_r(const Dataset& ds, std::span<const double> values) {
  const int n = ds.size();
  double total = 0.0;
  for (int g = 0; g < ds.num_groups(); ++g) {
    double num = 0.0, den = 0.0, mean = 0.0;
    for (int i = 0; i < n; ++i) {
      mean += values[i];
      if (ds.group(i) == g) {
        num += values[i];
        den += 1.0;
      }
    }
    total += std::abs(num / den - mean / n);
  }
  return total;
}

double dtdi_c(const Dataset& ds, std::span<const int> labels, std::span<const double> weights) {
  const int n = ds.size();
  double total = 0.0;
  for (int y = 0; y < ds.num_labels(); ++y) {
    for (int g = 0; g < ds.num_groups(); ++g) {
      for (int j = 0; j < n; ++j) {
        double num1 = 0.0, den1 = 0.0, num2 = 0.0, den2 = 0.0;
        for (int i = 0; i < n; ++i) {
          double w = weights[static_cast<std::size_t>(i) * n + j];
          den1 += w;
          if (labels[i] == y) num1 += w;
          if (ds.group(i) == g) {
            den2 += w;
            if (labels[i] == y) num2 += w;
          }
        }
        total += std::abs(num1 / den1 - num2 / den2);
      }
    }
  }
  return total;
}

double dtdi_r(const Dataset& ds, std::span<const double> values, std::span<const double> weights) {
  const int n = ds.size();
  double total = 0.0;
  for (int g = 0; g < ds.num_groups(); ++g) {
    for (int j = 0; j < n; ++j) {
      double num1 = 0.0, den1 = 0.0, num2 = 0.0, den2 = 0.0;
      for (int i = 0; i < n; ++i) {
        double w = weights[static_cast<std::size_t>(i) * n + j];
        den1 += w;
        num1 += w * values[i];
        if (ds.group(i) == g) {
          den2 += w;
          num2 += w * values[i];
        }
      }
      total += std::abs(num1 / den1 - num2 / den2);
    }
  }
  return total;
}

std::vector<double> knn_dense(const Dataset& ds, int k) {
  const int n = ds.size();
  std::vector<double> w(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) {
    std::vector<std::pair<double, int>> cand;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      cand.emplace_back(unprotected_distance(ds, i, j), i);
    }
    std::sort(cand.begin(), cand.end());
    for (int t = 0; t < k; ++t) w[static_cast<std::size_t>(cand[t].second) * n + j] = 1.0;
  }
  return w;
}

std::vector<double> gamma_values(const Dataset& ds, std::span<const int> predictions,
                                 std::span<const double> weights) {
  const int n = ds.size();
  const int positive = ds.num_labels() - 1;
  std::vector<double> out(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double num1 = 0.0, den1 = 0.0, num2 = 0.0, den2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double w = weights[static_cast<std::size_t>(i) * n + j];
      den1 += w;
      if (predictions[i] == positive) num1 += w;
      if (ds.group(i) == ds.group(j)) {
        den2 += w;
        if (predictions[i] == positive) num2 += w;
      }
    }
    out[j] = num2 / den2 - num1 / den1;
  }
  return out;
}

}  // namespace fairtree::ref
