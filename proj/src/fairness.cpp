#include "fairtree/fairness.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace fairtree {

namespace {

void check_groups_nonempty(const Dataset& ds) {
  for (int g = 0; g < ds.num_groups(); ++g)
    if (ds.group_size(g) == 0)
      throw ValidationError("empty protected group '" + ds.schema().group_name(g) + "'");
}

}  // namespace

double didi_c(const Dataset& ds, std::span<const int> labels) {
  if (ds.task() != TaskKind::kClassification)
    throw ValidationError("didi_c requires a classification dataset");
  check_groups_nonempty(ds);
  const int n = ds.size();
  const int ny = ds.num_labels();
  const int ng = ds.num_groups();

  std::vector<long long> cnt_y(ny, 0);
  std::vector<long long> cnt_yg(static_cast<std::size_t>(ny) * ng, 0);
  for (int i = 0; i < n; ++i) {
    ++cnt_y[labels[i]];
    ++cnt_yg[static_cast<std::size_t>(labels[i]) * ng + ds.group(i)];
  }
  double total = 0.0;
  for (int y = 0; y < ny; ++y)
    for (int g = 0; g < ng; ++g) {
      double overall = static_cast<double>(cnt_y[y]) / n;
      double in_group = static_cast<double>(cnt_yg[static_cast<std::size_t>(y) * ng + g]) /
                        ds.group_size(g);
      total += std::abs(overall - in_group);
    }
  return total;
}

double didi_r(const Dataset& ds, std::span<const double> values) {
  check_groups_nonempty(ds);
  const int n = ds.size();
  const int ng = ds.num_groups();
  double sum = 0.0;
  std::vector<double> group_sum(ng, 0.0);
  for (int i = 0; i < n; ++i) {
    sum += values[i];
    group_sum[ds.group(i)] += values[i];
  }
  double mean = sum / n;
  double total = 0.0;
  for (int g = 0; g < ng; ++g)
    total += std::abs(group_sum[g] / ds.group_size(g) - mean);
  return total;
}

double dtdi_c(const Dataset& ds, std::span<const int> labels, const WeightMatrix& w) {
  if (ds.task() != TaskKind::kClassification)
    throw ValidationError("dtdi_c requires a classification dataset");
  check_groups_nonempty(ds);
  const int n = ds.size();
  const int ny = ds.num_labels();
  const int ng = ds.num_groups();

  std::vector<double> per_j(n, 0.0);
  std::string error;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    std::vector<double> wy(ny, 0.0);
    std::vector<double> wyg(static_cast<std::size_t>(ny) * ng, 0.0);
    std::vector<double> wg(ng, 0.0);
    double wj = 0.0;
    for (const auto& e : w.column(j)) {
      wj += e.w;
      wg[ds.group(e.row)] += e.w;
      wy[labels[e.row]] += e.w;
      wyg[static_cast<std::size_t>(labels[e.row]) * ng + ds.group(e.row)] += e.w;
    }
    bool bad = wj <= 0.0;
    for (int g = 0; g < ng && !bad; ++g) bad = wg[g] <= 0.0;
    if (bad) {
#pragma omp critical
      {
        if (error.empty()) {
          int g = 0;
          while (g < ng && wg[g] > 0.0) ++g;
          error = "dtdi: zero kernel denominator at reference point " + std::to_string(j) +
                  (wj <= 0.0 ? " (empty column)"
                             : ", group '" + ds.schema().group_name(g) + "'");
        }
      }
      continue;
    }
    double term = 0.0;
    for (int y = 0; y < ny; ++y)
      for (int g = 0; g < ng; ++g)
        term += std::abs(wy[y] / wj - wyg[static_cast<std::size_t>(y) * ng + g] / wg[g]);
    per_j[j] = term;
  }
  if (!error.empty()) throw ValidationError(error);
  // serial reduction in index order keeps results thread-count independent
  double total = 0.0;
  for (int j = 0; j < n; ++j) total += per_j[j];
  return total;
}

double dtdi_r(const Dataset& ds, std::span<const double> values, const WeightMatrix& w) {
  check_groups_nonempty(ds);
  const int n = ds.size();
  const int ng = ds.num_groups();

  std::vector<double> per_j(n, 0.0);
  std::string error;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    std::vector<double> wg(ng, 0.0), wvg(ng, 0.0);
    double wj = 0.0, wv = 0.0;
    for (const auto& e : w.column(j)) {
      wj += e.w;
      wv += e.w * values[e.row];
      wg[ds.group(e.row)] += e.w;
      wvg[ds.group(e.row)] += e.w * values[e.row];
    }
    bool bad = wj <= 0.0;
    for (int g = 0; g < ng && !bad; ++g) bad = wg[g] <= 0.0;
    if (bad) {
#pragma omp critical
      {
        if (error.empty()) {
          int g = 0;
          while (g < ng && wg[g] > 0.0) ++g;
          error = "dtdi: zero kernel denominator at reference point " + std::to_string(j) +
                  (wj <= 0.0 ? " (empty column)"
                             : ", group '" + ds.schema().group_name(g) + "'");
        }
      }
      continue;
    }
    double term = 0.0;
    for (int g = 0; g < ng; ++g) term += std::abs(wv / wj - wvg[g] / wg[g]);
    per_j[j] = term;
  }
  if (!error.empty()) throw ValidationError(error);
  double total = 0.0;
  for (int j = 0; j < n; ++j) total += per_j[j];
  return total;
}

WeightMatrix make_weights(const Dataset& ds, const KernelSpec& spec) {
  if (spec.kind == KernelSpec::Kind::kKnn) return knn_weights(ds, spec.k);
  return WeightMatrix::unit(ds.size());
}

double index_of_labels(const Dataset& ds, std::span<const int> labels,
                       const FairnessConfig& cfg, const WeightMatrix& w) {
  if (cfg.index == FairnessIndex::kDidi) return didi_c(ds, labels);
  try {
    return dtdi_c(ds, labels, w);
  } catch (const ValidationError&) {
    if (!cfg.unit_fallback) throw;
    return dtdi_c(ds, labels, WeightMatrix::unit(ds.size()));
  }
}

double index_of_values(const Dataset& ds, std::span<const double> values,
                       const FairnessConfig& cfg, const WeightMatrix& w) {
  if (cfg.index == FairnessIndex::kDidi) return didi_r(ds, values);
  try {
    return dtdi_r(ds, values, w);
  } catch (const ValidationError&) {
    if (!cfg.unit_fallback) throw;
    return dtdi_r(ds, values, WeightMatrix::unit(ds.size()));
  }
}

double discrimination_level_pct(double prediction_index, double data_index) {
  if (data_index > 0.0) return 100.0 * prediction_index / data_index;
  return prediction_index <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
}

double MistreatmentTable::max_deviation() const {
  double dev = 0.0;
  for (int g = 0; g < num_groups; ++g)
    for (int y = 0; y < num_labels; ++y) {
      if (!present[g][y] || !overall_present[y]) continue;
      for (int yp = 0; yp < num_labels; ++yp)
        dev = std::max(dev, std::abs(per_group[g][y][yp] - overall[y][yp]));
    }
  return dev;
}

MistreatmentTable mistreatment_table(const Dataset& ds, std::span<const int> predictions) {
  if (ds.task() != TaskKind::kClassification)
    throw ValidationError("mistreatment table requires a classification dataset");
  const int n = ds.size();
  const int ny = ds.num_labels();
  const int ng = ds.num_groups();

  MistreatmentTable t;
  t.num_labels = ny;
  t.num_groups = ng;
  t.overall.assign(ny, std::vector<double>(ny, 0.0));
  t.overall_present.assign(ny, false);
  t.per_group.assign(ng, std::vector<std::vector<double>>(ny, std::vector<double>(ny, 0.0)));
  t.present.assign(ng, std::vector<bool>(ny, false));

  std::vector<long long> cnt_y(ny, 0);
  std::vector<long long> cnt_gy(static_cast<std::size_t>(ng) * ny, 0);
  for (int i = 0; i < n; ++i) {
    int y = ds.label_id(i), g = ds.group(i), yp = predictions[i];
    ++cnt_y[y];
    ++cnt_gy[static_cast<std::size_t>(g) * ny + y];
    t.overall[y][yp] += 1.0;
    t.per_group[g][y][yp] += 1.0;
  }
  for (int y = 0; y < ny; ++y) {
    if (cnt_y[y] == 0) continue;
    t.overall_present[y] = true;
    for (int yp = 0; yp < ny; ++yp) t.overall[y][yp] /= static_cast<double>(cnt_y[y]);
  }
  for (int g = 0; g < ng; ++g)
    for (int y = 0; y < ny; ++y) {
      long long c = cnt_gy[static_cast<std::size_t>(g) * ny + y];
      if (c == 0) continue;
      t.present[g][y] = true;
      for (int yp = 0; yp < ny; ++yp) t.per_group[g][y][yp] /= static_cast<double>(c);
    }
  return t;
}

GammaResult gamma_distribution(const Dataset& ds, std::span<const int> predictions,
                               const WeightMatrix& w) {
  if (ds.task() != TaskKind::kClassification)
    throw ValidationError("gamma audit requires a classification dataset");
  check_groups_nonempty(ds);
  const int n = ds.size();
  const int positive = ds.num_labels() - 1;

  std::vector<double> gamma(n, 0.0);
  std::vector<char> ok(n, 0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    const int gj = ds.group(j);
    double wj = 0.0, wpos = 0.0, wgrp = 0.0, wgrp_pos = 0.0;
    for (const auto& e : w.column(j)) {
      wj += e.w;
      if (predictions[e.row] == positive) wpos += e.w;
      if (ds.group(e.row) == gj) {
        wgrp += e.w;
        if (predictions[e.row] == positive) wgrp_pos += e.w;
      }
    }
    if (wj <= 0.0 || wgrp <= 0.0) continue;
    gamma[j] = wgrp_pos / wgrp - wpos / wj;
    ok[j] = 1;
  }
  GammaResult out;
  for (int j = 0; j < n; ++j) {
    if (ok[j]) {
      out.gammas.push_back(gamma[j]);
      out.point_ids.push_back(j);
    } else {
      ++out.excluded;
    }
  }
  return out;
}

}  // namespace fairtree
