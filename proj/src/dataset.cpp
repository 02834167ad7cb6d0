#include "fairtree/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace fairtree {

double NormalizationReport::normalize_feature(int slot, double v) const {
  const auto& m = features[slot];
  if (m.constant) return 0.0;
  return (v - m.lo) / (m.hi - m.lo);
}

double NormalizationReport::normalize_label(double v) const {
  if (!label) return v;
  if (label->constant) return 0.0;
  return 2.0 * (v - label->lo) / (label->hi - label->lo) - 1.0;
}

double NormalizationReport::denormalize_label(double v) const {
  if (!label) return v;
  if (label->constant) return label->lo;
  return label->lo + (v + 1.0) * 0.5 * (label->hi - label->lo);
}

Dataset::Dataset(FeatureSchema schema, std::vector<Record> records,
                 std::vector<int> class_labels, std::vector<double> reg_values)
    : schema_(std::move(schema)),
      records_(std::move(records)),
      class_labels_(std::move(class_labels)),
      reg_values_(std::move(reg_values)) {
  if (records_.empty()) throw ValidationError("empty dataset");

  const int d = schema_.num_features();
  quant_slot_.assign(d, -1);
  cat_slot_.assign(d, -1);
  int nq = 0, nc = 0;
  for (int j = 0; j < d; ++j) {
    if (schema_.feature(j).kind == FeatureKind::kQuantitative) quant_slot_[j] = nq++;
    else cat_slot_[j] = nc++;
  }

  const int n = size();
  if (task() == TaskKind::kClassification) {
    if (static_cast<int>(class_labels_.size()) != n)
      throw ValidationError("label count does not match record count");
    for (int id : class_labels_)
      if (id < 0 || id >= schema_.num_label_levels())
        throw ValidationError("label id out of range");
  } else {
    if (static_cast<int>(reg_values_.size()) != n)
      throw ValidationError("label count does not match record count");
  }
  for (const auto& r : records_) {
    if (static_cast<int>(r.quant.size()) != nq || static_cast<int>(r.cat.size()) != nc)
      throw ValidationError("record does not conform to schema");
  }

  // protected group ids, mixed radix over protected features
  const auto prot = schema_.protected_features();
  groups_.resize(n);
  for (int i = 0; i < n; ++i) {
    int g = 0, radix = 1;
    for (int j : prot) {
      g += records_[i].cat[cat_slot_[j]] * radix;
      radix *= static_cast<int>(schema_.feature(j).levels.size());
    }
    groups_[i] = g;
  }
  group_sizes_.assign(schema_.num_groups(), 0);
  for (int g : groups_) ++group_sizes_[g];
}

Dataset Dataset::subset(std::span<const int> rows) const {
  std::vector<Record> recs;
  std::vector<int> labels;
  std::vector<double> values;
  recs.reserve(rows.size());
  for (int r : rows) {
    recs.push_back(records_[r]);
    if (task() == TaskKind::kClassification) labels.push_back(class_labels_[r]);
    else values.push_back(reg_values_[r]);
  }
  return Dataset(schema_, std::move(recs), std::move(labels), std::move(values));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, int row, const std::string& col) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0') || !std::isfinite(v))
    throw ValidationError("unparseable value '" + s + "', row " + std::to_string(row) +
                          ", column " + col);
  return v;
}

}  // namespace

Dataset load_csv_text(const std::string& text, const FeatureSchema& schema,
                      const std::string& label_column) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty file");
  auto header = split_csv_line(line);

  const int d = schema.num_features();
  std::vector<int> col_feature(header.size(), -1);  // header column -> feature index
  int label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) {
      if (label_col >= 0) throw ValidationError("duplicate label column '" + label_column + "'");
      label_col = static_cast<int>(c);
      continue;
    }
    int j = schema.feature_index(header[c]);
    if (j < 0)
      throw ValidationError("unknown column '" + header[c] + "' in header");
    col_feature[c] = j;
  }
  if (label_col < 0) throw ValidationError("missing column '" + label_column + "'");
  std::vector<bool> seen(d, false);
  for (int j : col_feature)
    if (j >= 0) {
      if (seen[j]) throw ValidationError("duplicate column '" + schema.feature(j).name + "'");
      seen[j] = true;
    }
  for (int j = 0; j < d; ++j)
    if (!seen[j]) throw ValidationError("missing column '" + schema.feature(j).name + "'");

  int nq = 0, nc = 0;
  for (int j = 0; j < d; ++j)
    (schema.feature(j).kind == FeatureKind::kQuantitative ? nq : nc)++;

  std::vector<Record> records;
  std::vector<int> labels;
  std::vector<double> values;
  int row = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ValidationError("row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    Record rec;
    rec.quant.resize(nq);
    rec.cat.resize(nc);
    int qslot = 0, cslot = 0;
    std::vector<int> quant_of(d, -1), cat_of(d, -1);
    for (int j = 0; j < d; ++j) {
      if (schema.feature(j).kind == FeatureKind::kQuantitative) quant_of[j] = qslot++;
      else cat_of[j] = cslot++;
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      if (static_cast<int>(c) == label_col) {
        if (cell.empty())
          throw ValidationError("missing value, row " + std::to_string(row) + ", column " +
                                label_column);
        if (schema.task() == TaskKind::kClassification) {
          int id = schema.label_index(cell);
          if (id < 0)
            throw ValidationError("unknown label '" + cell + "', row " + std::to_string(row));
          labels.push_back(id);
        } else {
          values.push_back(parse_number(cell, row, label_column));
        }
        continue;
      }
      int j = col_feature[c];
      const auto& f = schema.feature(j);
      if (cell.empty())
        throw ValidationError("missing value, row " + std::to_string(row) + ", column " + f.name);
      if (f.kind == FeatureKind::kQuantitative) {
        rec.quant[quant_of[j]] = parse_number(cell, row, f.name);
      } else {
        int lvl = schema.level_index(j, cell);
        if (lvl < 0)
          throw ValidationError("unknown level '" + cell + "', row " + std::to_string(row) +
                                ", column " + f.name);
        rec.cat[cat_of[j]] = lvl;
      }
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw ValidationError("empty dataset");
  return Dataset(schema, std::move(records), std::move(labels), std::move(values));
}

Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                 const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw ValidationError("data file not found: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_csv_text(ss.str(), schema, label_column);
}

std::pair<Dataset, NormalizationReport> normalize(const Dataset& ds) {
  const auto& schema = ds.schema();
  NormalizationReport report;
  const int n = ds.size();

  for (int j = 0; j < schema.num_features(); ++j) {
    if (schema.feature(j).kind != FeatureKind::kQuantitative) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      lo = std::min(lo, ds.quant(i, j));
      hi = std::max(hi, ds.quant(i, j));
    }
    NormalizationReport::AffineMap m;
    m.name = schema.feature(j).name;
    m.lo = lo;
    m.hi = hi;
    m.constant = (lo == hi);
    report.features.push_back(m);
  }
  if (ds.task() == TaskKind::kRegression) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      lo = std::min(lo, ds.value(i));
      hi = std::max(hi, ds.value(i));
    }
    NormalizationReport::AffineMap m;
    m.name = schema.label().name;
    m.lo = lo;
    m.hi = hi;
    m.constant = (lo == hi);
    report.label = m;
  }
  return {apply_normalization(ds, report), report};
}

Record normalize_record(const Record& r, const NormalizationReport& report) {
  Record out = r;
  for (std::size_t s = 0; s < out.quant.size(); ++s)
    out.quant[s] = report.normalize_feature(static_cast<int>(s), out.quant[s]);
  return out;
}

Dataset apply_normalization(const Dataset& ds, const NormalizationReport& report) {
  const int n = ds.size();
  std::vector<Record> recs;
  recs.reserve(n);
  for (int i = 0; i < n; ++i) recs.push_back(normalize_record(ds.record(i), report));
  std::vector<int> labels(ds.label_ids().begin(), ds.label_ids().end());
  std::vector<double> values;
  if (ds.task() == TaskKind::kRegression) {
    values.resize(n);
    for (int i = 0; i < n; ++i) values[i] = report.normalize_label(ds.value(i));
  }
  return Dataset(ds.schema(), std::move(recs), std::move(labels), std::move(values));
}

std::vector<int> shuffled_indices(int n, std::uint64_t seed) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  // Fisher-Yates with rejection-sampled bounded draws, independent of
  // std::uniform_int_distribution's implementation.
  for (int i = n - 1; i > 0; --i) {
    std::uint64_t bound = static_cast<std::uint64_t>(i) + 1;
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    int j = static_cast<int>(r % bound);
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

FoldPlan make_folds(const Dataset& ds, int k, std::uint64_t seed) {
  const int n = ds.size();
  if (k < 2 || k > n)
    throw ValidationError("fold count k=" + std::to_string(k) + " out of range [2, " +
                          std::to_string(n) + "]");
  auto idx = shuffled_indices(n, seed);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.test_indices.resize(k);
  int pos = 0;
  for (int f = 0; f < k; ++f) {
    int sz = n / k + (f < n % k ? 1 : 0);
    for (int t = 0; t < sz; ++t) plan.test_indices[f].push_back(idx[pos++]);
    std::sort(plan.test_indices[f].begin(), plan.test_indices[f].end());
  }
  return plan;
}

std::vector<int> FoldPlan::train_indices(int fold) const {
  std::vector<int> out;
  for (int f = 0; f < k; ++f) {
    if (f == fold) continue;
    out.insert(out.end(), test_indices[f].begin(), test_indices[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fairtree
