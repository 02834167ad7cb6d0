#include "fairtree/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace fairtree {

const char* to_string(FeatureKind kind) {
  return kind == FeatureKind::kQuantitative ? "quantitative" : "categorical";
}

const char* to_string(FeatureRole role) {
  return role == FeatureRole::kProtected ? "protected" : "unprotected";
}

const char* to_string(TaskKind task) {
  return task == TaskKind::kClassification ? "classification" : "regression";
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& data) {
  std::uint64_t h = fnv1a64(data.data(), data.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features, LabelSpec label)
    : features_(std::move(features)), label_(std::move(label)) {
  validate();
}

void FeatureSchema::validate() const {
  if (features_.empty()) throw ValidationError("schema: no features declared");
  std::set<std::string> names;
  int num_protected = 0;
  for (const auto& f : features_) {
    if (f.name.empty()) throw ValidationError("schema: empty feature name");
    if (!names.insert(f.name).second)
      throw ValidationError("schema: duplicate feature name '" + f.name + "'");
    if (f.kind == FeatureKind::kCategorical) {
      if (f.levels.empty())
        throw ValidationError("schema: categorical feature '" + f.name + "' has no levels");
      std::set<std::string> seen(f.levels.begin(), f.levels.end());
      if (seen.size() != f.levels.size())
        throw ValidationError("schema: duplicate level in feature '" + f.name + "'");
    } else if (!f.levels.empty()) {
      throw ValidationError("schema: quantitative feature '" + f.name + "' cannot have levels");
    }
    if (f.role == FeatureRole::kProtected) {
      ++num_protected;
      if (f.kind != FeatureKind::kCategorical)
        throw ValidationError("schema: protected feature '" + f.name +
                              "' must be categorical (bin quantitative attributes before ingestion)");
    }
  }
  if (num_protected == 0)
    throw ValidationError("schema: at least one protected feature is required");
  if (label_.name.empty()) throw ValidationError("schema: missing label declaration");
  if (names.count(label_.name))
    throw ValidationError("schema: label name '" + label_.name + "' collides with a feature");
  if (label_.task == TaskKind::kClassification) {
    if (label_.levels.size() < 2)
      throw ValidationError("schema: classification label needs at least two levels");
    std::set<std::string> seen(label_.levels.begin(), label_.levels.end());
    if (seen.size() != label_.levels.size())
      throw ValidationError("schema: duplicate label level");
  } else if (!label_.levels.empty()) {
    throw ValidationError("schema: regression label cannot have levels");
  }
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

FeatureSchema FeatureSchema::parse_text(const std::string& text) {
  std::vector<FeatureSpec> features;
  LabelSpec label;
  bool have_label = false;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::istringstream ls(line);
    std::string kind_word, name;
    ls >> kind_word >> name;
    if (name.empty())
      throw ValidationError("schema line " + std::to_string(lineno) + ": missing name");

    std::string tok;
    std::string kind_val, role_val, task_val, levels_val;
    while (ls >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw ValidationError("schema line " + std::to_string(lineno) +
                              ": expected key=value, got '" + tok + "'");
      std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "kind") kind_val = val;
      else if (key == "role") role_val = val;
      else if (key == "task") task_val = val;
      else if (key == "levels") levels_val = val;
      else
        throw ValidationError("schema line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }

    if (kind_word == "feature") {
      FeatureSpec f;
      f.name = name;
      if (kind_val == "quantitative") f.kind = FeatureKind::kQuantitative;
      else if (kind_val == "categorical") f.kind = FeatureKind::kCategorical;
      else
        throw ValidationError("schema line " + std::to_string(lineno) +
                              ": kind must be quantitative or categorical");
      if (role_val == "protected") f.role = FeatureRole::kProtected;
      else if (role_val == "unprotected" || role_val.empty()) f.role = FeatureRole::kUnprotected;
      else
        throw ValidationError("schema line " + std::to_string(lineno) +
                              ": role must be protected or unprotected");
      if (!levels_val.empty()) f.levels = split(levels_val, ',');
      features.push_back(std::move(f));
    } else if (kind_word == "label") {
      if (have_label)
        throw ValidationError("schema line " + std::to_string(lineno) + ": duplicate label declaration");
      label.name = name;
      if (task_val == "classification") label.task = TaskKind::kClassification;
      else if (task_val == "regression") label.task = TaskKind::kRegression;
      else
        throw ValidationError("schema line " + std::to_string(lineno) +
                              ": task must be classification or regression");
      if (!levels_val.empty()) label.levels = split(levels_val, ',');
      have_label = true;
    } else {
      throw ValidationError("schema line " + std::to_string(lineno) +
                            ": expected 'feature' or 'label', got '" + kind_word + "'");
    }
  }
  if (!have_label) throw ValidationError("schema: missing label declaration");
  return FeatureSchema(std::move(features), std::move(label));
}

FeatureSchema FeatureSchema::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("schema file not found: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

int FeatureSchema::feature_index(const std::string& name) const {
  for (int j = 0; j < num_features(); ++j)
    if (features_[j].name == name) return j;
  return -1;
}

int FeatureSchema::level_index(int feature, const std::string& level) const {
  const auto& lv = features_[feature].levels;
  auto it = std::find(lv.begin(), lv.end(), level);
  return it == lv.end() ? -1 : static_cast<int>(it - lv.begin());
}

int FeatureSchema::label_index(const std::string& level) const {
  auto it = std::find(label_.levels.begin(), label_.levels.end(), level);
  return it == label_.levels.end() ? -1 : static_cast<int>(it - label_.levels.begin());
}

std::vector<int> FeatureSchema::protected_features() const {
  std::vector<int> out;
  for (int j = 0; j < num_features(); ++j)
    if (features_[j].role == FeatureRole::kProtected) out.push_back(j);
  return out;
}

std::vector<int> FeatureSchema::unprotected_features() const {
  std::vector<int> out;
  for (int j = 0; j < num_features(); ++j)
    if (features_[j].role == FeatureRole::kUnprotected) out.push_back(j);
  return out;
}

std::vector<int> FeatureSchema::branching_quantitative() const {
  std::vector<int> out;
  for (int j = 0; j < num_features(); ++j)
    if (features_[j].role == FeatureRole::kUnprotected &&
        features_[j].kind == FeatureKind::kQuantitative)
      out.push_back(j);
  return out;
}

std::vector<int> FeatureSchema::branching_categorical() const {
  std::vector<int> out;
  for (int j = 0; j < num_features(); ++j)
    if (features_[j].role == FeatureRole::kUnprotected &&
        features_[j].kind == FeatureKind::kCategorical)
      out.push_back(j);
  return out;
}

int FeatureSchema::num_groups() const {
  int n = 1;
  for (int j : protected_features())
    n *= static_cast<int>(features_[j].levels.size());
  return n;
}

std::string FeatureSchema::group_name(int group) const {
  std::string out;
  for (int j : protected_features()) {
    const auto& f = features_[j];
    int m = static_cast<int>(f.levels.size());
    int lvl = group % m;
    group /= m;
    if (!out.empty()) out += ",";
    out += f.name + "=" + f.levels[lvl];
  }
  return out;
}

std::string FeatureSchema::fingerprint() const {
  std::string canon;
  for (const auto& f : features_) {
    canon += "f:" + f.name + ":" + to_string(f.kind) + ":" + to_string(f.role);
    for (const auto& l : f.levels) canon += ":" + l;
    canon += ";";
  }
  canon += "y:" + label_.name + ":" + to_string(label_.task);
  for (const auto& l : label_.levels) canon += ":" + l;
  return fnv1a64_hex(canon);
}

}  // namespace fairtree
