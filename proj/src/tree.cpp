#include "fairtree/tree.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace fairtree {

using nlohmann::json;

int TreeShape::node_level(int node) const {
  int level = 0;
  while (node > 0) {
    node = (node - 1) / 2;
    ++level;
  }
  return level;
}

std::pair<int, int> TreeShape::left_leaves(int node) const {
  // node at level h covers leaves [pos * 2^(K-h), (pos+1) * 2^(K-h)) where
  // pos is its index within the level
  int level = node_level(node);
  int pos = node - ((1 << level) - 1);
  int span = 1 << (depth - level);
  int begin = pos * span;
  return {begin, begin + span / 2};
}

std::pair<int, int> TreeShape::right_leaves(int node) const {
  auto [b, m] = left_leaves(node);
  int level = node_level(node);
  int span = 1 << (depth - level);
  return {m, b + span};
}

DecisionTree::DecisionTree(TreeShape shape, std::vector<BranchRule> branches,
                           std::vector<LeafRule> leaves, TaskKind task,
                           std::string schema_fingerprint, NormalizationReport normalization)
    : shape_(shape),
      branches_(std::move(branches)),
      leaves_(std::move(leaves)),
      task_(task),
      fingerprint_(std::move(schema_fingerprint)),
      normalization_(std::move(normalization)) {
  if (static_cast<int>(branches_.size()) != shape_.num_nodes())
    throw ValidationError("tree: branch rule count does not match shape");
  if (static_cast<int>(leaves_.size()) != shape_.num_leaves())
    throw ValidationError("tree: leaf rule count does not match shape");
  for (const auto& rule : branches_) {
    if (const auto* lin = std::get_if<LinearRule>(&rule)) {
      double s = 0;
      for (auto& [j, wj] : lin->weights) s += wj;
      if (std::abs(s - 1.0) > 1e-6)
        throw ValidationError("tree: linear branching weights must sum to 1");
    }
  }
}

namespace {

bool goes_left(const BranchRule& rule, const Record& rec, const Dataset& ds) {
  const auto& schema = ds.schema();
  if (const auto* q = std::get_if<QuantitativeRule>(&rule)) {
    return q->cutoff >= rec.quant[ds.quant_slot(q->feature)];
  }
  if (const auto* c = std::get_if<CategoricalRule>(&rule)) {
    int lvl = rec.cat[ds.cat_slot(c->feature)];
    if (lvl < 0 || lvl >= static_cast<int>(schema.feature(c->feature).levels.size()))
      throw ValidationError("route: unknown level for feature '" +
                            schema.feature(c->feature).name + "'");
    return std::binary_search(c->left_levels.begin(), c->left_levels.end(), lvl);
  }
  const auto& lin = std::get<LinearRule>(rule);
  double score = 0;
  for (auto& [j, wj] : lin.weights) score += wj * rec.quant[ds.quant_slot(j)];
  return lin.cutoff >= score;
}

}  // namespace

int DecisionTree::route(const Dataset& ds, int row) const {
  const Record& rec = ds.record(row);
  int node = 0;
  for (int level = 0; level < shape_.depth; ++level) {
    bool left = goes_left(branches_[node], rec, ds);
    node = 2 * node + (left ? 1 : 2);
  }
  return node - shape_.num_nodes();  // leaves follow nodes in heap order
}

int DecisionTree::route(const Record& normalized_record, const FeatureSchema& schema) const {
  // wrap the single record in a throwaway dataset view-alike: slot lookups
  // only need the schema layout, so reuse the routing on a 1-row dataset
  std::vector<Record> recs{normalized_record};
  std::vector<int> labels;
  std::vector<double> values;
  if (schema.task() == TaskKind::kClassification) labels.push_back(0);
  else values.push_back(0.0);
  Dataset one(schema, std::move(recs), std::move(labels), std::move(values));
  return route(one, 0);
}

int DecisionTree::predict_label(const Dataset& ds, int row) const {
  int l = route(ds, row);
  const auto* rule = std::get_if<LabelLeaf>(&leaves_[l]);
  if (!rule) throw ValidationError("predict: tree has no label leaves");
  return rule->label;
}

double DecisionTree::predict_value(const Dataset& ds, int row) const {
  int l = route(ds, row);
  if (const auto* v = std::get_if<ValueLeaf>(&leaves_[l])) return v->value;
  const auto* lin = std::get_if<LinearLeaf>(&leaves_[l]);
  if (!lin) throw ValidationError("predict: tree has no value leaves");
  double score = 0;
  for (auto& [j, c] : lin->coefficients) score += c * ds.quant(row, j);
  return std::clamp(score, -1.0, 1.0);
}

std::vector<int> DecisionTree::feature_usage(int num_features) const {
  std::vector<int> counts(num_features, 0);
  for (const auto& rule : branches_) {
    if (const auto* q = std::get_if<QuantitativeRule>(&rule)) {
      ++counts[q->feature];
    } else if (const auto* c = std::get_if<CategoricalRule>(&rule)) {
      ++counts[c->feature];
    } else {
      for (auto& [j, wj] : std::get<LinearRule>(rule).weights)
        if (wj != 0.0) ++counts[j];
    }
  }
  return counts;
}

std::vector<int> predict_labels(const DecisionTree& tree, const Dataset& ds) {
  std::vector<int> out(ds.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < ds.size(); ++i) out[i] = tree.predict_label(ds, i);
  return out;
}

std::vector<double> predict_values(const DecisionTree& tree, const Dataset& ds) {
  std::vector<double> out(ds.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < ds.size(); ++i) out[i] = tree.predict_value(ds, i);
  return out;
}

namespace {

json affine_to_json(const NormalizationReport::AffineMap& m) {
  return json{{"name", m.name}, {"lo", m.lo}, {"hi", m.hi}, {"constant", m.constant}};
}

NormalizationReport::AffineMap affine_from_json(const json& j) {
  NormalizationReport::AffineMap m;
  m.name = j.at("name").get<std::string>();
  m.lo = j.at("lo").get<double>();
  m.hi = j.at("hi").get<double>();
  m.constant = j.at("constant").get<bool>();
  return m;
}

}  // namespace

std::string DecisionTree::to_json() const {
  json doc;
  doc["format"] = "fairtree-model";
  doc["version"] = 1;
  doc["schema_fingerprint"] = fingerprint_;
  doc["task"] = to_string(task_);
  doc["depth"] = shape_.depth;

  json norm;
  norm["features"] = json::array();
  for (const auto& m : normalization_.features) norm["features"].push_back(affine_to_json(m));
  norm["label"] = normalization_.label ? affine_to_json(*normalization_.label) : json(nullptr);
  doc["normalization"] = norm;

  doc["nodes"] = json::array();
  for (int v = 0; v < shape_.num_nodes(); ++v) {
    json rule;
    if (const auto* q = std::get_if<QuantitativeRule>(&branches_[v])) {
      rule = {{"type", "quantitative"}, {"feature", q->feature}, {"cutoff", q->cutoff}};
    } else if (const auto* c = std::get_if<CategoricalRule>(&branches_[v])) {
      rule = {{"type", "categorical"}, {"feature", c->feature}, {"left_levels", c->left_levels}};
    } else {
      const auto& lin = std::get<LinearRule>(branches_[v]);
      json w = json::array();
      for (auto& [j, wj] : lin.weights) w.push_back(json{{"feature", j}, {"weight", wj}});
      rule = {{"type", "linear"}, {"weights", w}, {"cutoff", lin.cutoff}};
    }
    doc["nodes"].push_back(json{{"id", v}, {"rule", rule}});
  }

  doc["leaves"] = json::array();
  for (int l = 0; l < shape_.num_leaves(); ++l) {
    json rule;
    if (const auto* lab = std::get_if<LabelLeaf>(&leaves_[l])) {
      rule = {{"type", "label"}, {"label", lab->label}};
    } else if (const auto* val = std::get_if<ValueLeaf>(&leaves_[l])) {
      rule = {{"type", "value"}, {"value", val->value}};
    } else {
      const auto& lin = std::get<LinearLeaf>(leaves_[l]);
      json c = json::array();
      for (auto& [j, cj] : lin.coefficients)
        c.push_back(json{{"feature", j}, {"coefficient", cj}});
      rule = {{"type", "linear"}, {"coefficients", c}};
    }
    doc["leaves"].push_back(json{{"id", l}, {"rule", rule}});
  }
  return doc.dump(2) + "\n";
}

DecisionTree DecisionTree::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model parse error: ") + e.what());
  }
  if (!doc.contains("format") || doc["format"] != "fairtree-model")
    throw ValidationError("model parse error: not a fairtree model document");
  if (doc.at("version").get<int>() != 1)
    throw ValidationError("model version mismatch: expected 1, got " +
                          doc.at("version").dump());

  TaskKind task = doc.at("task").get<std::string>() == "classification"
                      ? TaskKind::kClassification
                      : TaskKind::kRegression;
  TreeShape shape(doc.at("depth").get<int>());

  NormalizationReport norm;
  for (const auto& m : doc.at("normalization").at("features"))
    norm.features.push_back(affine_from_json(m));
  if (!doc.at("normalization").at("label").is_null())
    norm.label = affine_from_json(doc.at("normalization").at("label"));

  std::vector<BranchRule> branches(shape.num_nodes(), QuantitativeRule{});
  for (const auto& node : doc.at("nodes")) {
    int v = node.at("id").get<int>();
    if (v < 0 || v >= shape.num_nodes()) throw ValidationError("model parse error: bad node id");
    const auto& rule = node.at("rule");
    std::string type = rule.at("type").get<std::string>();
    if (type == "quantitative") {
      branches[v] = QuantitativeRule{rule.at("feature").get<int>(), rule.at("cutoff").get<double>()};
    } else if (type == "categorical") {
      CategoricalRule c;
      c.feature = rule.at("feature").get<int>();
      c.left_levels = rule.at("left_levels").get<std::vector<int>>();
      branches[v] = std::move(c);
    } else if (type == "linear") {
      LinearRule lin;
      lin.cutoff = rule.at("cutoff").get<double>();
      for (const auto& w : rule.at("weights"))
        lin.weights.emplace_back(w.at("feature").get<int>(), w.at("weight").get<double>());
      branches[v] = std::move(lin);
    } else {
      throw ValidationError("model parse error: unknown branch rule '" + type + "'");
    }
  }

  std::vector<LeafRule> leaves(shape.num_leaves(), LabelLeaf{});
  for (const auto& leaf : doc.at("leaves")) {
    int l = leaf.at("id").get<int>();
    if (l < 0 || l >= shape.num_leaves()) throw ValidationError("model parse error: bad leaf id");
    const auto& rule = leaf.at("rule");
    std::string type = rule.at("type").get<std::string>();
    if (type == "label") {
      leaves[l] = LabelLeaf{rule.at("label").get<int>()};
    } else if (type == "value") {
      leaves[l] = ValueLeaf{rule.at("value").get<double>()};
    } else if (type == "linear") {
      LinearLeaf lin;
      for (const auto& c : rule.at("coefficients"))
        lin.coefficients.emplace_back(c.at("feature").get<int>(), c.at("coefficient").get<double>());
      leaves[l] = std::move(lin);
    } else {
      throw ValidationError("model parse error: unknown leaf rule '" + type + "'");
    }
  }

  return DecisionTree(shape, std::move(branches), std::move(leaves), task,
                      doc.at("schema_fingerprint").get<std::string>(), std::move(norm));
}

}  // namespace fairtree
