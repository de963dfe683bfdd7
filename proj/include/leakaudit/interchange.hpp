#pragma once

// Interchange document (JSON):
//
//   {
//     "features": ["E", "D", "S", "H"],          ordered, unique names
//     "open":     ["E", "D"],
//     "private":  ["S", "H"],                    open ∪ private = features, disjoint
//     "sensitive": {"feature": "S", "value": true},
//     "labels":   [0, 1],                        distinct non-negative integers
//     "model":    {"kind": "formula" | "tree" | "threshold", "body": ...},
//     "meta":     {...}                          optional, free-form, ignored
//   }
//
// formula body:   {"op": "and"|"or", "args": [node, ...]}
//                 {"op": "not", "args": [node]}
//                 {"op": "var", "name": "E"}
//                 {"op": "const", "value": true}
//                 labels[0] is the decision when the formula is false.
// tree body:      {"test": "D", "if_true": node, "if_false": node}  or an integer leaf label
// threshold body: [[{"weights": [int, ...], "bias": int}, ...], ...]   list of layers
//                 The last layer has |labels| - 1 units (one for binary models).
//
// Unknown keys are rejected everywhere except inside "meta".

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "leakaudit/core.hpp"

namespace leakaudit {

using json = nlohmann::json;

/// Schema or invariant violation in an interchange document. `location` is a
/// JSON pointer to the offending value.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string location, const std::string& message)
      : std::runtime_error(location.empty() ? message : location + ": " + message), location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

namespace detail {

class DocumentReader {
 public:
  explicit DocumentReader(const FeatureSpace* features = nullptr) : features_(features) {}
  void set_features(const FeatureSpace* f) { features_ = f; }

  [[noreturn]] static void fail(const std::string& at, const std::string& msg) { throw ParseError(at, msg); }

  static const json& require(const json& obj, const std::string& key, const std::string& at) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(at, "missing key '" + key + "'");
    return *it;
  }

  static void only_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& at) {
    if (!obj.is_object()) fail(at, "expected an object");
    for (const auto& [key, _] : obj.items()) {
      bool ok = false;
      for (auto a : allowed) ok = ok || key == a;
      if (!ok) fail(at + "/" + key, "unknown key '" + key + "'");
    }
  }

  static std::string string_at(const json& v, const std::string& at) {
    if (!v.is_string()) fail(at, "expected a string");
    return v.get<std::string>();
  }

  static std::int64_t int_at(const json& v, const std::string& at) {
    if (!v.is_number_integer()) fail(at, "expected an integer");
    return v.get<std::int64_t>();
  }

  static bool bool_at(const json& v, const std::string& at) {
    if (!v.is_boolean()) fail(at, "expected a boolean");
    return v.get<bool>();
  }

  static const json& array_at(const json& v, const std::string& at) {
    if (!v.is_array()) fail(at, "expected an array");
    return v;
  }

  FeatureIndex feature_at(const json& v, const std::string& at) const {
    std::string name = string_at(v, at);
    auto idx = features_->find(name);
    if (!idx) fail(at, "dangling feature reference '" + name + "'");
    return *idx;
  }

  std::size_t formula(const json& v, const std::string& at, Formula& out, std::size_t depth = 0) const {
    if (depth > 4096) fail(at, "formula nesting too deep");
    if (!v.is_object()) fail(at, "expected a formula node object");
    std::string op = string_at(require(v, "op", at), at + "/op");
    if (op == "var") {
      only_keys(v, {"op", "name"}, at);
      return out.var(feature_at(require(v, "name", at), at + "/name"));
    }
    if (op == "const") {
      only_keys(v, {"op", "value"}, at);
      return out.constant(bool_at(require(v, "value", at), at + "/value"));
    }
    if (op != "and" && op != "or" && op != "not") fail(at + "/op", "unknown formula op '" + op + "'");
    only_keys(v, {"op", "args"}, at);
    const json& args = array_at(require(v, "args", at), at + "/args");
    if (op == "not" && args.size() != 1) fail(at + "/args", "'not' takes exactly one argument");
    std::vector<std::size_t> kids;
    for (std::size_t i = 0; i < args.size(); ++i)
      kids.push_back(formula(args[i], at + "/args/" + std::to_string(i), out, depth + 1));
    if (op == "not") return out.negate(kids[0]);
    return op == "and" ? out.conj(std::move(kids)) : out.disj(std::move(kids));
  }

  std::size_t tree(const json& v, const std::string& at, DecisionTree& out, std::size_t depth = 0) const {
    if (depth > 4096) fail(at, "tree nesting too deep");
    if (v.is_number_integer()) {
      std::int64_t l = v.get<std::int64_t>();
      if (l < 0 || l > INT32_MAX) fail(at, "leaf label out of range");
      return out.leaf(static_cast<Label>(l));
    }
    if (!v.is_object()) fail(at, "expected a tree node object or an integer leaf");
    only_keys(v, {"test", "if_true", "if_false"}, at);
    FeatureIndex f = feature_at(require(v, "test", at), at + "/test");
    std::size_t self = out.leaf(0);
    std::size_t t = tree(require(v, "if_true", at), at + "/if_true", out, depth + 1);
    std::size_t e = tree(require(v, "if_false", at), at + "/if_false", out, depth + 1);
    out.nodes[self] = {f, 0, t, e};
    return self;
  }

  static ThresholdNetwork network(const json& v, const std::string& at) {
    ThresholdNetwork net;
    const json& layers = array_at(v, at);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      std::string lat = at + "/" + std::to_string(l);
      const json& units = array_at(layers[l], lat);
      std::vector<ThresholdNetwork::Unit> layer;
      for (std::size_t u = 0; u < units.size(); ++u) {
        std::string uat = lat + "/" + std::to_string(u);
        only_keys(units[u], {"weights", "bias"}, uat);
        ThresholdNetwork::Unit unit;
        const json& ws = array_at(require(units[u], "weights", uat), uat + "/weights");
        for (std::size_t i = 0; i < ws.size(); ++i) unit.weights.push_back(int_at(ws[i], uat + "/weights/" + std::to_string(i)));
        unit.bias = int_at(require(units[u], "bias", uat), uat + "/bias");
        layer.push_back(std::move(unit));
      }
      net.layers.push_back(std::move(layer));
    }
    return net;
  }

 private:
  const FeatureSpace* features_;
};

inline json formula_to_json(const Formula& f, std::size_t node, const FeatureSpace& features) {
  const auto& n = f.nodes[node];
  switch (n.op) {
    case Formula::Op::Const: return {{"op", "const"}, {"value", n.value}};
    case Formula::Op::Var: return {{"op", "var"}, {"name", features.name(n.var)}};
    default: break;
  }
  json args = json::array();
  for (std::size_t a : n.args) args.push_back(formula_to_json(f, a, features));
  const char* op = n.op == Formula::Op::Not ? "not" : n.op == Formula::Op::And ? "and" : "or";
  return {{"op", op}, {"args", std::move(args)}};
}

inline json tree_to_json(const DecisionTree& t, std::size_t node, const FeatureSpace& features) {
  const auto& n = t.nodes[node];
  if (!n.test) return n.label;
  return {{"test", features.name(*n.test)},
          {"if_true", tree_to_json(t, n.if_true, features)},
          {"if_false", tree_to_json(t, n.if_false, features)}};
}

}  // namespace detail

/// Parses and fully validates an interchange document.
inline AuditProblem parse_model_document(const json& doc) {
  using detail::DocumentReader;
  DocumentReader::only_keys(doc, {"features", "open", "private", "sensitive", "labels", "model", "meta"}, "");

  std::vector<std::string> names;
  const json& fs = DocumentReader::array_at(DocumentReader::require(doc, "features", ""), "/features");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    std::string name = DocumentReader::string_at(fs[i], "/features/" + std::to_string(i));
    for (const auto& prev : names)
      if (prev == name) throw ParseError("/features/" + std::to_string(i), "duplicate feature '" + name + "'");
    names.push_back(std::move(name));
  }
  if (names.empty()) throw ParseError("/features", "at least one feature required");
  FeatureSpace features(std::move(names));
  DocumentReader reader(&features);

  auto read_names = [&](const char* key) {
    std::vector<FeatureIndex> out;
    const std::string at = std::string("/") + key;
    const json& arr = DocumentReader::array_at(DocumentReader::require(doc, key, ""), at);
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(reader.feature_at(arr[i], at + "/" + std::to_string(i)));
    return out;
  };
  std::vector<FeatureIndex> open = read_names("open");
  std::vector<FeatureIndex> priv = read_names("private");
  std::vector<int> seen(features.size(), 0);
  for (FeatureIndex f : open) {
    if (seen[f]) throw ParseError("/open", "feature '" + features.name(f) + "' listed twice");
    seen[f] = 1;
  }
  for (FeatureIndex f : priv) {
    if (seen[f] == 1) throw ParseError("/private", "feature '" + features.name(f) + "' is both open and private");
    if (seen[f] == 2) throw ParseError("/private", "feature '" + features.name(f) + "' listed twice");
    seen[f] = 2;
  }
  for (FeatureIndex f = 0; f < features.size(); ++f)
    if (!seen[f]) throw ParseError("/private", "feature '" + features.name(f) + "' is neither open nor private");

  const json& sens = DocumentReader::require(doc, "sensitive", "");
  DocumentReader::only_keys(sens, {"feature", "value"}, "/sensitive");
  FeatureIndex s = reader.feature_at(DocumentReader::require(sens, "feature", "/sensitive"), "/sensitive/feature");
  bool nu = DocumentReader::bool_at(DocumentReader::require(sens, "value", "/sensitive"), "/sensitive/value");
  if (seen[s] != 2) throw ParseError("/sensitive/feature", "sensitive feature not private");

  DecisionModel model;
  model.labels.clear();
  const json& ls = DocumentReader::array_at(DocumentReader::require(doc, "labels", ""), "/labels");
  for (std::size_t i = 0; i < ls.size(); ++i) {
    std::int64_t l = DocumentReader::int_at(ls[i], "/labels/" + std::to_string(i));
    if (l < 0 || l > INT32_MAX) throw ParseError("/labels/" + std::to_string(i), "label out of range");
    model.labels.push_back(static_cast<Label>(l));
  }

  const json& m = DocumentReader::require(doc, "model", "");
  DocumentReader::only_keys(m, {"kind", "body"}, "/model");
  std::string kind = DocumentReader::string_at(DocumentReader::require(m, "kind", "/model"), "/model/kind");
  const json& body = DocumentReader::require(m, "body", "/model");
  if (kind == "formula") {
    Formula f;
    f.root = reader.formula(body, "/model/body", f);
    model.body = std::move(f);
  } else if (kind == "tree") {
    DecisionTree t;
    reader.tree(body, "/model/body", t);
    model.body = std::move(t);
  } else if (kind == "threshold") {
    model.body = DocumentReader::network(body, "/model/body");
  } else {
    throw ParseError("/model/kind", "unknown model kind '" + kind + "'");
  }

  AuditProblem problem{std::move(features), ProfilePartition(seen.size(), open, s, nu), std::move(model)};
  try {
    validate(problem);
  } catch (const InvariantError& e) {
    throw ParseError("/model", e.what());
  }
  return problem;
}

inline AuditProblem parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_model_document(doc);
}

/// Canonical interchange document for a validated problem.
inline json serialize_model(const AuditProblem& p) {
  json doc;
  doc["features"] = p.features.names();
  json open = json::array(), priv = json::array();
  for (FeatureIndex f : p.partition.open_features()) open.push_back(p.features.name(f));
  for (FeatureIndex f : p.partition.private_features()) priv.push_back(p.features.name(f));
  doc["open"] = std::move(open);
  doc["private"] = std::move(priv);
  doc["sensitive"] = {{"feature", p.features.name(p.partition.sensitive())}, {"value", p.partition.protected_value()}};
  doc["labels"] = p.model.labels;
  json body;
  if (const auto* f = std::get_if<Formula>(&p.model.body)) {
    body = detail::formula_to_json(*f, f->root, p.features);
  } else if (const auto* t = std::get_if<DecisionTree>(&p.model.body)) {
    body = detail::tree_to_json(*t, 0, p.features);
  } else {
    const auto& net = std::get<ThresholdNetwork>(p.model.body);
    body = json::array();
    for (const auto& layer : net.layers) {
      json jl = json::array();
      for (const auto& u : layer) jl.push_back({{"weights", u.weights}, {"bias", u.bias}});
      body.push_back(std::move(jl));
    }
  }
  doc["model"] = {{"kind", to_string(p.model.kind())}, {"body", std::move(body)}};
  return doc;
}

}  // namespace leakaudit
