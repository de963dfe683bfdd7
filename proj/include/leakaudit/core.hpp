#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace leakaudit {

using FeatureIndex = std::size_t;
using Label = int;

/// Thrown when a value violates a domain invariant (bad index, inconsistent
/// literal set, malformed model).
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Feature space
// ---------------------------------------------------------------------------

/// Ordered set of Boolean features. Indices are dense: 0..size()-1.
class FeatureSpace {
 public:
  FeatureSpace() = default;

  explicit FeatureSpace(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw InvariantError("feature space must contain at least one feature");
    for (FeatureIndex i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) throw InvariantError("feature name must not be empty");
      if (!index_.emplace(names_[i], i).second)
        throw InvariantError("duplicate feature '" + names_[i] + "'");
    }
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(FeatureIndex i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<FeatureIndex> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const FeatureSpace& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, FeatureIndex> index_;
};

enum class Side { Open, Private };

/// Split of the features into the observer-visible open profile and the
/// hidden private profile, plus the protected literal (sensitive, value).
class ProfilePartition {
 public:
  ProfilePartition() = default;

  ProfilePartition(std::size_t num_features, std::vector<FeatureIndex> open_features,
                   FeatureIndex sensitive, bool protected_value)
      : is_open_(num_features, false), sensitive_(sensitive), protected_value_(protected_value) {
    for (FeatureIndex f : open_features) {
      if (f >= num_features) throw InvariantError("open feature index out of range");
      if (is_open_[f]) throw InvariantError("feature listed twice in open profile");
      is_open_[f] = true;
    }
    if (sensitive >= num_features) throw InvariantError("sensitive feature index out of range");
    if (is_open_[sensitive]) throw InvariantError("sensitive feature not private");
  }

  std::size_t num_features() const { return is_open_.size(); }
  bool is_open(FeatureIndex f) const { return is_open_.at(f); }
  Side side(FeatureIndex f) const { return is_open(f) ? Side::Open : Side::Private; }
  FeatureIndex sensitive() const { return sensitive_; }
  bool protected_value() const { return protected_value_; }

  std::vector<FeatureIndex> open_features() const { return collect(true); }
  std::vector<FeatureIndex> private_features() const { return collect(false); }

  bool operator==(const ProfilePartition&) const = default;

 private:
  std::vector<FeatureIndex> collect(bool open) const {
    std::vector<FeatureIndex> out;
    for (FeatureIndex f = 0; f < is_open_.size(); ++f)
      if (is_open_[f] == open) out.push_back(f);
    return out;
  }

  std::vector<bool> is_open_;
  FeatureIndex sensitive_ = 0;
  bool protected_value_ = true;
};

// ---------------------------------------------------------------------------
// Individuals and literal sets
// ---------------------------------------------------------------------------

/// Total Boolean assignment over a feature space.
class Individual {
 public:
  Individual() = default;
  explicit Individual(std::vector<bool> values) : values_(std::move(values)) {}

  /// Bit i of `mask` is the value of feature i.
  static Individual from_mask(std::uint64_t mask, std::size_t n) {
    std::vector<bool> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = (mask >> i) & 1U;
    return Individual(std::move(v));
  }

  std::size_t size() const { return values_.size(); }
  bool operator[](FeatureIndex i) const { return values_.at(i); }
  void set(FeatureIndex i, bool v) { values_.at(i) = v; }
  const std::vector<bool>& values() const { return values_; }

  std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (values_[i]) m |= std::uint64_t{1} << i;
    return m;
  }

  auto operator<=>(const Individual&) const = default;

 private:
  std::vector<bool> values_;
};

/// Partial conjunction of literals: feature -> polarity. At most one polarity
/// per feature holds by construction.
class LiteralSet {
 public:
  using Map = std::map<FeatureIndex, bool>;
  using const_iterator = Map::const_iterator;

  LiteralSet() = default;
  LiteralSet(std::initializer_list<std::pair<const FeatureIndex, bool>> init) {
    for (const auto& [f, v] : init) insert(f, v);
  }

  static LiteralSet of(const Individual& x) {
    LiteralSet s;
    for (FeatureIndex i = 0; i < x.size(); ++i) s.lits_.emplace(i, x[i]);
    return s;
  }

  /// Adds a literal; throws if the opposite polarity is already present.
  void insert(FeatureIndex f, bool polarity) {
    auto [it, inserted] = lits_.emplace(f, polarity);
    if (!inserted && it->second != polarity)
      throw InvariantError("inconsistent literal set: both polarities of feature " + std::to_string(f));
  }
  void erase(FeatureIndex f) { lits_.erase(f); }

  bool contains(FeatureIndex f, bool polarity) const {
    auto it = lits_.find(f);
    return it != lits_.end() && it->second == polarity;
  }
  bool mentions(FeatureIndex f) const { return lits_.count(f) != 0; }
  std::optional<bool> polarity(FeatureIndex f) const {
    auto it = lits_.find(f);
    if (it == lits_.end()) return std::nullopt;
    return it->second;
  }

  bool empty() const { return lits_.empty(); }
  std::size_t size() const { return lits_.size(); }
  const_iterator begin() const { return lits_.begin(); }
  const_iterator end() const { return lits_.end(); }

  bool subset_of(const LiteralSet& other) const {
    return std::all_of(lits_.begin(), lits_.end(),
                       [&](const auto& l) { return other.contains(l.first, l.second); });
  }
  bool satisfied_by(const Individual& x) const {
    return std::all_of(lits_.begin(), lits_.end(),
                       [&](const auto& l) { return l.first < x.size() && x[l.first] == l.second; });
  }

  LiteralSet without(const LiteralSet& other) const {
    LiteralSet out;
    for (const auto& [f, v] : lits_)
      if (!other.contains(f, v)) out.lits_.emplace(f, v);
    return out;
  }

  auto operator<=>(const LiteralSet&) const = default;
  bool operator==(const LiteralSet&) const = default;

 private:
  Map lits_;
};

/// Literals of `input` whose feature lies on `side`.
inline LiteralSet restrict(const LiteralSet& input, Side side, const ProfilePartition& partition) {
  LiteralSet out;
  for (const auto& [f, v] : input)
    if (partition.side(f) == side) out.insert(f, v);
  return out;
}

inline LiteralSet restrict(const Individual& x, Side side, const ProfilePartition& partition) {
  return restrict(LiteralSet::of(x), side, partition);
}

// ---------------------------------------------------------------------------
// Decision models
// ---------------------------------------------------------------------------

/// Boolean formula stored as a node arena; `root` is the output node.
struct Formula {
  enum class Op { And, Or, Not, Var, Const };
  struct Node {
    Op op = Op::Const;
    std::vector<std::size_t> args;  // And/Or: >= 0 children, Not: exactly one
    FeatureIndex var = 0;           // Var
    bool value = false;             // Const

    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;
  std::size_t root = 0;

  std::size_t add(Node n) {
    nodes.push_back(std::move(n));
    return nodes.size() - 1;
  }
  std::size_t constant(bool v) { return add({Op::Const, {}, 0, v}); }
  std::size_t var(FeatureIndex f) { return add({Op::Var, {}, f, false}); }
  std::size_t negate(std::size_t a) { return add({Op::Not, {a}, 0, false}); }
  std::size_t conj(std::vector<std::size_t> args) { return add({Op::And, std::move(args), 0, false}); }
  std::size_t disj(std::vector<std::size_t> args) { return add({Op::Or, std::move(args), 0, false}); }

  bool operator==(const Formula&) const = default;
};

/// Binary decision tree stored as a node arena; node 0 is the root.
struct DecisionTree {
  struct Node {
    std::optional<FeatureIndex> test;  // empty => leaf
    Label label = 0;                   // leaf only
    std::size_t if_true = 0;
    std::size_t if_false = 0;

    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;

  std::size_t leaf(Label l) {
    nodes.push_back({std::nullopt, l, 0, 0});
    return nodes.size() - 1;
  }
  std::size_t split(FeatureIndex f, std::size_t t, std::size_t e) {
    nodes.push_back({f, 0, t, e});
    return nodes.size() - 1;
  }

  bool operator==(const DecisionTree&) const = default;
};

/// Layered network of integer threshold units. A unit fires iff
/// sum(weights[i] * input[i]) >= bias. Layer 0 reads the features, layer k
/// reads the outputs of layer k-1. With k units in the last layer the label
/// index is 0 when no unit fires, otherwise 1 + the highest firing unit.
struct ThresholdNetwork {
  struct Unit {
    std::vector<std::int64_t> weights;
    std::int64_t bias = 0;
    bool operator==(const Unit&) const = default;
  };
  std::vector<std::vector<Unit>> layers;

  bool operator==(const ThresholdNetwork&) const = default;
};

enum class ModelKind { Formula, Tree, Threshold };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Formula: return "formula";
    case ModelKind::Tree: return "tree";
    case ModelKind::Threshold: return "threshold";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "formula") return ModelKind::Formula;
  if (s == "tree") return ModelKind::Tree;
  if (s == "threshold") return ModelKind::Threshold;
  return std::nullopt;
}

/// Decision function over a feature space with a finite label set.
/// Formula models map false/true to labels[0]/labels[1].
struct DecisionModel {
  std::vector<Label> labels{0, 1};
  std::variant<Formula, DecisionTree, ThresholdNetwork> body;

  ModelKind kind() const { return static_cast<ModelKind>(body.index()); }
  bool has_label(Label l) const { return std::find(labels.begin(), labels.end(), l) != labels.end(); }
  std::size_t label_index(Label l) const {
    auto it = std::find(labels.begin(), labels.end(), l);
    if (it == labels.end()) throw InvariantError("label " + std::to_string(l) + " not in model label set");
    return static_cast<std::size_t>(it - labels.begin());
  }

  bool operator==(const DecisionModel&) const = default;
};

/// Everything an audit needs: features, partition and the decision model.
struct AuditProblem {
  FeatureSpace features;
  ProfilePartition partition;
  DecisionModel model;

  std::size_t num_features() const { return features.size(); }
  bool operator==(const AuditProblem&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline void validate_formula(const Formula& f, std::size_t n) {
  if (f.nodes.empty()) throw InvariantError("formula has no nodes");
  if (f.root >= f.nodes.size()) throw InvariantError("formula root out of range");
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& node = f.nodes[i];
    for (std::size_t a : node.args)
      if (a >= i) throw InvariantError("formula node references a later node (arena must be topological)");
    switch (node.op) {
      case Formula::Op::Var:
        if (node.var >= n) throw InvariantError("formula references unknown feature index " + std::to_string(node.var));
        break;
      case Formula::Op::Not:
        if (node.args.size() != 1) throw InvariantError("'not' takes exactly one argument");
        break;
      default:
        break;
    }
  }
}

inline void validate_tree(const DecisionTree& t, const DecisionModel& m, std::size_t n) {
  if (t.nodes.empty()) throw InvariantError("decision tree has no nodes");
  // Iterative DFS carrying the set of features tested on the current path.
  struct Frame {
    std::size_t node;
    std::vector<bool> tested;
    std::size_t depth;
  };
  std::vector<Frame> stack{{0, std::vector<bool>(n, false), 0}};
  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    if (fr.node >= t.nodes.size()) throw InvariantError("decision tree child index out of range");
    if (fr.depth > t.nodes.size()) throw InvariantError("decision tree contains a cycle");
    const auto& node = t.nodes[fr.node];
    if (!node.test) {
      if (!m.has_label(node.label))
        throw InvariantError("tree leaf label " + std::to_string(node.label) + " not in label set");
      continue;
    }
    FeatureIndex f = *node.test;
    if (f >= n) throw InvariantError("tree tests unknown feature index " + std::to_string(f));
    if (fr.tested[f]) throw InvariantError("tree path tests feature index " + std::to_string(f) + " twice");
    fr.tested[f] = true;
    stack.push_back({node.if_true, fr.tested, fr.depth + 1});
    stack.push_back({node.if_false, std::move(fr.tested), fr.depth + 1});
  }
}

inline void validate_network(const ThresholdNetwork& net, const DecisionModel& m, std::size_t n) {
  if (net.layers.empty()) throw InvariantError("threshold network has no layers");
  std::size_t width = n;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (net.layers[l].empty()) throw InvariantError("threshold layer " + std::to_string(l) + " is empty");
    for (const auto& u : net.layers[l])
      if (u.weights.size() != width)
        throw InvariantError("threshold layer " + std::to_string(l) + " unit has " + std::to_string(u.weights.size()) +
                             " weights, expected " + std::to_string(width));
    width = net.layers[l].size();
  }
  if (m.labels.size() != width + 1)
    throw InvariantError("threshold network with " + std::to_string(width) + " output unit(s) needs exactly " +
                         std::to_string(width + 1) + " labels");
}

}  // namespace detail

/// Checks every cross-object invariant of an audit problem.
inline void validate(const AuditProblem& p) {
  const std::size_t n = p.features.size();
  if (n == 0) throw InvariantError("feature space must contain at least one feature");
  if (p.partition.num_features() != n) throw InvariantError("partition size does not match feature space");
  if (p.partition.is_open(p.partition.sensitive())) throw InvariantError("sensitive feature not private");
  const auto& labels = p.model.labels;
  if (labels.empty()) throw InvariantError("label set must not be empty");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw InvariantError("labels must be non-negative");
    for (std::size_t j = 0; j < i; ++j)
      if (labels[i] == labels[j]) throw InvariantError("duplicate label " + std::to_string(labels[i]));
  }
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, Formula>) {
          if (labels.size() != 2) throw InvariantError("formula models need exactly two labels");
          detail::validate_formula(body, n);
        } else if constexpr (std::is_same_v<T, DecisionTree>) {
          detail::validate_tree(body, p.model, n);
        } else {
          detail::validate_network(body, p.model, n);
        }
      },
      p.model.body);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

inline bool evaluate(const Formula& f, const Individual& x) {
  std::vector<char> val(f.nodes.size(), 0);
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& node = f.nodes[i];
    switch (node.op) {
      case Formula::Op::Const: val[i] = node.value; break;
      case Formula::Op::Var: val[i] = x[node.var]; break;
      case Formula::Op::Not: val[i] = !val[node.args[0]]; break;
      case Formula::Op::And:
        val[i] = std::all_of(node.args.begin(), node.args.end(), [&](std::size_t a) { return val[a] != 0; });
        break;
      case Formula::Op::Or:
        val[i] = std::any_of(node.args.begin(), node.args.end(), [&](std::size_t a) { return val[a] != 0; });
        break;
    }
  }
  return val[f.root] != 0;
}

inline Label evaluate(const DecisionTree& t, const Individual& x) {
  std::size_t at = 0;
  while (t.nodes[at].test) at = x[*t.nodes[at].test] ? t.nodes[at].if_true : t.nodes[at].if_false;
  return t.nodes[at].label;
}

/// Output bits of the last layer.
inline std::vector<bool> evaluate_layers(const ThresholdNetwork& net, const Individual& x) {
  std::vector<bool> in = x.values();
  for (const auto& layer : net.layers) {
    std::vector<bool> out(layer.size());
    for (std::size_t u = 0; u < layer.size(); ++u) {
      std::int64_t sum = 0;
      for (std::size_t i = 0; i < in.size(); ++i)
        if (in[i]) sum += layer[u].weights[i];
      out[u] = sum >= layer[u].bias;
    }
    in = std::move(out);
  }
  return in;
}

inline std::size_t threshold_label_index(const std::vector<bool>& outputs) {
  for (std::size_t j = outputs.size(); j > 0; --j)
    if (outputs[j - 1]) return j;
  return 0;
}

/// Decision of `model` for `x`. `x` must be total over the model's features.
inline Label evaluate(const DecisionModel& model, const Individual& x) {
  switch (model.kind()) {
    case ModelKind::Formula:
      return model.labels[evaluate(std::get<Formula>(model.body), x) ? 1 : 0];
    case ModelKind::Tree:
      return evaluate(std::get<DecisionTree>(model.body), x);
    case ModelKind::Threshold:
      return model.labels[threshold_label_index(evaluate_layers(std::get<ThresholdNetwork>(model.body), x))];
  }
  return model.labels.front();
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Signed conjunction, e.g. "D ∧ ¬H". The empty conjunction renders as "⊤".
inline std::string render(const LiteralSet& s, const FeatureSpace& features) {
  if (s.empty()) return "⊤";
  std::string out;
  for (const auto& [f, v] : s) {
    if (!out.empty()) out += " ∧ ";
    if (!v) out += "¬";
    out += features.name(f);
  }
  return out;
}

inline std::string render(const Individual& x, const FeatureSpace& features) {
  return render(LiteralSet::of(x), features);
}

}  // namespace leakaudit
