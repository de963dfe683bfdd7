#pragma once

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "leakaudit/core.hpp"

namespace leakaudit::gen {

/// Seeded generator. std::mt19937_64 output is fixed by the standard; bounded
/// draws use rejection on the raw output, so sequences are identical across
/// platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [lo, hi].
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t r;
    do r = engine_();
    while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(n) - 1)); }
  bool coin() { return uniform(0, 1) == 1; }
  /// True with probability num/den.
  bool chance(int num, int den) { return uniform(0, den - 1) < num; }

 private:
  std::mt19937_64 engine_;
};

struct RandomModelParams {
  std::size_t formula_depth = 4;
  std::size_t tree_depth = 4;
  std::vector<std::size_t> hidden_layers;  // widths of hidden threshold layers
  std::int64_t weight_range = 4;           // weights drawn from [-range, range]
  std::size_t num_labels = 2;              // tree and threshold kinds
  std::size_t max_retries = 64;            // rejection sampling of constant models
};

namespace detail {

inline std::size_t random_formula(Rng& rng, Formula& f, std::size_t n, std::size_t depth) {
  if (depth == 0 || rng.chance(1, 4)) return f.var(rng.index(n));
  switch (rng.uniform(0, 4)) {
    case 0: return f.negate(random_formula(rng, f, n, depth - 1));
    case 1:
    case 2: {
      std::vector<std::size_t> kids;
      for (std::int64_t i = 0, k = rng.uniform(2, 3); i < k; ++i) kids.push_back(random_formula(rng, f, n, depth - 1));
      return f.conj(std::move(kids));
    }
    default: {
      std::vector<std::size_t> kids;
      for (std::int64_t i = 0, k = rng.uniform(2, 3); i < k; ++i) kids.push_back(random_formula(rng, f, n, depth - 1));
      return f.disj(std::move(kids));
    }
  }
}

inline std::size_t random_tree(Rng& rng, DecisionTree& t, std::vector<bool>& used, std::size_t depth,
                               const std::vector<Label>& labels) {
  std::vector<FeatureIndex> free;
  for (FeatureIndex f = 0; f < used.size(); ++f)
    if (!used[f]) free.push_back(f);
  if (depth == 0 || free.empty() || rng.chance(1, 5)) return t.leaf(labels[rng.index(labels.size())]);
  FeatureIndex f = free[rng.index(free.size())];
  std::size_t self = t.leaf(0);
  used[f] = true;
  std::size_t a = random_tree(rng, t, used, depth - 1, labels);
  std::size_t b = random_tree(rng, t, used, depth - 1, labels);
  used[f] = false;
  t.nodes[self] = {f, 0, a, b};
  return self;
}

inline ThresholdNetwork::Unit random_unit(Rng& rng, std::size_t inputs, std::int64_t range) {
  ThresholdNetwork::Unit u;
  std::int64_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < inputs; ++i) {
    std::int64_t w = rng.uniform(-range, range);
    u.weights.push_back(w);
    (w < 0 ? lo : hi) += w;
  }
  // Bias strictly inside the reachable sum range so the unit is not constant
  // (unless every weight is zero).
  u.bias = rng.uniform(lo + 1, std::max(lo + 1, hi));
  return u;
}

inline bool is_constant(const AuditProblem& p, Rng& rng) {
  const std::size_t n = p.num_features();
  std::optional<Label> first;
  const bool exhaustive = n <= 16;
  const std::uint64_t count = exhaustive ? (std::uint64_t{1} << n) : 4096;
  for (std::uint64_t k = 0; k < count; ++k) {
    std::vector<bool> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = exhaustive ? ((k >> i) & 1U) : rng.coin();
    Label l = evaluate(p.model, Individual(std::move(v)));
    if (!first) first = l;
    if (l != *first) return false;
  }
  return true;
}

}  // namespace detail

/// Reproducible random audit problem: features x0..x{n-1}, one private
/// sensitive feature with a random protected value, a random nonempty open
/// set, and a model of the requested kind. Constant models are rejected and
/// redrawn up to `max_retries` times.
inline AuditProblem random_model(std::uint64_t seed, std::size_t n, ModelKind kind,
                                 const RandomModelParams& params = {}) {
  if (n < 2) throw InvariantError("random_model needs at least 2 features (one open, one sensitive)");
  if (n > 62) throw InvariantError("random_model supports at most 62 features");
  if (params.weight_range < 1) throw InvariantError("invalid shape-params: weight_range must be >= 1");
  if (params.num_labels < 1) throw InvariantError("invalid shape-params: num_labels must be >= 1");
  if (kind == ModelKind::Formula && params.num_labels != 2)
    throw InvariantError("invalid shape-params: formula models have exactly two labels");
  for (std::size_t w : params.hidden_layers)
    if (w == 0) throw InvariantError("invalid shape-params: hidden layer width must be >= 1");

  Rng rng(seed);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i));
  const FeatureIndex s = rng.index(n);
  std::vector<FeatureIndex> open;
  for (FeatureIndex f = 0; f < n; ++f)
    if (f != s && rng.coin()) open.push_back(f);
  if (open.empty()) {
    FeatureIndex f = rng.index(n - 1);
    open.push_back(f >= s ? f + 1 : f);
  }
  const bool nu = rng.coin();

  std::vector<Label> labels;
  for (std::size_t i = 0; i < params.num_labels; ++i) labels.push_back(static_cast<Label>(i));

  AuditProblem p{FeatureSpace(names), ProfilePartition(n, open, s, nu), DecisionModel{}};
  p.model.labels = labels;
  for (std::size_t attempt = 0; attempt <= params.max_retries; ++attempt) {
    switch (kind) {
      case ModelKind::Formula: {
        Formula f;
        f.root = detail::random_formula(rng, f, n, params.formula_depth);
        p.model.body = std::move(f);
        break;
      }
      case ModelKind::Tree: {
        DecisionTree t;
        std::vector<bool> used(n, false);
        detail::random_tree(rng, t, used, params.tree_depth, labels);
        p.model.body = std::move(t);
        break;
      }
      case ModelKind::Threshold: {
        ThresholdNetwork net;
        std::size_t width = n;
        for (std::size_t h : params.hidden_layers) {
          std::vector<ThresholdNetwork::Unit> layer;
          for (std::size_t u = 0; u < h; ++u) layer.push_back(detail::random_unit(rng, width, params.weight_range));
          net.layers.push_back(std::move(layer));
          width = h;
        }
        std::vector<ThresholdNetwork::Unit> out;
        for (std::size_t u = 0; u + 1 < params.num_labels; ++u)
          out.push_back(detail::random_unit(rng, width, params.weight_range));
        if (out.empty()) throw InvariantError("invalid shape-params: threshold models need at least two labels");
        net.layers.push_back(std::move(out));
        p.model.body = std::move(net);
        break;
      }
    }
    if (!detail::is_constant(p, rng)) break;
  }
  validate(p);
  return p;
}

// ---------------------------------------------------------------------------
// Exists-forall instances
// ---------------------------------------------------------------------------

/// exists Y. forall Z. matrix(Y, Z). Matrix variables index the concatenation
/// exists_vars ++ forall_vars.
struct QbfInstance {
  std::vector<std::string> exists_vars;
  std::vector<std::string> forall_vars;
  Formula matrix;

  std::size_t num_vars() const { return exists_vars.size() + forall_vars.size(); }
};

class QbfSyntaxError : public std::runtime_error {
 public:
  QbfSyntaxError(std::size_t offset, const std::string& msg)
      : std::runtime_error("offset " + std::to_string(offset) + ": " + msg), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

// Grammar:
//   file    := "exists" ident* ";" "forall" ident* ";" expr
//   expr    := term ("|" term)*
//   term    := factor ("&" factor)*
//   factor  := ("!" | "~") factor | "(" expr ")" | "true" | "false" | "1" | "0" | ident
//   ident   := [A-Za-z_][A-Za-z0-9_]*
class QbfParser {
 public:
  explicit QbfParser(std::string_view text) : text_(text) {}

  QbfInstance parse() {
    QbfInstance q;
    expect_word("exists");
    q.exists_vars = ident_list();
    expect(';');
    expect_word("forall");
    q.forall_vars = ident_list();
    expect(';');
    vars_ = q.exists_vars;
    vars_.insert(vars_.end(), q.forall_vars.begin(), q.forall_vars.end());
    for (std::size_t i = 0; i < vars_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (vars_[i] == vars_[j]) throw QbfSyntaxError(pos_, "variable '" + vars_[i] + "' declared twice");
    q.matrix.root = expr(q.matrix, 0);
    skip_ws();
    if (pos_ != text_.size()) throw QbfSyntaxError(pos_, "unexpected trailing input");
    return q;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) throw QbfSyntaxError(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }
  std::optional<std::string> ident() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
      return std::string(text_.substr(start, pos_ - start));
    }
    return std::nullopt;
  }
  void expect_word(std::string_view w) {
    std::size_t at = pos_;
    auto id = ident();
    if (!id || *id != w) throw QbfSyntaxError(at, "expected '" + std::string(w) + "'");
  }
  std::vector<std::string> ident_list() {
    std::vector<std::string> out;
    while (!peek(';')) {
      std::size_t at = pos_;
      auto id = ident();
      if (!id || std::isdigit(static_cast<unsigned char>((*id)[0])))
        throw QbfSyntaxError(at, "expected a variable name or ';'");
      out.push_back(*id);
    }
    return out;
  }
  std::size_t expr(Formula& f, std::size_t depth) {
    if (depth > 2048) throw QbfSyntaxError(pos_, "expression nesting too deep");
    std::vector<std::size_t> parts{term(f, depth)};
    while (peek('|')) {
      ++pos_;
      parts.push_back(term(f, depth));
    }
    return parts.size() == 1 ? parts[0] : f.disj(std::move(parts));
  }
  std::size_t term(Formula& f, std::size_t depth) {
    std::vector<std::size_t> parts{factor(f, depth)};
    while (peek('&')) {
      ++pos_;
      parts.push_back(factor(f, depth));
    }
    return parts.size() == 1 ? parts[0] : f.conj(std::move(parts));
  }
  std::size_t factor(Formula& f, std::size_t depth) {
    if (peek('!') || peek('~')) {
      ++pos_;
      return f.negate(factor(f, depth + 1));
    }
    if (peek('(')) {
      ++pos_;
      std::size_t e = expr(f, depth + 1);
      expect(')');
      return e;
    }
    std::size_t at = pos_;
    auto id = ident();
    if (!id) throw QbfSyntaxError(at, "expected a variable, constant, '!' or '('");
    if (*id == "true" || *id == "1") return f.constant(true);
    if (*id == "false" || *id == "0") return f.constant(false);
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == *id) return f.var(i);
    throw QbfSyntaxError(at, "undeclared variable '" + *id + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::string> vars_;
};

inline std::string formula_text(const Formula& f, std::size_t node, const std::vector<std::string>& names) {
  const auto& n = f.nodes[node];
  switch (n.op) {
    case Formula::Op::Const: return n.value ? "true" : "false";
    case Formula::Op::Var: return names[n.var];
    case Formula::Op::Not: return "!" + formula_text(f, n.args[0], names);
    default: break;
  }
  if (n.args.empty()) return n.op == Formula::Op::And ? "true" : "false";
  std::string out = "(";
  for (std::size_t i = 0; i < n.args.size(); ++i) {
    if (i) out += n.op == Formula::Op::And ? " & " : " | ";
    out += formula_text(f, n.args[i], names);
  }
  return out + ")";
}

}  // namespace detail

inline QbfInstance parse_qbf(std::string_view text) { return detail::QbfParser(text).parse(); }

inline std::string to_text(const QbfInstance& q) {
  std::string out = "exists";
  for (const auto& y : q.exists_vars) out += " " + y;
  out += "; forall";
  for (const auto& z : q.forall_vars) out += " " + z;
  out += ";\n";
  std::vector<std::string> names = q.exists_vars;
  names.insert(names.end(), q.forall_vars.begin(), q.forall_vars.end());
  return out + detail::formula_text(q.matrix, q.matrix.root, names) + "\n";
}

/// Truth of exists Y forall Z matrix, by enumeration.
inline bool qbf_truth(const QbfInstance& q) {
  const std::size_t ny = q.exists_vars.size(), nz = q.forall_vars.size();
  if (ny + nz > 30) throw std::invalid_argument("qbf_truth: too many variables to enumerate");
  for (std::uint64_t y = 0; y < (std::uint64_t{1} << ny); ++y) {
    bool all = true;
    for (std::uint64_t z = 0; z < (std::uint64_t{1} << nz) && all; ++z)
      all = evaluate(q.matrix, Individual::from_mask(y | (z << ny), ny + nz));
    if (all) return true;
  }
  return false;
}

/// Random instance; the matrix is a random formula over Y and Z.
inline QbfInstance random_qbf(std::uint64_t seed, std::size_t ny, std::size_t nz, std::size_t depth = 3) {
  if (ny + nz == 0) throw std::invalid_argument("random_qbf needs at least one variable");
  Rng rng(seed);
  QbfInstance q;
  for (std::size_t i = 0; i < ny; ++i) q.exists_vars.push_back("y" + std::to_string(i));
  for (std::size_t i = 0; i < nz; ++i) q.forall_vars.push_back("z" + std::to_string(i));
  q.matrix.root = detail::random_formula(rng, q.matrix, ny + nz, depth);
  return q;
}

struct QbfReduction {
  AuditProblem problem;
  std::optional<bool> expected;  // truth of the QBF, when within budget
};

/// Leakage instance whose model leaks iff exists Y forall Z matrix holds:
/// features Y ∪ Z ∪ {s}, open profile Y, sensitive literal s = true, and
/// decision s ∨ ¬matrix.
inline QbfReduction from_qbf(const QbfInstance& q, std::size_t expected_budget = 16) {
  std::vector<std::string> names = q.exists_vars;
  names.insert(names.end(), q.forall_vars.begin(), q.forall_vars.end());
  std::string s_name = "s";
  while (std::find(names.begin(), names.end(), s_name) != names.end()) s_name += "_";
  const FeatureIndex s = names.size();
  names.push_back(s_name);

  std::vector<FeatureIndex> open;
  for (FeatureIndex i = 0; i < q.exists_vars.size(); ++i) open.push_back(i);

  Formula f = q.matrix;
  const std::size_t matrix_root = f.root;
  f.root = f.disj({f.var(s), f.negate(matrix_root)});

  QbfReduction out{AuditProblem{FeatureSpace(names), ProfilePartition(names.size(), open, s, true), DecisionModel{}},
                   std::nullopt};
  out.problem.model.body = std::move(f);
  validate(out.problem);
  if (q.num_vars() <= expected_budget) out.expected = qbf_truth(q);
  return out;
}

}  // namespace leakaudit::gen
