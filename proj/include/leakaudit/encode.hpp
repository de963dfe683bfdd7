#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "leakaudit/core.hpp"

namespace leakaudit {

/// Clause-count bound exceeded while encoding.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clause = std::vector<int>;

/// CNF of a decision model. Variables 1..n are the inputs (feature i is
/// variable i + 1), followed by one indicator per label, followed by
/// auxiliaries. For every total input assignment exactly one label indicator
/// is forced true, and it names the model's decision.
struct CnfEncoding {
  std::size_t num_vars = 0;
  std::vector<Clause> clauses;
  std::vector<int> input_var;                    // feature index -> variable
  std::vector<std::pair<Label, int>> label_var;  // label -> variable, in model label order
  std::size_t aux_count = 0;

  int input(FeatureIndex f) const { return input_var.at(f); }
  int label(Label l) const {
    for (const auto& [lab, v] : label_var)
      if (lab == l) return v;
    throw InvariantError("label " + std::to_string(l) + " has no indicator variable");
  }
  int literal(FeatureIndex f, bool polarity) const { return polarity ? input(f) : -input(f); }
};

struct EncodeOptions {
  std::size_t max_clauses = 20'000'000;
};

namespace detail {

/// Clause emitter with constant folding. Terms are DIMACS literals or one of
/// the two constant sentinels.
class CnfBuilder {
 public:
  static constexpr int kTrue = INT32_MAX;
  static constexpr int kFalse = -INT32_MAX;

  CnfBuilder(CnfEncoding& enc, const EncodeOptions& opts) : enc_(enc), opts_(opts) {}

  int fresh() {
    ++enc_.aux_count;
    return static_cast<int>(++enc_.num_vars);
  }

  void clause(Clause c) {
    Clause out;
    for (int l : c) {
      if (l == kTrue) return;
      if (l == kFalse) continue;
      out.push_back(l);
    }
    if (enc_.clauses.size() >= opts_.max_clauses)
      throw CapacityError("encoding exceeds the configured bound of " + std::to_string(opts_.max_clauses) + " clauses");
    enc_.clauses.push_back(std::move(out));
  }

  static int neg(int t) { return -t; }  // also maps kTrue <-> kFalse

  int conj(const std::vector<int>& in) {
    std::vector<int> lits;
    for (int t : in) {
      if (t == kFalse) return kFalse;
      if (t != kTrue) lits.push_back(t);
    }
    if (lits.empty()) return kTrue;
    if (lits.size() == 1) return lits[0];
    int y = fresh();
    Clause big{y};
    for (int l : lits) {
      clause({-y, l});
      big.push_back(-l);
    }
    clause(std::move(big));
    return y;
  }

  int disj(const std::vector<int>& in) {
    std::vector<int> neg_in;
    for (int t : in) neg_in.push_back(neg(t));
    return neg(conj(neg_in));
  }

  /// y <-> (c ? t : e)
  int ite(int c, int t, int e) {
    if (c == kTrue) return t;
    if (c == kFalse) return e;
    if (t == e) return t;
    if (t == kTrue) return disj({c, e});
    if (t == kFalse) return conj({neg(c), e});
    if (e == kTrue) return disj({neg(c), t});
    if (e == kFalse) return conj({c, t});
    int y = fresh();
    clause({-c, -t, y});
    clause({-c, t, -y});
    clause({c, -e, y});
    clause({c, e, -y});
    clause({-t, -e, y});
    clause({t, e, -y});
    return y;
  }

  /// Binds an existing variable to a term: v <-> t.
  void define(int v, int t) {
    if (t == kTrue) {
      clause({v});
    } else if (t == kFalse) {
      clause({-v});
    } else {
      clause({-v, t});
      clause({v, -t});
    }
  }

  /// Reified pseudo-Boolean constraint: returns a term equivalent to
  /// sum(weights[i] * inputs[i]) >= bound. Negative weights are normalised
  /// onto negated inputs; the remaining positive-coefficient constraint is
  /// translated through a memoised decision diagram over (position, residual
  /// bound), one if-then-else gate per node.
  int at_least(const std::vector<int>& inputs, const std::vector<std::int64_t>& weights, std::int64_t bound) {
    std::vector<int> lits;
    std::vector<std::int64_t> coefs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::int64_t w = weights[i];
      int t = inputs[i];
      if (w == 0) continue;
      if (w < 0) {
        // w*t = |w|*(1-t) - |w|
        bound += -w;
        w = -w;
        t = neg(t);
      }
      if (t == kTrue) {
        bound -= w;
        continue;
      }
      if (t == kFalse) continue;
      lits.push_back(t);
      coefs.push_back(w);
    }
    std::vector<std::int64_t> suffix(lits.size() + 1, 0);
    for (std::size_t i = lits.size(); i > 0; --i) suffix[i - 1] = suffix[i] + coefs[i - 1];
    std::map<std::pair<std::size_t, std::int64_t>, int> memo;
    return pb_node(0, bound, lits, coefs, suffix, memo);
  }

 private:
  int pb_node(std::size_t i, std::int64_t need, const std::vector<int>& lits, const std::vector<std::int64_t>& coefs,
              const std::vector<std::int64_t>& suffix, std::map<std::pair<std::size_t, std::int64_t>, int>& memo) {
    if (need <= 0) return kTrue;
    if (need > suffix[i]) return kFalse;
    auto key = std::make_pair(i, need);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    int hi = pb_node(i + 1, need - coefs[i], lits, coefs, suffix, memo);
    int lo = pb_node(i + 1, need, lits, coefs, suffix, memo);
    int y = ite(lits[i], hi, lo);
    memo.emplace(key, y);
    return y;
  }

  CnfEncoding& enc_;
  const EncodeOptions& opts_;
};

}  // namespace detail

/// Compiles a validated model to CNF.
inline CnfEncoding encode(const DecisionModel& model, std::size_t num_features, const EncodeOptions& opts = {}) {
  using detail::CnfBuilder;
  CnfEncoding enc;
  for (std::size_t f = 0; f < num_features; ++f) enc.input_var.push_back(static_cast<int>(++enc.num_vars));
  for (Label l : model.labels) enc.label_var.emplace_back(l, static_cast<int>(++enc.num_vars));
  CnfBuilder b(enc, opts);

  std::vector<int> label_terms(model.labels.size(), CnfBuilder::kFalse);
  bool labels_defined = true;

  if (const auto* f = std::get_if<Formula>(&model.body)) {
    std::vector<int> term(f->nodes.size(), CnfBuilder::kFalse);
    for (std::size_t i = 0; i < f->nodes.size(); ++i) {
      const auto& node = f->nodes[i];
      std::vector<int> kids;
      for (std::size_t a : node.args) kids.push_back(term[a]);
      switch (node.op) {
        case Formula::Op::Const: term[i] = node.value ? CnfBuilder::kTrue : CnfBuilder::kFalse; break;
        case Formula::Op::Var: term[i] = enc.input(node.var); break;
        case Formula::Op::Not: term[i] = CnfBuilder::neg(kids[0]); break;
        case Formula::Op::And: term[i] = b.conj(kids); break;
        case Formula::Op::Or: term[i] = b.disj(kids); break;
      }
    }
    label_terms[0] = CnfBuilder::neg(term[f->root]);
    label_terms[1] = term[f->root];
  } else if (const auto* t = std::get_if<DecisionTree>(&model.body)) {
    // One clause per root-to-leaf path: path literals imply the leaf's label.
    labels_defined = false;
    struct Frame {
      std::size_t node;
      Clause negated_path;
    };
    std::vector<Frame> stack{{0, {}}};
    while (!stack.empty()) {
      Frame fr = std::move(stack.back());
      stack.pop_back();
      const auto& node = t->nodes[fr.node];
      if (!node.test) {
        Clause c = fr.negated_path;
        c.push_back(enc.label(node.label));
        b.clause(std::move(c));
        continue;
      }
      int v = enc.input(*node.test);
      Clause on_true = fr.negated_path, on_false = std::move(fr.negated_path);
      on_true.push_back(-v);
      on_false.push_back(v);
      stack.push_back({node.if_false, std::move(on_false)});
      stack.push_back({node.if_true, std::move(on_true)});
    }
  } else {
    const auto& net = std::get<ThresholdNetwork>(model.body);
    std::vector<int> in(enc.input_var.begin(), enc.input_var.end());
    for (const auto& layer : net.layers) {
      std::vector<int> out;
      for (const auto& unit : layer) out.push_back(b.at_least(in, unit.weights, unit.bias));
      in = std::move(out);
    }
    // label j (j >= 1): unit j-1 fires and no later unit fires; label 0: none fires.
    for (std::size_t j = 0; j < label_terms.size(); ++j) {
      std::vector<int> parts;
      if (j > 0) parts.push_back(in[j - 1]);
      for (std::size_t k = j; k < in.size(); ++k) parts.push_back(CnfBuilder::neg(in[k]));
      label_terms[j] = b.conj(parts);
    }
  }

  if (labels_defined)
    for (std::size_t j = 0; j < label_terms.size(); ++j) b.define(enc.label_var[j].second, label_terms[j]);

  // Exactly one label indicator.
  Clause some;
  for (std::size_t j = 0; j < enc.label_var.size(); ++j) {
    some.push_back(enc.label_var[j].second);
    for (std::size_t k = j + 1; k < enc.label_var.size(); ++k)
      b.clause({-enc.label_var[j].second, -enc.label_var[k].second});
  }
  b.clause(std::move(some));
  return enc;
}

inline CnfEncoding encode(const AuditProblem& p, const EncodeOptions& opts = {}) {
  return encode(p.model, p.num_features(), opts);
}

/// DIMACS CNF text.
inline void write_dimacs(std::ostream& os, const CnfEncoding& enc) {
  os << "p cnf " << enc.num_vars << ' ' << enc.clauses.size() << '\n';
  for (const auto& c : enc.clauses) {
    for (int l : c) os << l << ' ';
    os << "0\n";
  }
}

/// Variable map sidecar: feature names and labels to DIMACS indices.
inline nlohmann::json variable_map(const CnfEncoding& enc, const FeatureSpace& features) {
  nlohmann::json inputs = nlohmann::json::object();
  for (FeatureIndex f = 0; f < features.size(); ++f) inputs[features.name(f)] = enc.input(f);
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [l, v] : enc.label_var) labels[std::to_string(l)] = v;
  return {{"num_vars", enc.num_vars},
          {"num_clauses", enc.clauses.size()},
          {"aux_count", enc.aux_count},
          {"inputs", std::move(inputs)},
          {"labels", std::move(labels)}};
}

}  // namespace leakaudit
