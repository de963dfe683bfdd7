#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "leakaudit/core.hpp"
#include "leakaudit/encode.hpp"
#include "leakaudit/sat/solver.hpp"

namespace leakaudit {

/// The satisfiability oracle gave up (conflict budget exhausted). Never means
/// "no solution".
class OracleFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Excludes every individual that satisfies `literals` and, when set, also
/// receives `label`.
struct BlockingRecord {
  LiteralSet literals;
  std::optional<Label> label;

  auto operator<=>(const BlockingRecord&) const = default;
  bool operator==(const BlockingRecord&) const = default;
};

struct QueryConstraints {
  LiteralSet fixed;
  std::optional<Label> required_label;
  std::optional<Label> forbidden_label;
  std::vector<BlockingRecord> blocked;
};

struct OracleOptions {
  std::int64_t conflict_budget = -1;  // per query; negative = unlimited
  std::uint64_t seed = 0;
};

/// One persistent solver context over an immutable encoding. Per-query
/// constraints become assumptions; blocking records are added once as clauses
/// guarded by a selector variable and switched on by assumption, so queries
/// that do not mention a record are unaffected by it.
///
/// Single-owner: not safe to share across threads. Independent contexts may be
/// built from the same encoding concurrently.
class SatOracle {
 public:
  explicit SatOracle(std::shared_ptr<const CnfEncoding> enc, OracleOptions opts = {})
      : enc_(std::move(enc)), opts_(opts) {
    solver_.set_seed(opts_.seed);
    solver_.set_conflict_budget(opts_.conflict_budget);
    solver_.reserve_vars(static_cast<int>(enc_->num_vars));
    for (const auto& c : enc_->clauses) solver_.add_clause(c);
  }

  const CnfEncoding& encoding() const { return *enc_; }
  std::shared_ptr<const CnfEncoding> shared_encoding() const { return enc_; }
  std::uint64_t calls() const { return calls_; }
  const sat::SolverStats& solver_stats() const { return solver_.stats(); }
  std::size_t num_features() const { return enc_->input_var.size(); }

  /// Some individual meeting every constraint in `q`, or nullopt if none exists.
  std::optional<Individual> find_individual(const QueryConstraints& q) {
    if (q.required_label && q.forbidden_label && *q.required_label == *q.forbidden_label)
      return std::nullopt;
    std::vector<int> assume = fixed_assumptions(q.fixed);
    if (q.required_label) assume.push_back(enc_->label(*q.required_label));
    if (q.forbidden_label) assume.push_back(-enc_->label(*q.forbidden_label));
    for (const auto& rec : q.blocked) assume.push_back(selector(rec));
    // Search from the all-true corner so the answer does not depend on
    // phases left behind by earlier queries.
    for (int v : enc_->input_var) solver_.set_phase(v, true);
    if (!run(assume)) return std::nullopt;
    std::vector<bool> values(num_features());
    for (FeatureIndex f = 0; f < values.size(); ++f) values[f] = solver_.model_value(enc_->input(f));
    return Individual(std::move(values));
  }

  /// True iff every completion of `xp` receives label `d`.
  bool check_validity(const LiteralSet& xp, Label d) {
    std::vector<int> assume = fixed_assumptions(xp);
    assume.push_back(-enc_->label(d));
    return !run(assume);
  }

 private:
  std::vector<int> fixed_assumptions(const LiteralSet& s) const {
    std::vector<int> out;
    for (const auto& [f, v] : s) {
      if (f >= num_features()) throw InvariantError("literal references unknown feature index " + std::to_string(f));
      out.push_back(enc_->literal(f, v));
    }
    return out;
  }

  int selector(const BlockingRecord& rec) {
    if (auto it = selectors_.find(rec); it != selectors_.end()) return it->second;
    int sel = solver_.new_var();
    Clause c{-sel};
    for (const auto& [f, v] : rec.literals) c.push_back(-enc_->literal(f, v));
    if (rec.label) c.push_back(-enc_->label(*rec.label));
    solver_.add_clause(c);
    selectors_.emplace(rec, sel);
    return sel;
  }

  bool run(const std::vector<int>& assumptions) {
    ++calls_;
    switch (solver_.solve(assumptions)) {
      case sat::Result::Sat: return true;
      case sat::Result::Unsat: return false;
      case sat::Result::Unknown: break;
    }
    throw OracleFailure("satisfiability oracle exceeded its conflict budget of " +
                        std::to_string(opts_.conflict_budget));
  }

  std::shared_ptr<const CnfEncoding> enc_;
  OracleOptions opts_;
  sat::Solver solver_;
  std::map<BlockingRecord, int> selectors_;
  std::uint64_t calls_ = 0;
};

/// One-shot forms over a fresh context.
inline std::optional<Individual> find_individual(const CnfEncoding& enc, const QueryConstraints& q,
                                                 OracleOptions opts = {}) {
  SatOracle oracle(std::make_shared<const CnfEncoding>(enc), opts);
  return oracle.find_individual(q);
}

inline bool check_validity(const CnfEncoding& enc, const LiteralSet& xp, Label d, OracleOptions opts = {}) {
  SatOracle oracle(std::make_shared<const CnfEncoding>(enc), opts);
  return oracle.check_validity(xp, d);
}

}  // namespace leakaudit
