#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "leakaudit/core.hpp"
#include "leakaudit/encode.hpp"
#include "leakaudit/explain.hpp"
#include "leakaudit/sat_bridge.hpp"

namespace leakaudit {

/// `Theorem`: the LPPAE only has to avoid the protected literal, which any
/// explanation of a shield does automatically. `Strict`: the LPPAE must not
/// mention the sensitive feature at all.
enum class ExclusionMode { Theorem, Strict };

inline std::string_view to_string(ExclusionMode m) { return m == ExclusionMode::Theorem ? "theorem" : "strict"; }

inline std::optional<ExclusionMode> parse_exclusion_mode(std::string_view s) {
  if (s == "theorem") return ExclusionMode::Theorem;
  if (s == "strict") return ExclusionMode::Strict;
  return std::nullopt;
}

class IterationCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AuditOptions {
  ExclusionMode mode = ExclusionMode::Theorem;
  ExplainOptions explain;
  /// Strict mode: how many further shields to try before falling back.
  std::size_t strict_retries = 8;
  /// Blocking records carry the candidate's decision. Turning this off blocks
  /// on the open literals alone; only meant for comparison experiments.
  bool block_on_decision = true;
  std::optional<std::uint64_t> iteration_cap;
};

struct RunStats {
  std::uint64_t oracle_calls = 0;
  double elapsed_seconds = 0;
};

/// Owns everything one audit run needs: the problem, its encoding and a
/// persistent solver context.
class AuditSession {
 public:
  explicit AuditSession(AuditProblem problem, OracleOptions oracle_opts = {}, const EncodeOptions& enc_opts = {})
      : problem_(std::move(problem)),
        oracle_(std::make_shared<const CnfEncoding>(encode(problem_, enc_opts)), oracle_opts) {}

  const AuditProblem& problem() const { return problem_; }
  const ProfilePartition& partition() const { return problem_.partition; }
  const CnfEncoding& encoding() const { return oracle_.encoding(); }
  SatOracle& oracle() { return oracle_; }

  Label decide(const Individual& x) const { return evaluate(problem_.model, x); }

 private:
  AuditProblem problem_;
  SatOracle oracle_;
};

namespace detail {

class StatsScope {
 public:
  explicit StatsScope(const SatOracle& oracle)
      : oracle_(oracle), calls_(oracle.calls()), start_(std::chrono::steady_clock::now()) {}
  RunStats finish() const {
    return {oracle_.calls() - calls_,
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()};
  }

 private:
  const SatOracle& oracle_;
  std::uint64_t calls_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Individual audit
// ---------------------------------------------------------------------------

struct LppaeSearch {
  std::optional<Explanation> lppae;
  std::optional<Individual> shield;  // same open profile, opposite sensitive value, same decision
  std::vector<std::string> notes;
};

/// Looks for a shield of `x` and explains the shield's decision. Requires
/// x[s] = protected value.
inline LppaeSearch search_lppae(const Individual& x, AuditSession& session, const AuditOptions& opts = {}) {
  const auto& part = session.partition();
  const FeatureIndex s = part.sensitive();
  const bool nu = part.protected_value();
  if (x.size() != session.problem().num_features())
    throw InvariantError("individual has " + std::to_string(x.size()) + " values, expected " +
                         std::to_string(session.problem().num_features()));
  if (x[s] != nu) throw InvariantError("search_lppae requires an individual holding the protected value");

  const Label d = session.decide(x);
  QueryConstraints q;
  q.fixed = restrict(x, Side::Open, part);
  q.fixed.insert(s, !nu);
  q.required_label = d;

  LppaeSearch out;
  auto shield = session.oracle().find_individual(q);
  if (!shield) return out;

  if (opts.mode == ExclusionMode::Strict) {
    const LiteralSet forbidden{{s, !nu}};
    std::optional<Individual> candidate = shield;
    for (std::size_t attempt = 0; candidate && attempt <= opts.strict_retries; ++attempt) {
      auto e = minimal_explanation(*candidate, d, forbidden, session.oracle(), part, opts.explain);
      if (e) {
        out.lppae = std::move(e);
        out.shield = std::move(candidate);
        return out;
      }
      q.blocked.push_back({LiteralSet::of(*candidate), std::nullopt});
      candidate = session.oracle().find_individual(q);
    }
    out.notes.push_back(candidate ? "strict mode: retry bound reached, fell back to theorem mode"
                                  : "strict mode: no shield admits an explanation free of the sensitive feature, "
                                    "fell back to theorem mode");
  }

  out.lppae = minimal_explanation(*shield, d, {}, session.oracle(), part, opts.explain);
  if (!out.lppae) throw std::logic_error("full assignment of a shield is not a valid explanation");
  out.shield = std::move(shield);
  return out;
}

struct IndividualVerdict {
  Individual subject;
  Label decision = 0;
  bool sensitive = true;  // subject holds the protected value
  bool leaks = false;
  std::optional<Explanation> lppae;
  std::optional<Individual> shield;
  std::vector<std::string> notes;
  RunStats stats;
};

inline IndividualVerdict audit_individual(const Individual& x, AuditSession& session, const AuditOptions& opts = {}) {
  detail::StatsScope scope(session.oracle());
  IndividualVerdict v;
  v.subject = x;
  v.decision = session.decide(x);
  const auto& part = session.partition();
  if (x[part.sensitive()] != part.protected_value()) {
    v.sensitive = false;
    v.notes.emplace_back("not sensitive: subject does not hold the protected value, exempt from the audit");
  } else {
    LppaeSearch r = search_lppae(x, session, opts);
    v.leaks = !r.lppae;
    v.lppae = std::move(r.lppae);
    v.shield = std::move(r.shield);
    v.notes = std::move(r.notes);
  }
  v.stats = scope.finish();
  return v;
}

/// Checks that `e` is an LPPAE for `x` under the given mode: it excludes the
/// protected literal (strict: the whole sensitive feature), its open part is
/// satisfied by x, it yields x's decision, and it is a valid explanation.
inline bool is_lppae_for(const Explanation& e, const Individual& x, AuditSession& session,
                         ExclusionMode mode = ExclusionMode::Theorem) {
  const auto& part = session.partition();
  const FeatureIndex s = part.sensitive();
  if (e.literals.contains(s, part.protected_value())) return false;
  if (mode == ExclusionMode::Strict && e.literals.mentions(s)) return false;
  if (!restrict(e.literals, Side::Open, part).subset_of(restrict(x, Side::Open, part))) return false;
  if (e.decision != session.decide(x)) return false;
  return session.oracle().check_validity(e.literals, e.decision);
}

// ---------------------------------------------------------------------------
// Model audit
// ---------------------------------------------------------------------------

struct CoverRecord {
  Individual candidate;
  Individual shield;
  Explanation lppae;
  BlockingRecord block;
};

struct ModelVerdict {
  bool leaks = false;
  std::optional<Individual> counterexample;
  std::vector<CoverRecord> cover;
  std::uint64_t iterations = 0;
  std::vector<std::string> notes;
  RunStats stats;
};

/// 2^|open| * |labels| + 1, saturating.
inline std::uint64_t default_iteration_cap(const AuditProblem& p) {
  const std::size_t open = p.partition.open_features().size();
  const std::uint64_t labels = p.model.labels.size();
  if (open >= 60) return std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t classes = std::uint64_t{1} << open;
  if (classes > (std::numeric_limits<std::uint64_t>::max() - 1) / labels) return std::numeric_limits<std::uint64_t>::max();
  return classes * labels + 1;
}

/// Repeatedly picks an unaudited sensitive individual, searches an LPPAE for
/// it and blocks the whole equivalence class of that LPPAE (its open literals
/// together with the decision). Stops at the first individual without an
/// LPPAE, or when no unblocked sensitive individual remains.
inline ModelVerdict audit_model(AuditSession& session, const AuditOptions& opts = {}) {
  detail::StatsScope scope(session.oracle());
  const auto& part = session.partition();
  const std::uint64_t cap = opts.iteration_cap.value_or(default_iteration_cap(session.problem()));

  ModelVerdict v;
  QueryConstraints k;
  k.fixed.insert(part.sensitive(), part.protected_value());
  while (auto x = session.oracle().find_individual(k)) {
    if (v.iterations >= cap)
      throw IterationCapExceeded("model audit exceeded its iteration cap of " + std::to_string(cap));
    ++v.iterations;
    LppaeSearch r = search_lppae(*x, session, opts);
    for (auto& n : r.notes) v.notes.push_back(std::move(n));
    if (!r.lppae) {
      v.leaks = true;
      v.counterexample = std::move(x);
      break;
    }
    BlockingRecord block{restrict(r.lppae->literals, Side::Open, part), std::nullopt};
    if (opts.block_on_decision) block.label = r.lppae->decision;
    k.blocked.push_back(block);
    v.cover.push_back({std::move(*x), std::move(*r.shield), std::move(*r.lppae), std::move(block)});
  }
  v.stats = scope.finish();
  return v;
}

}  // namespace leakaudit
