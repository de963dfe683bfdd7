#pragma once

#include <algorithm>
#include <optional>
#include <string_view>
#include <vector>

#include "leakaudit/core.hpp"
#include "leakaudit/sat_bridge.hpp"

namespace leakaudit {

enum class ExplanationClass { Open, Private, Partial };

inline std::string_view to_string(ExplanationClass c) {
  switch (c) {
    case ExplanationClass::Open: return "open";
    case ExplanationClass::Private: return "private";
    case ExplanationClass::Partial: return "partial";
  }
  return "?";
}

/// Open if every feature is open (the empty set included), private if every
/// feature is private, partial otherwise.
inline ExplanationClass classify_explanation(const LiteralSet& xp, const ProfilePartition& partition) {
  bool any_open = false, any_private = false;
  for (const auto& [f, v] : xp) (partition.is_open(f) ? any_open : any_private) = true;
  if (!any_private) return ExplanationClass::Open;
  if (!any_open) return ExplanationClass::Private;
  return ExplanationClass::Partial;
}

struct Explanation {
  LiteralSet literals;
  Label decision = 0;
  bool minimal = false;
  ExplanationClass cls = ExplanationClass::Open;

  bool operator==(const Explanation&) const = default;
};

enum class DeletionOrder {
  Ascending,     // feature index order
  PrivateFirst,  // private literals first, biasing results toward open literals
};

struct ExplainOptions {
  DeletionOrder order = DeletionOrder::PrivateFirst;
};

/// Deletion-based minimization. Seeds with the literals of `x` minus
/// `forbidden`; returns nullopt when that seed is not a valid explanation of
/// `d`. Otherwise drops, in the configured order, every literal whose removal
/// keeps the set valid. One validity query per literal, and the result is
/// subset-minimal because validity is monotone under adding literals.
inline std::optional<Explanation> minimal_explanation(const Individual& x, Label d, const LiteralSet& forbidden,
                                                      SatOracle& oracle, const ProfilePartition& partition,
                                                      const ExplainOptions& opts = {}) {
  LiteralSet current = LiteralSet::of(x).without(forbidden);
  if (!oracle.check_validity(current, d)) return std::nullopt;

  std::vector<FeatureIndex> order;
  for (const auto& [f, v] : current) order.push_back(f);
  if (opts.order == DeletionOrder::PrivateFirst)
    std::stable_partition(order.begin(), order.end(), [&](FeatureIndex f) { return !partition.is_open(f); });

  for (FeatureIndex f : order) {
    LiteralSet probe = current;
    probe.erase(f);
    if (oracle.check_validity(probe, d)) current = std::move(probe);
  }
  ExplanationClass cls = classify_explanation(current, partition);
  return Explanation{std::move(current), d, true, cls};
}

/// Validity of the literals plus the per-literal minimality probe.
inline bool verify_explanation(const Explanation& e, SatOracle& oracle) {
  if (!oracle.check_validity(e.literals, e.decision)) return false;
  if (!e.minimal) return true;
  for (const auto& [f, v] : e.literals) {
    LiteralSet probe = e.literals;
    probe.erase(f);
    if (oracle.check_validity(probe, e.decision)) return false;
  }
  return true;
}

struct FullyOpenResult {
  bool fully_open = false;
  std::optional<Explanation> witness;
};

/// A decision admits an open explanation iff the whole open profile is valid;
/// the witness is then minimized within the open profile.
inline FullyOpenResult is_fully_open(const Individual& x, Label d, SatOracle& oracle,
                                     const ProfilePartition& partition) {
  LiteralSet priv = restrict(x, Side::Private, partition);
  auto e = minimal_explanation(x, d, priv, oracle, partition);
  if (!e) return {false, std::nullopt};
  return {true, std::move(e)};
}

}  // namespace leakaudit
