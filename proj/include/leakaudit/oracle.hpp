#pragma once

// Brute-force ground truth by enumeration over all 2^n individuals. Nothing
// here touches the CNF encoding or the solver.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "leakaudit/core.hpp"

namespace leakaudit::oracle {

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleBudget {
  std::size_t max_features = 16;
};

inline void check_budget(const AuditProblem& p, const OracleBudget& budget) {
  if (p.num_features() > budget.max_features || p.num_features() > 30)
    throw BudgetExceeded("brute-force oracle refuses " + std::to_string(p.num_features()) +
                         " features (budget " + std::to_string(budget.max_features) + ")");
}

/// Decision for every individual, indexed by mask (bit i = feature i).
class TruthTable {
 public:
  TruthTable(const AuditProblem& p, const OracleBudget& budget) : n_(p.num_features()) {
    check_budget(p, budget);
    labels_.resize(std::size_t{1} << n_);
    for (std::uint64_t m = 0; m < labels_.size(); ++m) labels_[m] = evaluate(p.model, Individual::from_mask(m, n_));
  }

  std::size_t num_features() const { return n_; }
  std::uint64_t size() const { return labels_.size(); }
  Label operator[](std::uint64_t mask) const { return labels_[mask]; }

 private:
  std::size_t n_;
  std::vector<Label> labels_;
};

namespace detail {

inline std::uint64_t side_mask(const ProfilePartition& part, bool open) {
  std::uint64_t m = 0;
  for (FeatureIndex f = 0; f < part.num_features(); ++f)
    if (part.is_open(f) == open) m |= std::uint64_t{1} << f;
  return m;
}

/// Individual at position `k` of lexicographic order (feature 0 most significant).
inline std::uint64_t lex_mask(std::uint64_t k, std::size_t n) {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < n; ++i)
    if ((k >> (n - 1 - i)) & 1U) m |= std::uint64_t{1} << i;
  return m;
}

inline bool leaks_at(const TruthTable& tt, const ProfilePartition& part, std::uint64_t x) {
  const std::uint64_t priv = side_mask(part, false);
  const std::uint64_t sbit = std::uint64_t{1} << part.sensitive();
  const std::uint64_t open_bits = x & ~priv;
  const Label d = tt[x];
  // Every completion of the open profile: open bits fixed, private bits free.
  for (std::uint64_t sub = priv;; sub = (sub - 1) & priv) {
    std::uint64_t y = open_bits | sub;
    if ((y & sbit) != (x & sbit) && tt[y] == d) return false;
    if (sub == 0) break;
  }
  return true;
}

}  // namespace detail

/// Individual leakage by definition: no x' with the same open profile, the
/// other sensitive value and the same decision.
inline bool bf_individual_leaks(const AuditProblem& p, const Individual& x, const OracleBudget& budget = {}) {
  if (x[p.partition.sensitive()] != p.partition.protected_value())
    throw InvariantError("bf_individual_leaks requires an individual holding the protected value");
  TruthTable tt(p, budget);
  return detail::leaks_at(tt, p.partition, x.mask());
}

inline bool bf_individual_leaks(const TruthTable& tt, const ProfilePartition& part, const Individual& x) {
  return detail::leaks_at(tt, part, x.mask());
}

struct ModelLeak {
  bool leaks = false;
  std::optional<Individual> first_leaker;
};

/// First leaking individual in lexicographic order (feature 0 most significant,
/// false before true), if any.
inline ModelLeak bf_model_leaks(const AuditProblem& p, const OracleBudget& budget = {}) {
  TruthTable tt(p, budget);
  const auto& part = p.partition;
  const std::size_t n = p.num_features();
  const std::uint64_t sbit = std::uint64_t{1} << part.sensitive();
  const bool nu = part.protected_value();
  for (std::uint64_t k = 0; k < tt.size(); ++k) {
    std::uint64_t m = detail::lex_mask(k, n);
    if (((m & sbit) != 0) != nu) continue;
    if (detail::leaks_at(tt, part, m)) return {true, Individual::from_mask(m, n)};
  }
  return {};
}

/// Every completion of `xp` receives `d`.
inline bool bf_is_valid(const TruthTable& tt, const LiteralSet& xp, Label d) {
  std::uint64_t fixed_mask = 0, fixed_bits = 0;
  for (const auto& [f, v] : xp) {
    fixed_mask |= std::uint64_t{1} << f;
    if (v) fixed_bits |= std::uint64_t{1} << f;
  }
  const std::uint64_t all = tt.size() - 1;
  const std::uint64_t free = all & ~fixed_mask;
  for (std::uint64_t sub = free;; sub = (sub - 1) & free) {
    if (tt[fixed_bits | sub] != d) return false;
    if (sub == 0) break;
  }
  return true;
}

/// All subset-minimal valid subsets of x's literals, ordered by subset mask.
inline std::vector<LiteralSet> bf_enumerate_min_explanations(const TruthTable& tt, const Individual& x) {
  const std::size_t n = tt.num_features();
  const std::uint64_t xm = x.mask();
  const std::uint64_t all = tt.size() - 1;
  const Label d = tt[xm];
  std::vector<char> valid(tt.size(), 0);
  for (std::uint64_t s = 0; s <= all; ++s) {
    const std::uint64_t free = all & ~s;
    bool ok = true;
    for (std::uint64_t sub = free;; sub = (sub - 1) & free) {
      if (tt[(xm & s) | sub] != d) {
        ok = false;
        break;
      }
      if (sub == 0) break;
    }
    valid[s] = ok;
  }
  std::vector<LiteralSet> out;
  for (std::uint64_t s = 0; s <= all; ++s) {
    if (!valid[s]) continue;
    bool minimal = true;
    for (std::size_t i = 0; i < n && minimal; ++i)
      if (((s >> i) & 1U) && valid[s & ~(std::uint64_t{1} << i)]) minimal = false;
    if (!minimal) continue;
    LiteralSet ls;
    for (std::size_t i = 0; i < n; ++i)
      if ((s >> i) & 1U) ls.insert(i, x[i]);
    out.push_back(std::move(ls));
  }
  return out;
}

inline std::vector<LiteralSet> bf_enumerate_min_explanations(const AuditProblem& p, const Individual& x,
                                                             const OracleBudget& budget = {}) {
  return bf_enumerate_min_explanations(TruthTable(p, budget), x);
}

/// Every individual with the same open profile, the other sensitive value and
/// the same decision as `x`.
inline std::vector<Individual> bf_shields(const TruthTable& tt, const ProfilePartition& part, const Individual& x) {
  const std::uint64_t priv = detail::side_mask(part, false);
  const std::uint64_t sbit = std::uint64_t{1} << part.sensitive();
  const std::uint64_t xm = x.mask();
  std::vector<Individual> out;
  for (std::uint64_t sub = priv;; sub = (sub - 1) & priv) {
    std::uint64_t y = (xm & ~priv) | sub;
    if ((y & sbit) != (xm & sbit) && tt[y] == tt[xm]) out.push_back(Individual::from_mask(y, tt.num_features()));
    if (sub == 0) break;
  }
  return out;
}

}  // namespace leakaudit::oracle
