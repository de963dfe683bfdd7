#pragma once

// Small incremental CDCL solver: two watched literals, first-UIP learning with
// local clause minimization, VSIDS, phase saving, Luby restarts, LBD-based
// learnt clause reduction, and solving under assumptions. Clauses may be added
// between calls; learnt clauses are kept across calls.

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace leakaudit::sat {

enum class Result { Sat, Unsat, Unknown };

struct SolverStats {
  std::uint64_t solves = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t decisions = 0;
  std::uint64_t propagations = 0;
  std::uint64_t restarts = 0;
};

class Solver {
 public:
  /// Allocates a fresh variable; returns its 1-based DIMACS index.
  int new_var() {
    const auto v = static_cast<Var>(assign_.size());
    assign_.push_back(0);
    level_.push_back(0);
    reason_.push_back(kNoClause);
    phase_.push_back(0);
    seen_.push_back(0);
    activity_.push_back(seed_ ? jitter() : 0.0);
    heap_pos_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(v);
    return static_cast<int>(v) + 1;
  }

  void reserve_vars(int n) {
    while (num_vars() < n) new_var();
  }

  int num_vars() const { return static_cast<int>(assign_.size()); }
  bool okay() const { return ok_; }

  /// Adds a permanent clause of DIMACS literals. Returns false once the clause
  /// database is unsatisfiable at the root.
  bool add_clause(std::span<const int> dimacs) {
    cancel_until(0);
    if (!ok_) return false;
    std::vector<Lit> lits;
    lits.reserve(dimacs.size());
    for (int d : dimacs) {
      if (d == 0 || std::abs(d) > num_vars()) throw std::out_of_range("clause literal references unknown variable");
      lits.push_back(to_lit(d));
    }
    std::sort(lits.begin(), lits.end());
    std::size_t j = 0;
    Lit prev = kNoLit;
    for (Lit l : lits) {
      if (value(l) == 1 || l == (prev ^ 1U)) return true;  // satisfied or tautology
      if (value(l) != -1 && l != prev) lits[j++] = prev = l;
    }
    lits.resize(j);
    if (lits.empty()) return ok_ = false;
    if (lits.size() == 1) {
      enqueue(lits[0], kNoClause);
      if (propagate() != kNoClause) ok_ = false;
      return ok_;
    }
    attach(store(std::move(lits), false, 0));
    return true;
  }

  bool add_clause(std::initializer_list<int> dimacs) { return add_clause(std::span<const int>(dimacs.begin(), dimacs.size())); }

  /// Negative budget means unlimited. Applies per solve() call.
  void set_conflict_budget(std::int64_t budget) { conflict_budget_ = budget; }

  /// Non-zero seeds perturb initial variable activities; seed 0 is fully
  /// deterministic with no randomness at all.
  void set_seed(std::uint64_t seed) {
    seed_ = seed;
    rng_.seed(seed);
  }

  /// Initial polarity for `var` when it is first decided; phase saving takes
  /// over afterwards.
  void set_phase(int var, bool value) {
    if (var <= 0 || var > num_vars()) throw std::out_of_range("phase for unknown variable");
    phase_[static_cast<std::size_t>(var) - 1] = static_cast<std::int8_t>(value ? 1 : -1);
  }

  Result solve(std::span<const int> assumptions = {}) {
    ++stats_.solves;
    model_.clear();
    cancel_until(0);
    if (!ok_) return Result::Unsat;
    assumptions_.clear();
    for (int d : assumptions) {
      if (d == 0 || std::abs(d) > num_vars()) throw std::out_of_range("assumption references unknown variable");
      assumptions_.push_back(to_lit(d));
    }
    const std::uint64_t start_conflicts = stats_.conflicts;
    Result result = Result::Unknown;
    for (std::uint64_t round = 0;; ++round) {
      const auto limit = static_cast<std::uint64_t>(luby(round) * kRestartBase);
      result = search(limit, start_conflicts);
      if (result != Result::Unknown) break;
      if (budget_exhausted(start_conflicts)) break;
      ++stats_.restarts;
    }
    cancel_until(0);
    return result;
  }

  Result solve(std::initializer_list<int> assumptions) {
    return solve(std::span<const int>(assumptions.begin(), assumptions.size()));
  }

  /// Value of a variable in the last satisfying assignment.
  bool model_value(int var) const {
    if (model_.empty()) throw std::logic_error("no model available");
    return model_.at(static_cast<std::size_t>(var - 1)) != 0;
  }

  const SolverStats& stats() const { return stats_; }

 private:
  using Var = std::uint32_t;
  using Lit = std::uint32_t;  // 2 * var + negated
  using CRef = std::uint32_t;
  static constexpr CRef kNoClause = std::numeric_limits<CRef>::max();
  static constexpr Lit kNoLit = std::numeric_limits<Lit>::max();
  static constexpr double kRestartBase = 100;

  struct Clause {
    std::vector<Lit> lits;
    double activity = 0;
    std::uint32_t lbd = 0;
    bool learnt = false;
    bool deleted = false;
  };
  struct Watcher {
    CRef cref;
    Lit blocker;
  };

  static Lit to_lit(int d) {
    return d > 0 ? static_cast<Lit>(2 * (d - 1)) : static_cast<Lit>(2 * (-d - 1) + 1);
  }
  static Var var_of(Lit l) { return l >> 1; }

  /// 1 true, -1 false, 0 unassigned.
  int value(Lit l) const {
    int v = assign_[var_of(l)];
    return (l & 1U) ? -v : v;
  }

  std::size_t decision_level() const { return trail_lim_.size(); }

  double jitter() {
    return std::uniform_real_distribution<double>(0.0, 1e-5)(rng_);
  }

  bool budget_exhausted(std::uint64_t start) const {
    return conflict_budget_ >= 0 && stats_.conflicts - start >= static_cast<std::uint64_t>(conflict_budget_);
  }

  static double luby(std::uint64_t i) {
    std::uint64_t size = 1, seq = 0;
    while (size < i + 1) {
      ++seq;
      size = 2 * size + 1;
    }
    double x = 1;
    while (size - 1 != i) {
      size = (size - 1) >> 1;
      --seq;
      i = i % size;
    }
    for (std::uint64_t k = 0; k < seq; ++k) x *= 2;
    return x;
  }

  CRef store(std::vector<Lit> lits, bool learnt, std::uint32_t lbd) {
    Clause c{std::move(lits), 0, lbd, learnt, false};
    if (!free_.empty()) {
      CRef r = free_.back();
      free_.pop_back();
      clauses_[r] = std::move(c);
      return r;
    }
    clauses_.push_back(std::move(c));
    return static_cast<CRef>(clauses_.size() - 1);
  }

  void attach(CRef r) {
    const auto& c = clauses_[r];
    watches_[c.lits[0] ^ 1U].push_back({r, c.lits[1]});
    watches_[c.lits[1] ^ 1U].push_back({r, c.lits[0]});
    if (c.learnt) learnts_.push_back(r);
  }

  void enqueue(Lit l, CRef reason) {
    Var v = var_of(l);
    assign_[v] = (l & 1U) ? -1 : 1;
    level_[v] = static_cast<std::uint32_t>(decision_level());
    reason_[v] = reason;
    trail_.push_back(l);
  }

  CRef propagate() {
    CRef conflict = kNoClause;
    while (qhead_ < trail_.size()) {
      const Lit p = trail_[qhead_++];
      const Lit false_lit = p ^ 1U;
      auto& ws = watches_[p];
      ++stats_.propagations;
      std::size_t i = 0, j = 0;
      while (i < ws.size()) {
        Watcher w = ws[i];
        if (value(w.blocker) == 1) {
          ws[j++] = ws[i++];
          continue;
        }
        Clause& c = clauses_[w.cref];
        if (c.deleted) {
          ++i;
          continue;
        }
        if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
        ++i;
        const Lit first = c.lits[0];
        const Watcher nw{w.cref, first};
        if (first != w.blocker && value(first) == 1) {
          ws[j++] = nw;
          continue;
        }
        bool moved = false;
        for (std::size_t k = 2; k < c.lits.size(); ++k) {
          if (value(c.lits[k]) != -1) {
            std::swap(c.lits[1], c.lits[k]);
            watches_[c.lits[1] ^ 1U].push_back(nw);
            moved = true;
            break;
          }
        }
        if (moved) continue;
        ws[j++] = nw;
        if (value(first) == -1) {
          conflict = w.cref;
          qhead_ = trail_.size();
          while (i < ws.size()) ws[j++] = ws[i++];
        } else {
          enqueue(first, w.cref);
        }
      }
      ws.resize(j);
      if (conflict != kNoClause) break;
    }
    return conflict;
  }

  void cancel_until(std::size_t level) {
    if (decision_level() <= level) return;
    for (std::size_t c = trail_.size(); c > trail_lim_[level]; --c) {
      Var v = var_of(trail_[c - 1]);
      phase_[v] = static_cast<std::int8_t>(assign_[v]);
      assign_[v] = 0;
      reason_[v] = kNoClause;
      heap_insert(v);
    }
    trail_.resize(trail_lim_[level]);
    trail_lim_.resize(level);
    qhead_ = trail_.size();
  }

  // --- activity heap -------------------------------------------------------

  void bump_var(Var v) {
    if ((activity_[v] += var_inc_) > 1e100) {
      for (auto& a : activity_) a *= 1e-100;
      var_inc_ *= 1e-100;
    }
    if (heap_pos_[v] >= 0) sift_up(static_cast<std::size_t>(heap_pos_[v]));
  }

  void bump_clause(Clause& c) {
    if ((c.activity += cla_inc_) > 1e20) {
      for (CRef r : learnts_) clauses_[r].activity *= 1e-20;
      cla_inc_ *= 1e-20;
    }
  }

  void heap_insert(Var v) {
    if (heap_pos_[v] >= 0) return;
    heap_pos_[v] = static_cast<int>(heap_.size());
    heap_.push_back(v);
    sift_up(heap_.size() - 1);
  }

  bool heap_less(Var a, Var b) const { return activity_[a] > activity_[b] || (activity_[a] == activity_[b] && a < b); }

  void sift_up(std::size_t i) {
    Var v = heap_[i];
    while (i > 0) {
      std::size_t parent = (i - 1) / 2;
      if (!heap_less(v, heap_[parent])) break;
      heap_[i] = heap_[parent];
      heap_pos_[heap_[i]] = static_cast<int>(i);
      i = parent;
    }
    heap_[i] = v;
    heap_pos_[v] = static_cast<int>(i);
  }

  void sift_down(std::size_t i) {
    Var v = heap_[i];
    for (;;) {
      std::size_t child = 2 * i + 1;
      if (child >= heap_.size()) break;
      if (child + 1 < heap_.size() && heap_less(heap_[child + 1], heap_[child])) ++child;
      if (!heap_less(heap_[child], v)) break;
      heap_[i] = heap_[child];
      heap_pos_[heap_[i]] = static_cast<int>(i);
      i = child;
    }
    heap_[i] = v;
    heap_pos_[v] = static_cast<int>(i);
  }

  Var heap_pop() {
    Var top = heap_.front();
    heap_pos_[top] = -1;
    Var last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_[0] = last;
      heap_pos_[last] = 0;
      sift_down(0);
    }
    return top;
  }

  Lit pick_branch() {
    while (!heap_.empty()) {
      Var v = heap_pop();
      if (assign_[v] == 0) {
        ++stats_.decisions;
        return 2 * v + (phase_[v] == 1 ? 0U : 1U);
      }
    }
    return kNoLit;
  }

  // --- conflict analysis ---------------------------------------------------

  std::vector<Lit> analyze(CRef conflict, std::size_t& backtrack_level, std::uint32_t& lbd) {
    std::vector<Lit> learnt{kNoLit};
    std::vector<Var> to_clear;
    int path = 0;
    Lit p = kNoLit;
    std::size_t index = trail_.size();
    do {
      Clause& c = clauses_[conflict];
      if (c.learnt) bump_clause(c);
      for (std::size_t k = (p == kNoLit ? 0 : 1); k < c.lits.size(); ++k) {
        Lit q = c.lits[k];
        Var v = var_of(q);
        if (seen_[v] || level_[v] == 0) continue;
        bump_var(v);
        seen_[v] = 1;
        to_clear.push_back(v);
        if (level_[v] >= decision_level())
          ++path;
        else
          learnt.push_back(q);
      }
      while (!seen_[var_of(trail_[--index])]) {
      }
      p = trail_[index];
      conflict = reason_[var_of(p)];
      seen_[var_of(p)] = 0;
      --path;
    } while (path > 0);
    learnt[0] = p ^ 1U;

    // Local minimization: drop literals implied by other learnt literals.
    std::size_t j = 1;
    for (std::size_t i = 1; i < learnt.size(); ++i) {
      CRef r = reason_[var_of(learnt[i])];
      bool redundant = r != kNoClause;
      if (redundant) {
        const auto& rc = clauses_[r].lits;
        for (std::size_t k = 1; k < rc.size(); ++k) {
          Var v = var_of(rc[k]);
          if (!seen_[v] && level_[v] > 0) {
            redundant = false;
            break;
          }
        }
      }
      if (!redundant) learnt[j++] = learnt[i];
    }
    learnt.resize(j);
    for (Var v : to_clear) seen_[v] = 0;

    backtrack_level = 0;
    if (learnt.size() > 1) {
      std::size_t best = 1;
      for (std::size_t i = 2; i < learnt.size(); ++i)
        if (level_[var_of(learnt[i])] > level_[var_of(learnt[best])]) best = i;
      std::swap(learnt[1], learnt[best]);
      backtrack_level = level_[var_of(learnt[1])];
    }
    std::vector<std::uint32_t> levels;
    for (Lit l : learnt) levels.push_back(level_[var_of(l)]);
    std::sort(levels.begin(), levels.end());
    lbd = static_cast<std::uint32_t>(std::unique(levels.begin(), levels.end()) - levels.begin());
    return learnt;
  }

  bool locked(CRef r) const {
    const auto& c = clauses_[r];
    Lit l = c.lits[0];
    return value(l) == 1 && reason_[var_of(l)] == r;
  }

  void reduce_db() {
    std::sort(learnts_.begin(), learnts_.end(), [&](CRef a, CRef b) {
      const auto& ca = clauses_[a];
      const auto& cb = clauses_[b];
      if (ca.lbd != cb.lbd) return ca.lbd > cb.lbd;
      return ca.activity < cb.activity;
    });
    std::size_t target = learnts_.size() / 2, removed = 0;
    std::vector<CRef> kept;
    for (CRef r : learnts_) {
      Clause& c = clauses_[r];
      if (removed < target && c.lbd > 2 && !locked(r)) {
        c.deleted = true;
        c.lits.clear();
        c.lits.shrink_to_fit();
        free_.push_back(r);
        ++removed;
      } else {
        kept.push_back(r);
      }
    }
    learnts_ = std::move(kept);
    for (auto& ws : watches_)
      ws.erase(std::remove_if(ws.begin(), ws.end(), [&](const Watcher& w) { return clauses_[w.cref].deleted; }),
               ws.end());
    max_learnts_ = static_cast<std::size_t>(static_cast<double>(max_learnts_) * 1.1);
  }

  Result search(std::uint64_t restart_limit, std::uint64_t start_conflicts) {
    std::uint64_t local_conflicts = 0;
    for (;;) {
      CRef conflict = propagate();
      if (conflict != kNoClause) {
        ++stats_.conflicts;
        ++local_conflicts;
        if (decision_level() == 0) {
          ok_ = false;
          return Result::Unsat;
        }
        std::size_t bt = 0;
        std::uint32_t lbd = 0;
        std::vector<Lit> learnt = analyze(conflict, bt, lbd);
        cancel_until(bt);
        if (learnt.size() == 1) {
          enqueue(learnt[0], kNoClause);
        } else {
          CRef r = store(std::move(learnt), true, lbd);
          attach(r);
          bump_clause(clauses_[r]);
          enqueue(clauses_[r].lits[0], r);
        }
        var_inc_ *= 1.0 / 0.95;
        cla_inc_ *= 1.0 / 0.999;
        if (budget_exhausted(start_conflicts)) return Result::Unknown;
        continue;
      }
      if (local_conflicts >= restart_limit) {
        cancel_until(0);
        return Result::Unknown;
      }
      if (learnts_.size() >= max_learnts_ + trail_.size()) reduce_db();

      Lit next = kNoLit;
      while (decision_level() < assumptions_.size()) {
        Lit a = assumptions_[decision_level()];
        int v = value(a);
        if (v == 1) {
          trail_lim_.push_back(trail_.size());
        } else if (v == -1) {
          return Result::Unsat;
        } else {
          next = a;
          break;
        }
      }
      if (next == kNoLit) {
        next = pick_branch();
        if (next == kNoLit) {
          model_.assign(assign_.size(), 0);
          for (std::size_t v = 0; v < assign_.size(); ++v) model_[v] = assign_[v] == 1;
          return Result::Sat;
        }
      }
      trail_lim_.push_back(trail_.size());
      enqueue(next, kNoClause);
    }
  }

  std::vector<std::int8_t> assign_;
  std::vector<std::uint32_t> level_;
  std::vector<CRef> reason_;
  std::vector<std::int8_t> phase_;
  std::vector<char> seen_;
  std::vector<double> activity_;
  std::vector<int> heap_pos_;
  std::vector<Var> heap_;
  std::vector<std::vector<Watcher>> watches_;
  std::vector<Clause> clauses_;
  std::vector<CRef> learnts_;
  std::vector<CRef> free_;
  std::vector<Lit> trail_;
  std::vector<std::size_t> trail_lim_;
  std::vector<Lit> assumptions_;
  std::vector<char> model_;
  std::size_t qhead_ = 0;
  double var_inc_ = 1;
  double cla_inc_ = 1;
  std::size_t max_learnts_ = 4000;
  std::int64_t conflict_budget_ = -1;
  std::uint64_t seed_ = 0;
  std::mt19937_64 rng_;
  bool ok_ = true;
  SolverStats stats_;
};

}  // namespace leakaudit::sat
