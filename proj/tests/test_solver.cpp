#include <gtest/gtest.h>

#include <random>

#include "leakaudit/sat/solver.hpp"

using leakaudit::sat::Result;
using leakaudit::sat::Solver;

namespace {

using Cnf = std::vector<std::vector<int>>;

bool brute_force_sat(const Cnf& cnf, int n, const std::vector<int>& assumptions) {
  for (std::uint32_t m = 0; m < (1U << n); ++m) {
    auto val = [&](int lit) {
      bool v = (m >> (std::abs(lit) - 1)) & 1U;
      return lit > 0 ? v : !v;
    };
    bool ok = std::all_of(assumptions.begin(), assumptions.end(), val);
    for (const auto& c : cnf)
      ok = ok && std::any_of(c.begin(), c.end(), val);
    if (ok) return true;
  }
  return false;
}

Cnf random_cnf(std::mt19937& rng, int n, int clauses, int width) {
  Cnf cnf;
  std::uniform_int_distribution<int> var(1, n), sign(0, 1);
  for (int i = 0; i < clauses; ++i) {
    std::vector<int> c;
    for (int k = 0; k < width; ++k) c.push_back(sign(rng) ? var(rng) : -var(rng));
    cnf.push_back(c);
  }
  return cnf;
}

/// Pigeonhole: `pigeons` pigeons into `holes` holes; unsat when pigeons > holes.
Solver pigeonhole(int pigeons, int holes) {
  Solver s;
  auto v = [&](int p, int h) { return p * holes + h + 1; };
  s.reserve_vars(pigeons * holes);
  for (int p = 0; p < pigeons; ++p) {
    std::vector<int> c;
    for (int h = 0; h < holes; ++h) c.push_back(v(p, h));
    s.add_clause(c);
  }
  for (int h = 0; h < holes; ++h)
    for (int p = 0; p < pigeons; ++p)
      for (int q = p + 1; q < pigeons; ++q) s.add_clause({-v(p, h), -v(q, h)});
  return s;
}

}  // namespace

TEST(Solver, AgreesWithEnumerationUnderAssumptions) {
  std::mt19937 rng(7);
  for (int round = 0; round < 300; ++round) {
    const int n = 3 + round % 10;
    Cnf cnf = random_cnf(rng, n, static_cast<int>(n * 4.3), 3);
    Solver s;
    s.reserve_vars(n);
    for (const auto& c : cnf) s.add_clause(c);
    for (int q = 0; q < 4; ++q) {
      std::vector<int> assume;
      for (int k = 0; k < q; ++k) assume.push_back((rng() & 1U) ? 1 + static_cast<int>(rng() % n) : -(1 + static_cast<int>(rng() % n)));
      Result r = s.solve(assume);
      bool expected = brute_force_sat(cnf, n, assume);
      ASSERT_EQ(r == Result::Sat, expected) << "round " << round;
      if (r == Result::Sat) {
        for (int a : assume) EXPECT_EQ(s.model_value(std::abs(a)), a > 0);
        for (const auto& c : cnf)
          EXPECT_TRUE(std::any_of(c.begin(), c.end(), [&](int l) { return s.model_value(std::abs(l)) == (l > 0); }));
      }
    }
  }
}

TEST(Solver, IncrementalClauseAddition) {
  Solver s;
  s.reserve_vars(3);
  s.add_clause({1, 2});
  EXPECT_EQ(s.solve({-1}), Result::Sat);
  EXPECT_TRUE(s.model_value(2));
  s.add_clause({-2, 3});
  EXPECT_EQ(s.solve({-1, -3}), Result::Unsat);
  EXPECT_EQ(s.solve({-1}), Result::Sat);
  EXPECT_TRUE(s.model_value(3));
  // Failing under assumptions does not poison later calls.
  EXPECT_EQ(s.solve(), Result::Sat);
  s.add_clause({-3});
  s.add_clause({-1});
  EXPECT_EQ(s.solve(), Result::Unsat);
  EXPECT_FALSE(s.okay());
}

TEST(Solver, EmptyAndTautologicalClauses) {
  Solver s;
  s.reserve_vars(2);
  EXPECT_TRUE(s.add_clause({1, -1}));
  EXPECT_EQ(s.solve(), Result::Sat);
  EXPECT_FALSE(s.add_clause(std::vector<int>{}));
  EXPECT_EQ(s.solve(), Result::Unsat);
}

TEST(Solver, RejectsUnknownVariables) {
  Solver s;
  s.reserve_vars(2);
  EXPECT_THROW(s.add_clause({3}), std::out_of_range);
  EXPECT_THROW(s.solve({-5}), std::out_of_range);
}

TEST(Solver, PigeonholeUnsat) {
  Solver s = pigeonhole(7, 6);
  EXPECT_EQ(s.solve(), Result::Unsat);
  Solver t = pigeonhole(6, 6);
  EXPECT_EQ(t.solve(), Result::Sat);
}

TEST(Solver, ConflictBudgetReportsUnknown) {
  Solver s = pigeonhole(9, 8);
  s.set_conflict_budget(20);
  EXPECT_EQ(s.solve(), Result::Unknown);
  s.set_conflict_budget(-1);
  EXPECT_EQ(s.solve(), Result::Unsat);
}

TEST(Solver, SeedDoesNotChangeSatisfiability) {
  std::mt19937 rng(11);
  for (int round = 0; round < 50; ++round) {
    Cnf cnf = random_cnf(rng, 12, 50, 3);
    Solver a, b;
    b.set_seed(12345);
    a.reserve_vars(12);
    b.reserve_vars(12);
    for (const auto& c : cnf) {
      a.add_clause(c);
      b.add_clause(c);
    }
    EXPECT_EQ(a.solve(), b.solve());
  }
}
