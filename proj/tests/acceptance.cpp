// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "leakaudit/leakaudit.hpp"
#include "leakaudit/report.hpp"

using namespace leakaudit;

namespace {

std::string read_data(const std::string& name) {
  std::ifstream in(std::string(LEAKAUDIT_DATA_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Individual ind(std::initializer_list<bool> v) { return Individual(std::vector<bool>(v)); }

struct Outcome {
  bool ok = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool cond, const std::string& what) {
    ++checks_;
    if (!cond && first_failure_.empty()) first_failure_ = what;
    ok_ = ok_ && cond;
  }
  bool ok() const { return ok_; }
  std::uint64_t checks() const { return checks_; }
  const std::string& first_failure() const { return first_failure_; }

 private:
  bool ok_ = true;
  std::uint64_t checks_ = 0;
  std::string first_failure_;
};

int failures = 0;

/// `prior_seconds` is work done ahead of `body` on this criterion's behalf.
void report(const std::string& name, const std::function<Outcome()>& body, double limit_seconds,
            double prior_seconds = 0) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      prior_seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_seconds > 0 && secs > limit_seconds) {
    o.ok = false;
    o.detail += " (over time limit " + std::to_string(limit_seconds) + " s)";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2fs", secs);
  std::cout << (o.ok ? "PASS" : "FAIL") << "  " << name << "  [" << buf << "]  " << o.detail << std::endl;
  if (!o.ok) ++failures;
}

Outcome finish(const Check& c, const std::string& summary) {
  return {c.ok(), c.ok() ? summary : "first failure: " + c.first_failure()};
}

std::vector<AuditProblem> acceptance_corpus(std::size_t count) {
  const ModelKind kinds[] = {ModelKind::Formula, ModelKind::Tree, ModelKind::Threshold};
  std::vector<AuditProblem> out;
  for (std::uint64_t seed = 1; seed <= count; ++seed) {
    gen::RandomModelParams params;
    if (seed % 4 == 3) params.hidden_layers = {3};
    if (seed % 10 == 9 && kinds[seed % 3] != ModelKind::Formula) params.num_labels = 3;
    out.push_back(gen::random_model(seed, 4 + seed % 7, kinds[seed % 3], params));
  }
  return out;
}

std::string tag(const AuditProblem& p, std::size_t i) {
  return "model " + std::to_string(i) + " (" + std::string(to_string(p.model.kind())) + ", n=" +
         std::to_string(p.num_features()) + ")";
}

bool in_class(const BlockingRecord& b, const Individual& x, Label d) {
  return b.literals.satisfied_by(x) && (!b.label || *b.label == d);
}

/// Validity plus the per-literal deletion probe, then membership in the
/// enumerated minimal set of `subject`.
void check_explanation(Check& c, const Explanation& e, const Individual& subject, SatOracle& oracle,
                       const oracle::TruthTable& tt, const std::string& where) {
  c.expect(e.literals.subset_of(LiteralSet::of(subject)), where + ": explanation not drawn from its subject");
  c.expect(oracle.check_validity(e.literals, e.decision), where + ": explanation not valid");
  for (const auto& [f, v] : e.literals)
    c.expect(!oracle.check_validity(e.literals.without(LiteralSet{{f, v}}), e.decision),
             where + ": explanation not minimal");
  auto all = oracle::bf_enumerate_min_explanations(tt, subject);
  c.expect(std::find(all.begin(), all.end(), e.literals) != all.end(), where + ": not in the enumerated minimal set");
}

}  // namespace

int main() {
  const std::vector<AuditProblem> corpus = acceptance_corpus(210);

  report("running-example goldens", [] {
    Check c;
    AuditSession s(parse_model(read_data("tutor.json")));
    constexpr FeatureIndex E = 0, D = 1, S = 2;
    const Individual toto = ind({1, 1, 1, 1}), tata = ind({1, 0, 1, 1}), tintin = ind({0, 1, 1, 1}),
                     tete = ind({0, 1, 1, 0}), tonton = ind({1, 1, 1, 0});
    c.expect(audit_individual(tata, s).leaks, "Tata should leak");
    c.expect(!audit_individual(toto, s).leaks, "Toto should not leak");
    c.expect(!audit_individual(tintin, s).leaks, "Tintin should not leak");
    c.expect(!audit_individual(tete, s).leaks, "Tete should not leak");
    auto t = audit_individual(tonton, s);
    c.expect(!t.leaks && t.lppae.has_value(), "Tonton should have an LPPAE");
    if (t.lppae) {
      c.expect(restrict(t.lppae->literals, Side::Open, s.partition()).subset_of(LiteralSet{{E, true}, {D, true}}),
               "Tonton LPPAE open part not within {E, D}");
      c.expect(!t.lppae->literals.mentions(S), "Tonton LPPAE mentions S");
      c.expect(is_lppae_for(*t.lppae, tonton, s), "Tonton LPPAE fails the LPPAE checks");
    }
    auto m = audit_model(s);
    c.expect(m.leaks, "tutor model should leak");
    c.expect(m.counterexample && restrict(*m.counterexample, Side::Open, s.partition()) ==
                                     LiteralSet{{E, true}, {D, false}},
             "counterexample open profile should be E ∧ ¬D");
    return finish(c, "Tata leaks; Toto, Tintin, Tete, Tonton clean; model leaks at E ∧ ¬D");
  }, 1.0);

  // Criteria 2, 3 and 7 share one pass over the corpus.
  Check agreement, contracts, progress;
  std::uint64_t individuals = 0, explanations = 0, models = 0, leaking_models = 0;
  const auto corpus_start = std::chrono::steady_clock::now();
  try {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const AuditProblem& p = corpus[i];
      const auto& part = p.partition;
      const std::string where = tag(p, i);
      oracle::TruthTable tt(p, {});
      const bool bf_model = oracle::bf_model_leaks(p).leaks;
      leaking_models += bf_model;
      ++models;
      std::uint64_t sensitive = 0;
      for (std::uint64_t m = 0; m < tt.size(); ++m) sensitive += Individual::from_mask(m, p.num_features())[part.sensitive()] == part.protected_value();

      for (ExclusionMode mode : {ExclusionMode::Theorem, ExclusionMode::Strict}) {
        AuditOptions opts;
        opts.mode = mode;
        const std::string w = where + " " + std::string(to_string(mode));
        AuditSession session(p);
        auto mv = audit_model(session, opts);
        agreement.expect(mv.leaks == bf_model, w + ": model verdict differs from enumeration");
        if (mv.leaks)
          agreement.expect(oracle::bf_individual_leaks(tt, part, *mv.counterexample), w + ": counterexample does not leak");

        progress.expect(mv.iterations <= std::min<std::uint64_t>(sensitive, default_iteration_cap(p) - 1),
                        w + ": too many iterations");
        for (std::size_t k = 0; k < mv.cover.size(); ++k) {
          const auto& rec = mv.cover[k];
          const Label d = tt[rec.candidate.mask()];
          for (std::size_t j = 0; j < k; ++j)
            progress.expect(!in_class(mv.cover[j].block, rec.candidate, d), w + ": candidate inside an earlier class");
          progress.expect(in_class(rec.block, rec.candidate, d), w + ": candidate outside its own class");
          check_explanation(contracts, rec.lppae, rec.shield, session.oracle(), tt, w + " cover");
          ++explanations;
        }
        if (mv.counterexample) {
          const Label d = tt[mv.counterexample->mask()];
          for (const auto& rec : mv.cover)
            progress.expect(!in_class(rec.block, *mv.counterexample, d), w + ": counterexample inside a class");
        }

        for (std::uint64_t m = 0; m < tt.size(); ++m) {
          const Individual x = Individual::from_mask(m, p.num_features());
          if (x[part.sensitive()] != part.protected_value()) continue;
          ++individuals;
          auto v = audit_individual(x, session, opts);
          agreement.expect(v.leaks == oracle::bf_individual_leaks(tt, part, x), w + ": individual verdict differs");
          if (v.lppae) {
            agreement.expect(is_lppae_for(*v.lppae, x, session, v.notes.empty() ? mode : ExclusionMode::Theorem),
                             w + ": LPPAE fails its checks");
            check_explanation(contracts, *v.lppae, *v.shield, session.oracle(), tt, w + " lppae");
            ++explanations;
          }
          if (mode == ExclusionMode::Theorem && m % 3 == 0) {
            auto e = minimal_explanation(x, tt[m], {}, session.oracle(), part);
            check_explanation(contracts, *e, x, session.oracle(), tt, w + " explain");
            auto fo = is_fully_open(x, tt[m], session.oracle(), part);
            if (fo.witness) check_explanation(contracts, *fo.witness, x, session.oracle(), tt, w + " open");
            explanations += 1 + (fo.witness ? 1 : 0);
          }
        }
      }
    }
  } catch (const std::exception& e) {
    agreement.expect(false, std::string("exception: ") + e.what());
  }
  const double corpus_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - corpus_start).count();

  report("oracle agreement", [&] {
    return finish(agreement, std::to_string(models) + " models (" + std::to_string(leaking_models) +
                                 " leaking), " + std::to_string(individuals) +
                                 " sensitive individual audits, both modes, 100% agreement");
  }, 300.0, corpus_secs);

  report("explanation contracts", [&] {
    return finish(contracts, std::to_string(explanations) + " explanations valid, minimal, and enumerated (checked in the corpus pass)");
  }, 0);

  report("fully-open and sensitive-literal properties", [&] {
    Check c;
    std::uint64_t open = 0, leakers = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const AuditProblem& p = corpus[i];
      const auto& part = p.partition;
      oracle::TruthTable tt(p, {});
      AuditSession session(p);
      for (std::uint64_t m = 0; m < tt.size(); ++m) {
        const Individual x = Individual::from_mask(m, p.num_features());
        if (x[part.sensitive()] != part.protected_value()) continue;
        if (is_fully_open(x, tt[m], session.oracle(), part).fully_open) {
          ++open;
          c.expect(!audit_individual(x, session).leaks, tag(p, i) + ": fully open decision leaks");
        }
        if (oracle::bf_individual_leaks(tt, part, x)) {
          ++leakers;
          for (const auto& e : oracle::bf_enumerate_min_explanations(tt, x))
            c.expect(e.mentions(part.sensitive()), tag(p, i) + ": leaking individual has an explanation without s");
        }
      }
    }
    return finish(c, std::to_string(open) + " fully open decisions clean; " + std::to_string(leakers) +
                         " leaking individuals, all minimal explanations mention s");
  }, 0);

  report("LPPAE transfer across equal open profiles and decisions", [&] {
    Check c;
    gen::Rng rng(2024);
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const AuditProblem& p = corpus[i];
      const auto& part = p.partition;
      AuditSession session(p);
      std::vector<Individual> sensitive;
      for (std::uint64_t m = 0; m < (std::uint64_t{1} << p.num_features()); ++m) {
        Individual x = Individual::from_mask(m, p.num_features());
        if (x[part.sensitive()] == part.protected_value()) sensitive.push_back(std::move(x));
      }
      for (int k = 0; k < 40; ++k) {
        const Individual& x = sensitive[rng.index(sensitive.size())];
        Individual y = x;
        // Same open profile, random private values other than s.
        for (FeatureIndex f = 0; f < y.size(); ++f)
          if (!part.is_open(f) && f != part.sensitive() && rng.coin()) y = Individual::from_mask(y.mask() ^ (std::uint64_t{1} << f), y.size());
        if (session.decide(x) != session.decide(y)) continue;
        auto v = audit_individual(x, session);
        if (v.leaks) continue;
        ++pairs;
        c.expect(is_lppae_for(*v.lppae, y, session), tag(p, i) + ": LPPAE does not transfer");
      }
    }
    return finish(c, std::to_string(pairs) + " pairs, every LPPAE transfers");
  }, 0);

  report("exists-forall reduction", [] {
    Check c;
    std::uint64_t truths = 0;
    const std::size_t count = 150;
    for (std::uint64_t seed = 1; seed <= count; ++seed) {
      auto q = gen::random_qbf(seed, 1 + seed % 5, 1 + (seed / 5) % 5, 3 + seed % 2);
      auto r = gen::from_qbf(q);
      const bool truth = gen::qbf_truth(q);
      truths += truth;
      AuditSession session(r.problem);
      c.expect(audit_model(session).leaks == truth, "seed " + std::to_string(seed) + ": verdict differs from QBF truth");
    }
    return finish(c, std::to_string(count) + " instances (" + std::to_string(truths) + " true), all agree");
  }, 120.0);

  report("progress and termination", [&] {
    return finish(progress, "iterations within bounds; each candidate outside earlier classes and inside its own "
                               "(checked in the corpus pass)");
  }, 0);

  report("exported threshold model workflow", [] {
    AuditProblem p = parse_model(read_data("credit_threshold.json"));
    AuditSession session(p);
    auto v = audit_model(session);
    Report r = model_report(v, p, {}, true);
    const bool has_runtime = r.stats.contains("elapsed_seconds");
    std::ostringstream detail;
    detail << p.num_features() << " features, " << std::string(to_string(p.model.kind())) << ", verdict "
           << (v.leaks ? "LEAKS (exit 3)" : "NO LEAK (exit 0)") << ", runtime " << v.stats.elapsed_seconds << " s, "
           << v.iterations << " iterations";
    return Outcome{has_runtime && p.num_features() >= 18, detail.str()};
  }, 60.0);

  std::cout << (failures ? "FAILED: " + std::to_string(failures) + " criteria" : std::string("ALL CRITERIA PASS"))
            << std::endl;
  return failures ? 1 : 0;
}
