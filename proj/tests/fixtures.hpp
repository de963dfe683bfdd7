#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "leakaudit/leakaudit.hpp"

namespace leakaudit::testing {

inline std::string data_path(const std::string& name) { return std::string(LEAKAUDIT_DATA_DIR) + "/" + name; }

inline std::string read_data(const std::string& name) {
  std::ifstream in(data_path(name));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Tutor supplement model: features E, D, S, H; open {E, D}; sensitive S;
/// decision (D ∧ (E ∨ H)) ∨ S.
inline AuditProblem tutor() { return parse_model(read_data("tutor.json")); }

// Feature order E, D, S, H.
inline Individual person(bool e, bool d, bool s, bool h) { return Individual({e, d, s, h}); }
inline const Individual kToto = person(true, true, true, true);
inline const Individual kTata = person(true, false, true, true);
inline const Individual kTintin = person(false, true, true, true);
inline const Individual kTutu = person(false, true, false, true);
inline const Individual kTete = person(false, true, true, false);
inline const Individual kTonton = person(true, true, true, false);
inline const Individual kTiti = person(true, true, false, true);

constexpr FeatureIndex kE = 0, kD = 1, kS = 2, kH = 3;

/// Single-formula problem over `names` with everything but `open` private.
inline AuditProblem formula_problem(std::vector<std::string> names, std::vector<FeatureIndex> open, FeatureIndex s,
                                    bool nu, Formula f) {
  const std::size_t n = names.size();
  AuditProblem p{FeatureSpace(std::move(names)), ProfilePartition(n, std::move(open), s, nu), DecisionModel{}};
  p.model.body = std::move(f);
  validate(p);
  return p;
}

inline AuditProblem constant_problem(bool value, std::size_t n = 3) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
  Formula f;
  f.root = f.constant(value);
  return formula_problem(std::move(names), {0}, n - 1, true, std::move(f));
}

/// Problem with every individual of the generated corpus.
inline std::vector<AuditProblem> corpus(std::size_t count, std::size_t n, std::uint64_t first_seed = 1) {
  std::vector<AuditProblem> out;
  const ModelKind kinds[] = {ModelKind::Formula, ModelKind::Tree, ModelKind::Threshold};
  for (std::uint64_t seed = first_seed; seed < first_seed + count; ++seed) {
    gen::RandomModelParams params;
    if (seed % 6 == 5) params.hidden_layers = {3};
    out.push_back(gen::random_model(seed, n, kinds[seed % 3], params));
  }
  return out;
}

inline std::vector<Individual> all_individuals(std::size_t n) {
  std::vector<Individual> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) out.push_back(Individual::from_mask(m, n));
  return out;
}

}  // namespace leakaudit::testing
