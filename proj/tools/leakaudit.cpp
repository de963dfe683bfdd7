// leakaudit command-line front end.
//
// Exit codes: 0 no leakage (or success), 3 leakage detected, 1 usage or input
// error, 2 oracle failure or internal error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "leakaudit/leakaudit.hpp"
#include "leakaudit/report.hpp"

namespace {

using namespace leakaudit;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitOracle = 2;
constexpr int kExitLeak = 3;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string model_path;
  std::string mode = "theorem";
  bool deterministic = false;
  std::string format = "text";
  std::size_t oracle_budget = 16;
  std::int64_t conflict_budget = -1;
  std::string output;
  bool reveal_private = false;
  std::string dump_cnf;
  std::string order = "private-first";

  json echo() const {
    return {{"model_path", model_path},           {"mode", mode},
            {"deterministic", deterministic},     {"format", format},
            {"oracle_budget", oracle_budget},     {"conflict_budget", conflict_budget},
            {"reveal_private", reveal_private},   {"deletion_order", order}};
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AuditProblem load_problem(const std::string& path) {
  try {
    return parse_model(read_file(path));
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::uint64_t solver_seed(const RunConfig& cfg) {
  if (const char* env = std::getenv("LEAKAUDIT_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw InputError("LEAKAUDIT_SEED must be a non-negative integer");
    }
  }
  if (cfg.deterministic) return 0;
  return std::random_device{}() | 1U;
}

AuditOptions audit_options(const RunConfig& cfg) {
  AuditOptions opts;
  auto mode = parse_exclusion_mode(cfg.mode);
  if (!mode) throw InputError("--mode must be 'theorem' or 'strict'");
  opts.mode = *mode;
  if (cfg.order == "ascending")
    opts.explain.order = DeletionOrder::Ascending;
  else if (cfg.order == "private-first")
    opts.explain.order = DeletionOrder::PrivateFirst;
  else
    throw InputError("--order must be 'ascending' or 'private-first'");
  return opts;
}

OracleOptions oracle_options(const RunConfig& cfg) {
  if (cfg.conflict_budget == 0) throw InputError("--conflict-budget must be positive (or negative for unlimited)");
  return {cfg.conflict_budget, solver_seed(cfg)};
}

/// "E=1,D=0,S=1,H=1" -> total individual.
Individual parse_assignment(const std::string& text, const FeatureSpace& features) {
  std::vector<int> values(features.size(), -1);
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw InputError("malformed assignment item '" + item + "' (expected NAME=0|1)");
    std::string name = item.substr(0, eq), val = item.substr(eq + 1);
    auto f = features.find(name);
    if (!f) throw InputError("unknown feature '" + name + "' in assignment");
    if (values[*f] != -1) throw InputError("feature '" + name + "' assigned twice");
    if (val == "1" || val == "true")
      values[*f] = 1;
    else if (val == "0" || val == "false")
      values[*f] = 0;
    else
      throw InputError("value for '" + name + "' must be 0 or 1");
  }
  std::string missing;
  for (FeatureIndex f = 0; f < values.size(); ++f)
    if (values[f] == -1) missing += (missing.empty() ? "" : ", ") + features.name(f);
  if (!missing.empty()) throw InputError("partial assignment; missing: " + missing);
  std::vector<bool> v(values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values[i] == 1;
  return Individual(std::move(v));
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output.empty() || cfg.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output, std::ios::binary);
  if (!out) throw InputError("cannot write '" + cfg.output + "'");
  out << text;
}

void emit_report(const RunConfig& cfg, Report r) {
  r.config_echo = cfg.echo();
  emit(cfg, cfg.format == "text" ? render_text(r) : render_structured(r));
}

void dump_cnf(const CnfEncoding& enc, const FeatureSpace& features, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_dimacs(out, enc);
  std::ofstream map(path + ".map.json", std::ios::binary);
  if (!map) throw InputError("cannot write '" + path + ".map.json'");
  map << variable_map(enc, features).dump(2) << '\n';
}

int cmd_audit_individual(const RunConfig& cfg, const std::string& assign) {
  AuditProblem problem = load_problem(cfg.model_path);
  Individual x = parse_assignment(assign, problem.features);
  AuditOptions opts = audit_options(cfg);
  AuditSession session(problem, oracle_options(cfg));
  if (!cfg.dump_cnf.empty()) dump_cnf(session.encoding(), problem.features, cfg.dump_cnf);
  IndividualVerdict v = audit_individual(x, session, opts);
  emit_report(cfg, individual_report(v, problem, opts, cfg.reveal_private, !cfg.deterministic));
  return v.leaks ? kExitLeak : kExitOk;
}

int cmd_audit_model(const RunConfig& cfg, std::uint64_t iteration_cap) {
  AuditProblem problem = load_problem(cfg.model_path);
  AuditOptions opts = audit_options(cfg);
  if (iteration_cap > 0) opts.iteration_cap = iteration_cap;
  AuditSession session(problem, oracle_options(cfg));
  if (!cfg.dump_cnf.empty()) dump_cnf(session.encoding(), problem.features, cfg.dump_cnf);
  ModelVerdict v = audit_model(session, opts);
  emit_report(cfg, model_report(v, problem, opts, !cfg.deterministic));
  return v.leaks ? kExitLeak : kExitOk;
}

int cmd_explain(const RunConfig& cfg, const std::string& assign) {
  AuditProblem problem = load_problem(cfg.model_path);
  Individual x = parse_assignment(assign, problem.features);
  AuditOptions opts = audit_options(cfg);
  AuditSession session(problem, oracle_options(cfg));
  detail::StatsScope scope(session.oracle());
  const Label d = session.decide(x);
  auto e = minimal_explanation(x, d, {}, session.oracle(), problem.partition, opts.explain);
  auto open = is_fully_open(x, d, session.oracle(), problem.partition);
  Report r;
  r.command = "explain";
  r.verdict = {{"decision", d}, {"fully_open", open.fully_open}};
  r.witnesses["subject"] = individual_json(x, problem, cfg.reveal_private);
  r.witnesses["explanation"] = explanation_json(*e, problem);
  r.witnesses["open_explanation"] = open.witness ? explanation_json(*open.witness, problem) : json(nullptr);
  r.stats = stats_json(scope.finish(), !cfg.deterministic);
  emit_report(cfg, r);
  return kExitOk;
}

struct Agreement {
  std::uint64_t individuals = 0;
  std::uint64_t disagreements = 0;
  bool model_agrees = true;
};

Agreement check_agreement(const AuditProblem& problem, const RunConfig& cfg, const AuditOptions& opts) {
  oracle::TruthTable tt(problem, {cfg.oracle_budget});
  Agreement a;
  AuditSession session(problem, oracle_options(cfg));
  const auto& part = problem.partition;
  for (std::uint64_t m = 0; m < tt.size(); ++m) {
    Individual x = Individual::from_mask(m, problem.num_features());
    if (x[part.sensitive()] != part.protected_value()) continue;
    ++a.individuals;
    bool sat_leaks = audit_individual(x, session, opts).leaks;
    if (sat_leaks != oracle::bf_individual_leaks(tt, part, x)) ++a.disagreements;
  }
  AuditSession model_session(problem, oracle_options(cfg));
  a.model_agrees = audit_model(model_session, opts).leaks == oracle::bf_model_leaks(problem, {cfg.oracle_budget}).leaks;
  return a;
}

int cmd_oracle_check(const RunConfig& cfg, std::size_t corpus, std::size_t corpus_features) {
  AuditOptions opts = audit_options(cfg);
  Report r;
  r.command = "oracle-check";
  std::vector<AuditProblem> problems;
  std::vector<std::string> labels;
  if (!cfg.model_path.empty()) {
    problems.push_back(load_problem(cfg.model_path));
    labels.push_back(cfg.model_path);
  }
  const ModelKind kinds[] = {ModelKind::Formula, ModelKind::Tree, ModelKind::Threshold};
  for (std::size_t seed = 1; seed <= corpus; ++seed) {
    ModelKind kind = kinds[seed % 3];
    problems.push_back(gen::random_model(seed, corpus_features, kind));
    labels.push_back("seed " + std::to_string(seed) + " " + std::string(to_string(kind)));
  }
  if (problems.empty()) throw InputError("oracle-check needs a model path or --random-corpus N");
  for (const auto& p : problems)
    if (p.num_features() > cfg.oracle_budget)
      throw InputError("model has " + std::to_string(p.num_features()) + " features; oracle budget is " +
                       std::to_string(cfg.oracle_budget) + " (refusing to run)");

  std::uint64_t individuals = 0, disagreements = 0, model_disagreements = 0;
  json failures = json::array();
  for (std::size_t i = 0; i < problems.size(); ++i) {
    Agreement a = check_agreement(problems[i], cfg, opts);
    individuals += a.individuals;
    disagreements += a.disagreements;
    if (!a.model_agrees) ++model_disagreements;
    if (a.disagreements || !a.model_agrees) failures.push_back(labels[i]);
  }
  const bool agree = disagreements == 0 && model_disagreements == 0;
  r.verdict = {{"agree", agree},
               {"models", problems.size()},
               {"sensitive_individuals", individuals},
               {"individual_disagreements", disagreements},
               {"model_disagreements", model_disagreements}};
  r.witnesses["failures"] = std::move(failures);
  emit_report(cfg, r);
  return agree ? kExitOk : kExitOracle;
}

int cmd_gen(const RunConfig& cfg, std::uint64_t seed, std::size_t features, const std::string& kind_name,
            const std::vector<std::size_t>& hidden, std::size_t labels, const std::string& qbf_path) {
  json doc;
  if (!qbf_path.empty()) {
    gen::QbfInstance q;
    try {
      q = gen::parse_qbf(read_file(qbf_path));
    } catch (const gen::QbfSyntaxError& e) {
      throw InputError(qbf_path + ": " + e.what());
    }
    gen::QbfReduction red = gen::from_qbf(q, cfg.oracle_budget);
    doc = serialize_model(red.problem);
    doc["meta"] = {{"source", "exists-forall reduction"},
                   {"expected_leaks", red.expected ? json(*red.expected) : json("unknown")}};
  } else {
    auto kind = parse_model_kind(kind_name);
    if (!kind) throw InputError("--kind must be formula, tree or threshold");
    gen::RandomModelParams params;
    params.hidden_layers = hidden;
    params.num_labels = labels;
    try {
      doc = serialize_model(gen::random_model(seed, features, *kind, params));
    } catch (const InvariantError& e) {
      throw InputError(e.what());
    }
  }
  emit(cfg, doc.dump(2) + "\n");
  return kExitOk;
}

int cmd_dump_cnf(const RunConfig& cfg, const std::string& out) {
  AuditProblem problem = load_problem(cfg.model_path);
  dump_cnf(encode(problem), problem.features, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leakaudit: formal privacy-leakage auditing of Boolean decision models"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  app.add_option("--mode", cfg.mode, "LPPAE exclusion mode: theorem or strict")
      ->check(CLI::IsMember({"theorem", "strict"}));
  app.add_flag("--deterministic", cfg.deterministic, "fixed solver seed; reports omit wall-clock time");
  app.add_option("--format", cfg.format, "text or structured (JSON)")
      ->check(CLI::IsMember({"text", "structured", "json"}));
  app.add_option("--oracle-budget", cfg.oracle_budget, "max features for brute-force enumeration")
      ->check(CLI::PositiveNumber);
  app.add_option("--conflict-budget", cfg.conflict_budget, "per-query solver conflict budget (negative: unlimited)");
  app.add_option("-o,--output", cfg.output, "write the report here instead of stdout");
  app.add_flag("--reveal-private", cfg.reveal_private, "print private literals of audited individuals");
  app.add_option("--order", cfg.order, "explanation deletion order: ascending or private-first")
      ->check(CLI::IsMember({"ascending", "private-first"}));

  std::string assign;
  std::uint64_t iteration_cap = 0;

  auto* ind = app.add_subcommand("audit-individual", "audit one individual");
  ind->add_option("model", cfg.model_path, "interchange document")->required();
  ind->add_option("--assign", assign, "full assignment, e.g. E=1,D=0,S=1,H=1")->required();
  ind->add_option("--dump-cnf", cfg.dump_cnf, "also write the DIMACS encoding");

  auto* mod = app.add_subcommand("audit-model", "audit the whole decision model");
  mod->add_option("model", cfg.model_path, "interchange document")->required();
  mod->add_option("--iteration-cap", iteration_cap, "override the iteration cap");
  mod->add_option("--dump-cnf", cfg.dump_cnf, "also write the DIMACS encoding");

  auto* exp = app.add_subcommand("explain", "minimal explanation of one decision");
  exp->add_option("model", cfg.model_path, "interchange document")->required();
  exp->add_option("--assign", assign, "full assignment")->required();

  std::size_t corpus = 0, corpus_features = 10;
  auto* orc = app.add_subcommand("oracle-check", "compare SAT verdicts against brute-force enumeration");
  orc->add_option("model", cfg.model_path, "interchange document");
  orc->add_option("--random-corpus", corpus, "also check N seed-generated models");
  orc->add_option("--corpus-features", corpus_features, "features per generated model")->check(CLI::Range(2, 16));

  std::uint64_t seed = 1;
  std::size_t features = 4, labels = 2;
  std::string kind = "formula", qbf;
  std::vector<std::size_t> hidden;
  auto* gen_cmd = app.add_subcommand("gen", "generate an interchange document");
  gen_cmd->add_option("--seed", seed, "generator seed");
  gen_cmd->add_option("--features", features, "number of features");
  gen_cmd->add_option("--kind", kind, "formula, tree or threshold");
  gen_cmd->add_option("--hidden", hidden, "hidden threshold layer widths");
  gen_cmd->add_option("--labels", labels, "number of labels (tree, threshold)");
  gen_cmd->add_option("--from-qbf", qbf, "reduce an exists-forall instance instead");

  std::string cnf_out;
  auto* dump = app.add_subcommand("dump-cnf", "write the DIMACS encoding and its variable map");
  dump->add_option("model", cfg.model_path, "interchange document")->required();
  dump->add_option("--out", cnf_out, "DIMACS path; the map goes to <path>.map.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }
  if (cfg.format == "json") cfg.format = "structured";

  try {
    if (*ind) return cmd_audit_individual(cfg, assign);
    if (*mod) return cmd_audit_model(cfg, iteration_cap);
    if (*exp) return cmd_explain(cfg, assign);
    if (*orc) return cmd_oracle_check(cfg, corpus, corpus_features);
    if (*gen_cmd) return cmd_gen(cfg, seed, features, kind, hidden, labels, qbf);
    if (*dump) return cmd_dump_cnf(cfg, cnf_out);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const oracle::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InvariantError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const OracleFailure& e) {
    std::cerr << "oracle failure: " << e.what() << '\n';
    return kExitOracle;
  } catch (const IterationCapExceeded& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitOracle;
  }
  return kExitInput;
}
