#pragma once

// Machine-readable audit reports:
//   {"report_version": 1, "command": ..., "config_echo": {...},
//    "verdict": {...}, "witnesses": {...}, "stats": {...}}

#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "leakaudit/audit.hpp"
#include "leakaudit/explain.hpp"

namespace leakaudit {

inline constexpr int kReportVersion = 1;

struct Report {
  int report_version = kReportVersion;
  std::string command;
  nlohmann::json config_echo = nlohmann::json::object();
  nlohmann::json verdict = nlohmann::json::object();
  nlohmann::json witnesses = nlohmann::json::object();
  nlohmann::json stats = nlohmann::json::object();

  bool operator==(const Report&) const = default;
};

inline nlohmann::json to_json(const Report& r) {
  return {{"report_version", r.report_version}, {"command", r.command}, {"config_echo", r.config_echo},
          {"verdict", r.verdict},               {"witnesses", r.witnesses}, {"stats", r.stats}};
}

inline Report report_from_json(const nlohmann::json& j) {
  Report r;
  r.report_version = j.at("report_version").get<int>();
  if (r.report_version != kReportVersion)
    throw std::invalid_argument("unsupported report_version " + std::to_string(r.report_version));
  r.command = j.at("command").get<std::string>();
  r.config_echo = j.at("config_echo");
  r.verdict = j.at("verdict");
  r.witnesses = j.at("witnesses");
  r.stats = j.at("stats");
  return r;
}

inline std::string render_structured(const Report& r) { return to_json(r).dump(2) + "\n"; }
inline Report parse_structured(const std::string& text) { return report_from_json(nlohmann::json::parse(text)); }

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Feature name -> value. Private features are replaced by "redacted" unless
/// `reveal_private` is set.
inline nlohmann::json individual_json(const Individual& x, const AuditProblem& p, bool reveal_private) {
  nlohmann::json out = nlohmann::json::object();
  for (FeatureIndex f = 0; f < x.size(); ++f) {
    if (reveal_private || p.partition.is_open(f))
      out[p.features.name(f)] = x[f];
    else
      out[p.features.name(f)] = "redacted";
  }
  return out;
}

inline nlohmann::json explanation_json(const Explanation& e, const AuditProblem& p) {
  nlohmann::json lits = nlohmann::json::array();
  for (const auto& [f, v] : e.literals) lits.push_back({{"feature", p.features.name(f)}, {"value", v}});
  return {{"conjunction", render(e.literals, p.features)},
          {"literals", std::move(lits)},
          {"decision", e.decision},
          {"class", to_string(e.cls)},
          {"minimal", e.minimal},
          {"unique", false}};
}

inline nlohmann::json stats_json(const RunStats& s, bool include_time) {
  nlohmann::json out = {{"oracle_calls", s.oracle_calls}};
  if (include_time) out["elapsed_seconds"] = s.elapsed_seconds;
  return out;
}

inline Report individual_report(const IndividualVerdict& v, const AuditProblem& p, const AuditOptions& opts,
                                bool reveal_private, bool include_time) {
  Report r;
  r.command = "audit-individual";
  r.verdict = {{"leaks", v.leaks},
               {"sensitive", v.sensitive},
               {"decision", v.decision},
               {"mode", to_string(opts.mode)},
               {"notes", v.notes}};
  r.witnesses["subject"] = individual_json(v.subject, p, reveal_private);
  r.witnesses["lppae"] = v.lppae ? explanation_json(*v.lppae, p) : nlohmann::json(nullptr);
  r.witnesses["shield"] = v.shield ? individual_json(*v.shield, p, true) : nlohmann::json(nullptr);
  r.stats = stats_json(v.stats, include_time);
  return r;
}

inline Report model_report(const ModelVerdict& v, const AuditProblem& p, const AuditOptions& opts,
                           bool include_time) {
  Report r;
  r.command = "audit-model";
  r.verdict = {{"leaks", v.leaks},
               {"iterations", v.iterations},
               {"mode", to_string(opts.mode)},
               {"scope", "individuals holding " + std::string(p.partition.protected_value() ? "" : "¬") +
                             p.features.name(p.partition.sensitive()) + "; all others are exempt"},
               {"notes", v.notes}};
  if (v.counterexample) {
    // Counterexamples are points of the input space found by the solver, not
    // records of real people, so they are shown in full.
    r.witnesses["counterexample"] = individual_json(*v.counterexample, p, true);
    r.witnesses["counterexample_open_profile"] =
        render(restrict(*v.counterexample, Side::Open, p.partition), p.features);
  } else {
    r.witnesses["counterexample"] = nullptr;
  }
  nlohmann::json cover = nlohmann::json::array();
  for (const auto& rec : v.cover) {
    nlohmann::json item = {{"open_literals", render(rec.block.literals, p.features)},
                           {"decision", rec.lppae.decision},
                           {"lppae", explanation_json(rec.lppae, p)}};
    cover.push_back(std::move(item));
  }
  r.witnesses["cover"] = std::move(cover);
  r.stats = stats_json(v.stats, include_time);
  return r;
}

/// Human-readable rendering.
inline std::string render_text(const Report& r) {
  std::ostringstream os;
  os << r.command << ": ";
  if (r.verdict.contains("leaks")) os << (r.verdict["leaks"].get<bool>() ? "LEAKS" : "NO LEAK");
  os << '\n';
  for (const auto& [k, v] : r.verdict.items()) {
    if (k == "leaks" || k == "notes") continue;
    os << "  " << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  }
  if (r.verdict.contains("notes"))
    for (const auto& n : r.verdict["notes"]) os << "  note: " << n.get<std::string>() << '\n';
  for (const auto& [k, v] : r.witnesses.items()) {
    if (v.is_null()) continue;
    if (v.is_object() && v.contains("conjunction")) {
      os << "  " << k << ": " << v["conjunction"].get<std::string>() << " (" << v["class"].get<std::string>()
         << ", one of possibly several minimal explanations)\n";
    } else if (v.is_array()) {
      os << "  " << k << ":\n";
      for (const auto& item : v) {
        if (item.contains("open_literals"))
          os << "    - open " << item["open_literals"].get<std::string>() << " / decision " << item["decision"]
             << " / lppae " << item["lppae"]["conjunction"].get<std::string>() << '\n';
        else
          os << "    - " << item.dump() << '\n';
      }
    } else {
      os << "  " << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
  }
  for (const auto& [k, v] : r.stats.items()) os << "  " << k << ": " << v.dump() << '\n';
  return os.str();
}

}  // namespace leakaudit
