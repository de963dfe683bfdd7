#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "leakaudit/report.hpp"

using namespace leakaudit;
using namespace leakaudit::testing;

TEST(Report, IndividualReportRedactsPrivateValues) {
  AuditSession session(tutor());
  auto v = audit_individual(kToto, session);
  Report r = individual_report(v, session.problem(), {}, false, false);
  EXPECT_EQ(r.report_version, 1);
  EXPECT_EQ(r.command, "audit-individual");
  EXPECT_FALSE(r.verdict["leaks"].get<bool>());
  EXPECT_EQ(r.witnesses["subject"]["E"], true);
  EXPECT_EQ(r.witnesses["subject"]["S"], "redacted");
  EXPECT_EQ(r.witnesses["subject"]["H"], "redacted");
  EXPECT_EQ(r.witnesses["lppae"]["conjunction"], "E ∧ D");
  EXPECT_EQ(r.witnesses["lppae"]["unique"], false);
  EXPECT_FALSE(r.stats.contains("elapsed_seconds"));

  Report shown = individual_report(v, session.problem(), {}, true, true);
  EXPECT_EQ(shown.witnesses["subject"]["S"], true);
  EXPECT_TRUE(shown.stats.contains("elapsed_seconds"));
}

TEST(Report, ModelReportCarriesCounterexample) {
  AuditSession session(tutor());
  auto v = audit_model(session);
  Report r = model_report(v, session.problem(), {}, false);
  EXPECT_TRUE(r.verdict["leaks"].get<bool>());
  EXPECT_EQ(r.witnesses["counterexample"]["S"], true);
  const std::string open = r.witnesses["counterexample_open_profile"];
  EXPECT_NE(open.find("¬D"), std::string::npos);
  EXPECT_NE(render_text(r).find("LEAKS"), std::string::npos);
}

TEST(Report, ModelReportCoverForCleanModel) {
  AuditSession session(constant_problem(true));
  auto v = audit_model(session);
  Report r = model_report(v, session.problem(), {}, false);
  EXPECT_FALSE(r.verdict["leaks"].get<bool>());
  EXPECT_TRUE(r.witnesses["counterexample"].is_null());
  ASSERT_EQ(r.witnesses["cover"].size(), 1u);
  EXPECT_EQ(r.witnesses["cover"][0]["lppae"]["conjunction"], "⊤");
  EXPECT_NE(render_text(r).find("NO LEAK"), std::string::npos);
}

// parse(render(r)) == r for every report the auditor produces.
TEST(Report, StructuredRoundTripProperty) {
  for (const auto& p : corpus(30, 6)) {
    AuditSession session(p);
    std::vector<Report> reports;
    auto mv = audit_model(session);
    reports.push_back(model_report(mv, p, {}, true));
    for (const auto& x : all_individuals(6)) {
      if (x.mask() % 7) continue;
      reports.push_back(individual_report(audit_individual(x, session), p, {}, x.mask() % 2, true));
    }
    for (const auto& r : reports) {
      const std::string text = render_structured(r);
      Report back = parse_structured(text);
      ASSERT_EQ(back, r);
      ASSERT_EQ(render_structured(back), text);
    }
  }
}

TEST(Report, RejectsUnknownVersion) {
  Report r;
  r.command = "x";
  nlohmann::json j = to_json(r);
  j["report_version"] = 2;
  EXPECT_THROW(report_from_json(j), std::invalid_argument);
}
