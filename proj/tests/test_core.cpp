#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace leakaudit;
using namespace leakaudit::testing;

TEST(ParseModel, TutorDocument) {
  AuditProblem p = tutor();
  EXPECT_EQ(p.num_features(), 4u);
  EXPECT_EQ(p.model.labels.size(), 2u);
  EXPECT_EQ(p.model.kind(), ModelKind::Formula);
  EXPECT_EQ(p.partition.open_features(), (std::vector<FeatureIndex>{kE, kD}));
  EXPECT_EQ(p.partition.sensitive(), kS);
  EXPECT_TRUE(p.partition.protected_value());
}

TEST(ParseModel, SingleFeatureNoOpenProfile) {
  AuditProblem p = parse_model(R"({"features":["a"],"open":[],"private":["a"],
      "sensitive":{"feature":"a","value":true},"labels":[0,1],
      "model":{"kind":"formula","body":{"op":"var","name":"a"}}})");
  EXPECT_EQ(p.num_features(), 1u);
  EXPECT_TRUE(p.partition.open_features().empty());
}

namespace {

std::string doc_with(const std::string& open, const std::string& priv, const std::string& sensitive,
                     const std::string& model, const std::string& extra = "") {
  return R"({"features":["a","b","c"],"open":)" + open + R"(,"private":)" + priv + R"(,"sensitive":)" + sensitive +
         R"(,"labels":[0,1],"model":)" + model + extra + "}";
}

const std::string kVarA = R"({"kind":"formula","body":{"op":"var","name":"a"}})";

void expect_parse_error(const std::string& doc, const std::string& location, const std::string& fragment) {
  try {
    parse_model(doc);
    FAIL() << "expected a parse error containing '" << fragment << "'";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), location) << e.what();
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(ParseModel, SensitiveFeatureInOpenProfile) {
  expect_parse_error(doc_with(R"(["a","c"])", R"(["b"])", R"({"feature":"a","value":true})", kVarA),
                     "/sensitive/feature", "sensitive feature not private");
}

TEST(ParseModel, DuplicateFeature) {
  expect_parse_error(R"({"features":["a","a"],"open":[],"private":["a"],"sensitive":{"feature":"a","value":true},
      "labels":[0,1],"model":{"kind":"formula","body":{"op":"var","name":"a"}}})",
                     "/features/1", "duplicate feature");
}

TEST(ParseModel, DanglingFeatureReference) {
  expect_parse_error(doc_with(R"(["a"])", R"(["b","c"])", R"({"feature":"b","value":true})",
                              R"({"kind":"formula","body":{"op":"var","name":"zz"}})"),
                     "/model/body/name", "dangling feature reference");
}

TEST(ParseModel, SchemaViolations) {
  const std::string part_open = R"(["a"])", part_priv = R"(["b","c"])", sens = R"({"feature":"b","value":true})";
  expect_parse_error(doc_with(part_open, part_priv, sens, kVarA, R"(,"extra":1)"), "/extra", "unknown key");
  expect_parse_error(doc_with(part_open, R"(["b"])", sens, kVarA), "/private", "neither open nor private");
  expect_parse_error(doc_with(part_open, R"(["a","b","c"])", sens, kVarA), "/private", "both open and private");
  expect_parse_error(doc_with(part_open, part_priv, R"({"feature":"b","value":1})", kVarA), "/sensitive/value",
                     "expected a boolean");
  expect_parse_error(doc_with(part_open, part_priv, sens, R"({"kind":"bdd","body":0})"), "/model/kind",
                     "unknown model kind");
  expect_parse_error(doc_with(part_open, part_priv, sens, R"({"kind":"formula","body":{"op":"xor","args":[]}})"),
                     "/model/body/op", "unknown formula op");
  expect_parse_error(doc_with(part_open, part_priv, sens, R"({"kind":"formula","body":{"op":"not","args":[]}})"),
                     "/model/body/args", "exactly one argument");
  expect_parse_error("{not json", "", "malformed JSON");
}

TEST(ParseModel, TreeAndThresholdValidation) {
  const std::string part_open = R"(["a"])", part_priv = R"(["b","c"])", sens = R"({"feature":"b","value":true})";
  expect_parse_error(doc_with(part_open, part_priv, sens,
                              R"({"kind":"tree","body":{"test":"a","if_true":{"test":"a","if_true":1,"if_false":0},"if_false":0}})"),
                     "/model", "tests feature index 0 twice");
  expect_parse_error(doc_with(part_open, part_priv, sens, R"({"kind":"tree","body":{"test":"a","if_true":7,"if_false":0}})"),
                     "/model", "not in label set");
  expect_parse_error(doc_with(part_open, part_priv, sens, R"({"kind":"threshold","body":[[{"weights":[1,1],"bias":1}]]})"),
                     "/model", "expected 3");
  expect_parse_error(doc_with(part_open, part_priv, sens,
                              R"({"kind":"threshold","body":[[{"weights":[1,1,1],"bias":1},{"weights":[1,1,1],"bias":2}]]})"),
                     "/model", "needs exactly 3 labels");
}

TEST(Evaluate, RunningExample) {
  AuditProblem p = tutor();
  EXPECT_EQ(evaluate(p.model, kToto), 1);
  EXPECT_EQ(evaluate(p.model, kTutu), 1);
  EXPECT_EQ(evaluate(p.model, person(false, false, false, false)), 0);
  EXPECT_EQ(evaluate(p.model, kTata), 1);
  EXPECT_EQ(evaluate(p.model, kTete), 1);
  EXPECT_EQ(evaluate(p.model, person(true, false, false, true)), 0);
}

TEST(Evaluate, TreeAndMultiLabelThreshold) {
  AuditProblem tree = parse_model(R"({"features":["a","b"],"open":["a"],"private":["b"],
      "sensitive":{"feature":"b","value":false},"labels":[0,1,2],
      "model":{"kind":"tree","body":{"test":"a","if_true":{"test":"b","if_true":2,"if_false":1},"if_false":0}}})");
  EXPECT_EQ(evaluate(tree.model, Individual({false, true})), 0);
  EXPECT_EQ(evaluate(tree.model, Individual({true, false})), 1);
  EXPECT_EQ(evaluate(tree.model, Individual({true, true})), 2);

  // label index = 1 + highest firing output unit; units: a+b >= 1, a+b >= 2.
  AuditProblem net = parse_model(R"({"features":["a","b"],"open":["a"],"private":["b"],
      "sensitive":{"feature":"b","value":true},"labels":[5,6,7],
      "model":{"kind":"threshold","body":[[{"weights":[1,1],"bias":1},{"weights":[1,1],"bias":2}]]}})");
  EXPECT_EQ(evaluate(net.model, Individual({false, false})), 5);
  EXPECT_EQ(evaluate(net.model, Individual({true, false})), 6);
  EXPECT_EQ(evaluate(net.model, Individual({true, true})), 7);
}

TEST(Evaluate, IsPure) {
  for (const auto& p : corpus(30, 6)) {
    for (const auto& x : all_individuals(6)) ASSERT_EQ(evaluate(p.model, x), evaluate(p.model, x));
  }
}

TEST(Restrict, Examples) {
  AuditProblem p = tutor();
  EXPECT_EQ(restrict(kTata, Side::Open, p.partition), (LiteralSet{{kE, true}, {kD, false}}));
  EXPECT_TRUE(restrict(LiteralSet{}, Side::Open, p.partition).empty());
  EXPECT_EQ(restrict(LiteralSet{{kD, true}, {kH, true}}, Side::Open, p.partition), (LiteralSet{{kD, true}}));
}

TEST(Restrict, PartitionsEveryIndividual) {
  for (const auto& p : corpus(20, 5)) {
    for (const auto& x : all_individuals(5)) {
      LiteralSet open = restrict(x, Side::Open, p.partition);
      LiteralSet priv = restrict(x, Side::Private, p.partition);
      EXPECT_EQ(open.size() + priv.size(), x.size());
      LiteralSet merged = open;
      for (const auto& [f, v] : priv) {
        EXPECT_FALSE(open.mentions(f));
        merged.insert(f, v);
      }
      EXPECT_EQ(merged, LiteralSet::of(x));
    }
  }
}

TEST(LiteralSet, RejectsBothPolarities) {
  LiteralSet s{{0, true}};
  EXPECT_THROW(s.insert(0, false), InvariantError);
  EXPECT_NO_THROW(s.insert(0, true));
}

TEST(ProfilePartition, Invariants) {
  EXPECT_THROW(ProfilePartition(3, {0, 2}, 2, true), InvariantError);
  EXPECT_THROW(ProfilePartition(3, {0, 0}, 2, true), InvariantError);
  EXPECT_THROW(ProfilePartition(3, {5}, 2, true), InvariantError);
  EXPECT_THROW(FeatureSpace({"a", "a"}), InvariantError);
  EXPECT_THROW(FeatureSpace(std::vector<std::string>{}), InvariantError);
}

TEST(Render, SignedConjunction) {
  AuditProblem p = tutor();
  EXPECT_EQ(render(LiteralSet{{kD, true}, {kH, false}}, p.features), "D ∧ ¬H");
  EXPECT_EQ(render(LiteralSet{}, p.features), "⊤");
}

// serialize then parse is the identity on validated problems.
TEST(Interchange, RoundTripProperty) {
  std::vector<AuditProblem> problems = corpus(60, 7);
  problems.push_back(tutor());
  gen::RandomModelParams multi;
  multi.num_labels = 3;
  problems.push_back(gen::random_model(9, 5, ModelKind::Tree, multi));
  problems.push_back(gen::random_model(9, 5, ModelKind::Threshold, multi));
  for (const auto& p : problems) {
    json doc = serialize_model(p);
    AuditProblem back = parse_model(doc.dump());
    EXPECT_EQ(back, p);
    EXPECT_EQ(serialize_model(back), doc);
  }
}
