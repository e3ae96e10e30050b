#include <gtest/gtest.h>

#include <regex>

#include "pwacert/model.hpp"
#include "testing.hpp"

using namespace pwacert::model;
using nlohmann::json;

namespace {

json scalar_model() {
  return json::parse(R"({
    "n": 1, "p": 1, "m": 1, "D": [[0]],
    "regions": [
      {"index": 1, "G": [[-1]], "g": [0], "A": [[-1]], "a": [0], "B": [[1]], "C": [[1]], "c": [0]},
      {"index": 2, "G": [[1]], "g": [0], "A": [[-2]], "a": [0], "B": [[1]], "C": [[1]], "c": [0]}
    ],
    "boundaries": [{"i": 1, "j": 2, "E": [[1]], "e": [0]}]
  })");
}

std::string error_of(const json& doc) {
  try {
    parse_model(doc);
  } catch (const ModelError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Model, LoadsDeadzone) {
  const auto sys = load("deadzone");
  EXPECT_EQ(sys.n, 1);
  EXPECT_EQ(sys.N(), 5);
  EXPECT_EQ(sys.boundaries.size(), 4u);
  EXPECT_DOUBLE_EQ(sys.region(2).A(0, 0), -0.1);
  ASSERT_NE(sys.boundary(2, 1), nullptr);
  EXPECT_EQ(sys.boundary(1, 3), nullptr);
}

TEST(Model, DigestIsStableAndSurvivesRoundTrip) {
  const auto sys = load("deadzone");
  const std::string d = digest(sys);
  EXPECT_TRUE(std::regex_match(d, std::regex("[0-9a-f]{16}")));
  EXPECT_EQ(d, digest(load("deadzone")));
  EXPECT_EQ(d, digest(parse_model(to_json(sys))));
  EXPECT_NE(d, digest(load("deadzone_discontinuous")));
}

TEST(Model, ShippedModelsValidate) {
  for (const char* name : {"deadzone", "saturation", "egg", "first_order", "deadzone_discontinuous"}) {
    const auto rep = validate(load(name));
    EXPECT_TRUE(rep.all_pass()) << name;
    ASSERT_NE(rep.find("boundary-containment"), nullptr);
    EXPECT_LE(rep.find("boundary-containment")->residual, 1e-8) << name;
  }
}

TEST(Model, ContinuityIsInformational) {
  const auto rep = validate(load("deadzone_discontinuous"));
  const Check* c = rep.find("continuity");
  ASSERT_NE(c, nullptr);
  EXPECT_FALSE(c->pass);
  EXPECT_TRUE(c->informational);
  EXPECT_TRUE(rep.all_pass());
}

TEST(Model, DeadzoneContinuityWithExplicitG) {
  const auto sys = load("deadzone");
  const auto res = check_continuity(sys);
  ASSERT_EQ(res.size(), 4u);
  for (const auto& r : res) {
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(r.same_B);
    const auto* b = sys.boundary(r.i, r.j);
    MatrixXd Ee(b->E.rows(), sys.n + 1);
    Ee << b->E, b->e;
    const auto& Ri = sys.region(r.i);
    const auto& Rj = sys.region(r.j);
    MatrixXd lhs(sys.n, sys.n + 1);
    lhs << Ri.A - Rj.A, Ri.a - Rj.a;
    EXPECT_LT((r.gmat * Ee - lhs).norm(), 1e-12);
  }
  // boundary x = -2.25: A1 - A2 = -0.9
  EXPECT_NEAR(res[0].gmat(0, 0), -0.9, 1e-12);
  EXPECT_TRUE(is_continuous(sys));
}

TEST(Model, DiscontinuousVariantFails) {
  const auto sys = load("deadzone_discontinuous");
  EXPECT_DOUBLE_EQ(sys.region(2).a[0], 1.4);
  EXPECT_FALSE(is_continuous(sys));
  EXPECT_THROW(lipschitz_constants(sys), ModelError);
}

TEST(Model, LipschitzConstants) {
  const auto [lx, lu] = lipschitz_constants(load("deadzone"));
  EXPECT_NEAR(lx, 1.0, 1e-12);
  EXPECT_NEAR(lu, 1.0, 1e-12);
  // quadrant partition of the egg model is discontinuous across x2 = 0
  EXPECT_THROW(lipschitz_constants(load("egg")), ModelError);
}

TEST(Model, Hurwitz) {
  EXPECT_TRUE(is_hurwitz(MatrixXd::Constant(1, 1, -1.0)));
  EXPECT_FALSE(is_hurwitz(MatrixXd::Constant(1, 1, 1.0)));
  EXPECT_FALSE(is_hurwitz(MatrixXd::Zero(1, 1)));
  MatrixXd A(2, 2);
  A << -0.1, 1, -5, -0.1;
  EXPECT_TRUE(is_hurwitz(A));
}

TEST(Model, RegionMembership) {
  const auto sys = load("deadzone");
  EXPECT_TRUE(sys.region(3).contains(VectorXd::Constant(1, 1.0), 0.0));
  EXPECT_TRUE(sys.region(4).contains(VectorXd::Constant(1, 1.0), 0.0));
  EXPECT_FALSE(sys.region(5).contains(VectorXd::Constant(1, 1.0), 0.0));
}

TEST(ModelErrors, DimensionMismatchNamesTheField) {
  auto doc = scalar_model();
  doc["regions"][0]["A"] = json::parse("[[1, 0], [0, 1]]");
  EXPECT_EQ(error_of(doc), "dimension mismatch: region 1 A expected 1x1, got 2x2");
}

TEST(ModelErrors, SchemaViolations) {
  auto doc = scalar_model();
  doc.erase("n");
  EXPECT_NE(error_of(doc).find("missing field 'n'"), std::string::npos);
  doc = scalar_model();
  doc["regions"][1]["index"] = 1;
  EXPECT_NE(error_of(doc).find("duplicate region index"), std::string::npos);
  doc = scalar_model();
  doc["regions"][0]["D"] = json::parse("[[0]]");
  EXPECT_NE(error_of(doc).find("per-region D"), std::string::npos);
  doc = scalar_model();
  doc["boundaries"][0]["j"] = 7;
  EXPECT_NE(error_of(doc).find("unknown region"), std::string::npos);
  EXPECT_THROW(parse_model_text("{not json"), ModelError);
  EXPECT_THROW(load_model("/nonexistent/model.json"), ModelError);
}

TEST(ModelErrors, OverlappingRegionsFailValidation) {
  auto doc = scalar_model();
  doc["regions"][1]["G"] = json::parse("[[1]]");
  doc["regions"][1]["g"] = json::parse("[1]");  // x >= -1 overlaps x <= 0
  doc["boundaries"] = json::array();
  const auto rep = validate(parse_model(doc));
  EXPECT_FALSE(rep.all_pass());
  EXPECT_FALSE(rep.find("disjoint-interiors")->pass);
}

TEST(ModelErrors, AssumptionOneNeedsZeroOffsetAtOrigin) {
  auto doc = scalar_model();
  doc["regions"][0]["a"] = json::parse("[0.5]");
  doc["regions"][1]["a"] = json::parse("[0.5]");
  const auto rep = validate(parse_model(doc));
  EXPECT_FALSE(rep.find("assumption-1")->pass);
}

TEST(ModelErrors, BoundaryOffTheIntersectionIsFlagged) {
  auto doc = scalar_model();
  doc["boundaries"][0]["e"] = json::parse("[0.5]");
  const auto rep = validate(parse_model(doc));
  EXPECT_FALSE(rep.find("boundary-containment")->pass);
}
