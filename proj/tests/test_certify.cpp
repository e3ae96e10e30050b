#include <gtest/gtest.h>

#include <cmath>

#include "pwacert/certify.hpp"
#include "testing.hpp"

using namespace pwacert;
using namespace pwacert::certify;

namespace {

MatrixXd m1(double a) { return MatrixXd::Constant(1, 1, a); }

}  // namespace

TEST(Hinf, FirstOrderLag) {
  EXPECT_NEAR(hinf_norm(m1(-1), m1(1), m1(1), m1(0)), 1.0, 1e-3);
  EXPECT_NEAR(hinf_norm(m1(-1), m1(1), m1(1), m1(1)), 2.0, 2e-3);
  EXPECT_NEAR(hinf_norm(m1(-4), m1(2), m1(1), m1(0)), 0.5, 5e-4);
}

TEST(Hinf, LightlyDampedResonance) {
  // 1 / (s^2 + 0.2 s + 1): peak 1 / (2 zeta sqrt(1 - zeta^2)) with zeta = 0.1
  MatrixXd A(2, 2), B(2, 1), C(1, 2);
  A << 0, 1, -1, -0.2;
  B << 0, 1;
  C << 1, 0;
  const double peak = 1.0 / (0.2 * std::sqrt(1 - 0.01));
  EXPECT_NEAR(hinf_norm(A, B, C, MatrixXd::Zero(1, 1)), peak, 1e-3 * peak);
}

TEST(Hinf, NonHurwitzIsInfinite) {
  EXPECT_TRUE(std::isinf(hinf_norm(m1(1), m1(1), m1(1), m1(0))));
  EXPECT_TRUE(std::isinf(hinf_lower_bound(load("unstable_first_order"))));
}

TEST(Hinf, DeadzoneSubsystems) { EXPECT_NEAR(hinf_lower_bound(load("deadzone")), 10.0, 1e-2); }

TEST(Diagnostic, NonHurwitz) {
  EXPECT_EQ(non_hurwitz_diagnostic(load("deadzone")), "");
  EXPECT_EQ(non_hurwitz_diagnostic(load("unstable_first_order")).rfind("non-Hurwitz subsystem 1", 0), 0u);
}

TEST(Gain, LtiMatchesHinf) {
  const auto c = incremental_gain_bound(load("first_order"));
  ASSERT_TRUE(c.feasible()) << c.reason;
  EXPECT_NEAR(c.eta, 1.0, 1e-2);
  EXPECT_NEAR(c.gamma, c.eta * c.eta, 1e-12);
  EXPECT_TRUE(c.verification.pass());
}

TEST(Gain, UnstableIsInfeasible) {
  const auto c = incremental_gain_bound(load("unstable_first_order"));
  EXPECT_EQ(c.outcome, Outcome::infeasible);
  EXPECT_FALSE(c.reason.empty());
}

TEST(Gain, Deadzone) {
  const auto sys = load("deadzone");
  const auto c = incremental_gain_bound(sys);
  ASSERT_TRUE(c.feasible()) << c.reason;
  EXPECT_GE(c.eta, 9.5);
  EXPECT_LE(c.eta, 10.5);
  EXPECT_GE(c.eta, hinf_lower_bound(sys) - 1e-6);
  EXPECT_TRUE(c.verification.lmi_pass());
  EXPECT_TRUE(c.verification.sampled_pass());
  EXPECT_EQ(c.digest, model::digest(sys));
}

TEST(Gain, EggCommonQuadraticInfeasible) {
  Options o;
  o.assembly.common_quadratic = true;
  const auto c = incremental_gain_bound(load("egg"), o);
  EXPECT_EQ(c.outcome, Outcome::infeasible);
  EXPECT_TRUE(c.common_quadratic);
}

TEST(Stability, LtiRate) {
  const auto c = incremental_stability(load("first_order"));
  ASSERT_TRUE(c.feasible()) << c.reason;
  EXPECT_DOUBLE_EQ(c.sigma2, 1.0);
  EXPECT_NEAR(c.sigma3, 2.0, 1e-4);
  EXPECT_NEAR(c.decay_rate_bound(), 1.0, 1e-4);
  EXPECT_GE(c.overshoot_bound(), 1.0);
}

TEST(Stability, NonHurwitzPrecheck) {
  const auto c = incremental_stability(load("unstable_first_order"));
  EXPECT_EQ(c.outcome, Outcome::infeasible);
  EXPECT_EQ(c.reason.rfind("non-Hurwitz subsystem 1", 0), 0u);
}

TEST(Stability, SaturationDecays) {
  const auto c = incremental_stability(load("saturation"));
  ASSERT_TRUE(c.feasible()) << c.reason;
  EXPECT_GT(c.decay_rate_bound(), 0.0);
  EXPECT_GE(c.sigma1, 0.0);
  EXPECT_EQ(c.verification.sandwich_violation, 0.0);
}

TEST(Combined, NoBetterThanGainAlone) {
  const auto sys = load("saturation");
  const auto g = incremental_gain_bound(sys);
  const auto c = combined_certificate(sys);
  ASSERT_TRUE(g.feasible());
  ASSERT_TRUE(c.feasible()) << c.reason;
  EXPECT_GE(c.eta, g.eta - 1e-5);
  EXPECT_GE(c.sigma3, 1e-6 * (1 - 1e-3));
}

TEST(Combined, NonHurwitzPrecheck) {
  const auto c = combined_certificate(load("unstable_first_order"));
  EXPECT_EQ(c.outcome, Outcome::infeasible);
  EXPECT_NE(c.reason.find("non-Hurwitz"), std::string::npos);
}

TEST(Json, DeterministicAndComplete) {
  const auto sys = load("first_order");
  const auto a = to_json(incremental_gain_bound(sys)).dump();
  const auto b = to_json(incremental_gain_bound(sys)).dump();
  EXPECT_EQ(a, b);
  const auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j["kind"], "gain");
  EXPECT_EQ(j["outcome"], "feasible");
  EXPECT_EQ(j["model_digest"], model::digest(sys));
  EXPECT_TRUE(j.contains("storage"));
  EXPECT_TRUE(j.contains("verification"));
  EXPECT_FALSE(j["solver"].contains("solve_time"));
}

TEST(Outcome, Names) {
  EXPECT_STREQ(to_string(Outcome::verification_failed), "verification-failed");
  EXPECT_STREQ(to_string(Outcome::solver_failed), "solver-failed");
}
