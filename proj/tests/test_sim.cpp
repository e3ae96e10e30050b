#include <gtest/gtest.h>

#include <cmath>

#include "pwacert/sim.hpp"
#include "testing.hpp"

using namespace pwacert;
using namespace pwacert::sim;

namespace {

VectorXd v1(double a) { return VectorXd::Constant(1, a); }

// x' = -sign(x): sliding mode at the origin
model::PwaSystem relay(bool with_lower_half = true) {
  nlohmann::json doc = {
      {"n", 1}, {"p", 1}, {"m", 1}, {"D", {{0.0}}},
      {"regions",
       {{{"index", 1}, {"G", {{1.0}}}, {"g", {0.0}}, {"A", {{0.0}}}, {"a", {-1.0}}, {"B", {{0.0}}}, {"C", {{1.0}}},
         {"c", {0.0}}}}},
      {"boundaries", nlohmann::json::array()}};
  if (with_lower_half) {
    doc["regions"].push_back({{"index", 2}, {"G", {{-1.0}}}, {"g", {0.0}}, {"A", {{0.0}}}, {"a", {1.0}},
                              {"B", {{0.0}}}, {"C", {{1.0}}}, {"c", {0.0}}});
    doc["boundaries"].push_back({{"i", 1}, {"j", 2}, {"E", {{1.0}}}, {"e", {0.0}}});
  }
  return model::parse_model(doc);
}

double final_error(double dt) {
  const auto tr = simulate(load("first_order"), v1(1.0), InputSignal::zero(1), 1.0, dt);
  return std::abs(tr.states.back()[0] - std::exp(-1.0));
}

}  // namespace

TEST(Simulate, FirstOrderDecay) {
  const auto tr = simulate(load("first_order"), v1(1.0), InputSignal::zero(1), 5.0, 0.01);
  ASSERT_EQ(tr.times.size(), 501u);
  EXPECT_DOUBLE_EQ(tr.times.back(), 5.0);
  for (size_t k = 0; k < tr.times.size(); k += 50) EXPECT_NEAR(tr.states[k][0], std::exp(-tr.times[k]), 1e-9);
  EXPECT_TRUE(tr.events.empty());
  EXPECT_TRUE(tr.warnings.empty());
}

TEST(Simulate, FourthOrderConvergence) {
  const double ratio = final_error(0.1) / final_error(0.05);
  EXPECT_NEAR(ratio, 16.0, 1.0);
}

TEST(Simulate, SwitchingLocatesCrossing) {
  // deadzone with u = 0 from x = 3: region 5 until x = 2.25 at t = ln(1.875 / 1.125)
  const auto sys = load("deadzone");
  const auto tr = simulate(sys, v1(3.0), InputSignal::zero(1), 5.0, 0.01);
  ASSERT_GE(tr.events.size(), 1u);
  EXPECT_EQ(tr.events[0].from, 5);
  EXPECT_EQ(tr.events[0].to, 4);
  EXPECT_NEAR(tr.events[0].time, std::log(1.875 / 1.125), 1e-8);
  EXPECT_EQ(tr.regions.front(), 5);
}

TEST(Simulate, ZenoGuard) {
  EXPECT_THROW(simulate(relay(), v1(0.5), InputSignal::zero(1), 2.0, 0.01), SimError);
}

TEST(Simulate, EscapeIsAnError) {
  try {
    simulate(relay(false), v1(0.5), InputSignal::zero(1), 2.0, 0.01);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_NE(std::string(e.what()).find("escaped"), std::string::npos);
  }
  EXPECT_THROW(simulate(relay(false), v1(-1.0), InputSignal::zero(1), 1.0, 0.1), SimError);
}

TEST(Simulate, BadArguments) {
  const auto sys = load("first_order");
  EXPECT_THROW(simulate(sys, VectorXd::Zero(2), InputSignal::zero(1), 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(simulate(sys, v1(0), InputSignal::zero(2), 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(simulate(sys, v1(0), InputSignal::zero(1), 1.0, 0.0), std::invalid_argument);
}

TEST(Simulate, TableInputSplitsSteps) {
  const auto u = InputSignal::table({0.0, 1.05}, {v1(0.0), v1(1.0)});
  const auto tr = simulate(load("first_order"), v1(0.0), u, 3.0, 0.1);
  EXPECT_NE(std::find(tr.times.begin(), tr.times.end(), 1.05), tr.times.end());
  EXPECT_NEAR(tr.states.back()[0], 1.0 - std::exp(-1.95), 1e-6);
}

TEST(Simulate, DiscontinuityWarning) {
  const auto tr = simulate(load("deadzone_discontinuous"), v1(0.0), InputSignal::zero(1), 1.0, 0.1);
  ASSERT_FALSE(tr.warnings.empty());
  EXPECT_NE(tr.warnings[0].find("discontinuous vector field across boundary"), std::string::npos);
}

TEST(Input, Signals) {
  const auto s = InputSignal::sinusoid(v1(2.0), 3.0, v1(0.5));
  EXPECT_NEAR(s(0.25)[0], 2.0 * std::sin(0.75) + 0.5, 1e-15);
  EXPECT_TRUE(std::isinf(s.next_break(0.0)));
  const auto t = InputSignal::table({0.0, 1.0}, {v1(1.0), v1(2.0)});
  EXPECT_EQ(t(1.0)[0], 2.0);
  EXPECT_EQ(t.left(1.0)[0], 1.0);
  EXPECT_EQ(t.next_break(0.5), 1.0);
  EXPECT_THROW(InputSignal::table({1.0, 1.0}, {v1(1.0), v1(2.0)}), std::invalid_argument);
  EXPECT_EQ(InputSignal::constant(v1(4.0))(9.0)[0], 4.0);
}

TEST(StateAt, HermiteAccuracy) {
  const auto sys = load("first_order");
  const auto u = InputSignal::zero(1);
  const auto tr = simulate(sys, v1(1.0), u, 2.0, 0.1);
  for (double t : {0.05, 0.55, 1.234}) EXPECT_NEAR(state_at(sys, tr, u, t)[0], std::exp(-t), 1e-6);
}

TEST(Quotient, FirstOrderStep) {
  const auto q = gain_quotient(load("first_order"), v1(0.0), InputSignal::constant(v1(1.0)), InputSignal::zero(1),
                               100.0, 0.01);
  EXPECT_GT(q.ratio, 0.95);
  EXPECT_LE(q.ratio, 1.0);
  EXPECT_NEAR(q.input_energy, 100.0, 1e-9);
  EXPECT_NEAR(q.sqrt_ratio * q.sqrt_ratio, q.ratio, 1e-12);
}

TEST(Quotient, ZeroInputEnergy) {
  const auto u = InputSignal::constant(v1(1.0));
  EXPECT_THROW(gain_quotient(load("first_order"), v1(0.0), u, u, 1.0, 0.1), SimError);
}

TEST(Pair, IntegralsAlignWithTimes) {
  const auto p = pair_samples(load("deadzone"), v1(3.0), v1(-3.0), InputSignal::zero(1), InputSignal::zero(1), 10.0,
                              0.05);
  ASSERT_EQ(p.iu.size() + 1, p.t.size());
  ASSERT_EQ(p.iy.size(), p.iu.size());
  for (double v : p.iu) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(std::is_sorted(p.t.begin(), p.t.end()));
}

TEST(Decay, AnalyticBound) {
  const auto sys = load("first_order");
  const auto u = InputSignal::sinusoid(v1(1.0), 2.0, v1(0.0));
  const auto ok = decay_check(sys, 1.0, 1.0, v1(1.0), v1(-1.0), u, 10.0, 0.01);
  EXPECT_TRUE(ok.pass);
  EXPECT_NEAR(ok.max_ratio, 1.0, 1e-6);
  EXPECT_FALSE(decay_check(sys, 1.0, 1.2, v1(1.0), v1(-1.0), u, 10.0, 0.01).pass);
  const auto triv = decay_check(sys, 1.0, 1.0, v1(1.0), v1(1.0), u, 10.0, 0.01);
  EXPECT_TRUE(triv.trivial);
  EXPECT_TRUE(triv.pass);
}

TEST(Equilibrium, Deadzone) {
  const auto sys = load("deadzone");
  VectorXd x;
  ASSERT_TRUE(equilibrium(sys, v1(1.05), x));
  EXPECT_NEAR(x[0], 1.5, 1e-12);
  ASSERT_TRUE(equilibrium(sys, v1(0.0), x));
  EXPECT_EQ(x[0], 0.0);
}

TEST(Csv, Layout) {
  const auto sys = load("deadzone");
  const auto tr = simulate(sys, v1(3.0), InputSignal::zero(1), 1.0, 0.5);
  const auto csv = trajectory_csv(sys, tr, {"model_digest abc"});
  EXPECT_EQ(csv.rfind("# model_digest abc\n# event ", 0), 0u);
  EXPECT_NE(csv.find("\nt,x1,y1,region\n0,3,3,5\n"), std::string::npos);
  EXPECT_EQ(static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')), 3 + tr.times.size());
}
