#include <gtest/gtest.h>

#include <cmath>

#include "pwacert/certify.hpp"
#include "pwacert/storage.hpp"
#include "testing.hpp"

using namespace pwacert;
using namespace pwacert::storage;

namespace {

VectorXd v1(double a) { return VectorXd::Constant(1, a); }

StorageFunction identity_storage(int n) {
  StorageFunction Sf;
  Sf.n = n;
  Sf.N = 1;
  Sf.P[1] = MatrixXd::Identity(n, n);
  return Sf;
}

const certify::GainCertificate& deadzone_cert() {
  static const certify::GainCertificate c = certify::incremental_gain_bound(load("deadzone"));
  return c;
}

}  // namespace

TEST(Locate, DeadzoneCells) {
  const auto sys = load("deadzone");
  EXPECT_EQ(locate_cell(sys, v1(0.0), v1(2.5)), Cell(3, 5));
  EXPECT_EQ(locate_cell(sys, v1(0.0), v1(0.0)), Cell(3, 3));
  // x = 1 lies in regions 3 and 4; the lower index wins
  EXPECT_EQ(locate_cell(sys, v1(1.0), v1(1.0)), Cell(3, 3));
  EXPECT_EQ(locate_cell(sys, v1(1.0 + 1e-6), v1(-3.0)), Cell(4, 1));
}

TEST(Locate, OutsideThePartitionThrows) {
  const auto sys = load("egg");
  VectorXd x(2);
  x << 1, 1;
  EXPECT_NO_THROW(locate_cell(sys, x, x));
  auto doc = model::to_json(load("first_order"));
  doc["regions"][0]["G"][0][0] = 1.0;
  doc["regions"][0]["g"][0] = -5.0;  // x >= 5 only
  const auto gap = model::parse_model(doc);
  EXPECT_THROW(locate_cell(gap, v1(0.0), v1(6.0)), NoCellFound);
}

TEST(Evaluate, HandCertificate) {
  StorageFunction Sf;
  Sf.n = 1;
  Sf.N = 1;
  Sf.P[1] = MatrixXd::Constant(1, 1, 2.0);
  const auto sys = load("first_order");
  EXPECT_DOUBLE_EQ(evaluate(Sf, sys, v1(1.0), v1(0.0)), 2.0);
  EXPECT_EQ(evaluate(Sf, sys, v1(3.7), v1(3.7)), 0.0);
}

TEST(Evaluate, DiagonalIsExactlyZero) {
  const auto sys = load("deadzone");
  const auto& Sf = deadzone_cert().storage;
  for (double x : {-7.0, -2.25, -1.3, 0.0, 0.4, 1.0, 5.5}) EXPECT_EQ(evaluate(Sf, sys, v1(x), v1(x)), 0.0);
}

TEST(Evaluate, BoundaryPairAgreesFromBothCells) {
  const auto sys = load("deadzone");
  const auto& Sf = deadzone_cert().storage;
  for (double xt : {-4.0, -1.5, 0.3, 2.0, 6.0}) {
    const double a = evaluate_in(Sf, locate_cell(sys, v1(1.0), v1(xt)), v1(1.0), v1(xt));
    Cell c = locate_cell(sys, v1(1.0 + 1e-3), v1(xt));
    const double b = evaluate_in(Sf, c, v1(1.0), v1(xt));
    EXPECT_NEAR(a, b, 1e-6) << xt;
  }
}

TEST(Verify, DeadzoneCertificatePasses) {
  const auto sys = load("deadzone");
  const auto& c = deadzone_cert();
  ASSERT_TRUE(c.feasible());
  const auto& r = c.verification;
  EXPECT_TRUE(r.pass());
  EXPECT_GE(r.continuity_samples, 10000);
  EXPECT_LE(r.continuity_mismatch, 1e-6);
  EXPECT_GE(r.min_S, -1e-6);
  EXPECT_EQ(r.max_diagonal_S, 0.0);
}

TEST(Verify, CorruptedPbarIsFlagged) {
  const auto sys = load("deadzone");
  StorageFunction Sf = deadzone_cert().storage;
  Sf.Pbar.at({2, 3})(0, 0) += 0.1;
  VerifyOptions o;
  o.sample_count = 2000;
  const auto r = verify_certificate(Sf, sys, o);
  EXPECT_GT(r.continuity_mismatch, 1e-3);
  EXPECT_FALSE(r.pass());
}

TEST(Verify, SingleRegionHasNoBoundaries) {
  const auto r = verify_certificate(identity_storage(1), load("first_order"));
  EXPECT_EQ(r.adjacencies, 0);
  EXPECT_EQ(r.continuity_mismatch, 0.0);
  EXPECT_TRUE(r.sampled_pass());
}

TEST(Verify, SandwichBounds) {
  VerifyOptions o;
  o.sigma1 = 0.5;
  o.sigma2 = 2.0;
  EXPECT_EQ(verify_certificate(identity_storage(1), load("first_order"), o).sandwich_violation, 0.0);
  o.sigma1 = 1.5;
  EXPECT_GT(verify_certificate(identity_storage(1), load("first_order"), o).sandwich_violation, 0.0);
}

TEST(Dissipation, SyntheticPair) {
  // S = |dx|^2 with no supply: violation equals the growth of S
  PairSamples p;
  p.t = {0.0, 1.0, 2.0};
  p.x = {v1(0.0), v1(1.0), v1(0.5)};
  p.xt = {v1(0.0), v1(0.0), v1(0.0)};
  p.iu = {0.0, 0.0};
  p.iy = {0.0, 0.0};
  const auto sys = load("first_order");
  EXPECT_DOUBLE_EQ(dissipation_violation(identity_storage(1), sys, 1.0, p), 1.0);
  p.iu = {1.0, 0.0};
  EXPECT_DOUBLE_EQ(dissipation_violation(identity_storage(1), sys, 1.0, p), 0.0);
}

TEST(Json, RoundTrip) {
  const auto& Sf = deadzone_cert().storage;
  const auto back = from_json(to_json(Sf));
  EXPECT_EQ(back.P.size(), Sf.P.size());
  EXPECT_EQ(back.Pbar.size(), Sf.Pbar.size());
  EXPECT_EQ(back.Pbar.at({1, 5}), Sf.Pbar.at({1, 5}));
  auto j = to_json(Sf);
  j["Pbar"]["1,2"] = model::matrix_json(MatrixXd::Zero(2, 2));
  EXPECT_THROW(from_json(j), std::invalid_argument);
}

TEST(Contour, IdentityStorageGivesSquaredDifference) {
  const auto sys = load("first_order");
  Slice s;
  const auto g = contour_grid(identity_storage(1), sys, s, -2.0, 2.0, 21);
  ASSERT_EQ(g.values.rows(), 21);
  for (int r = 0; r < 21; ++r)
    for (int c = 0; c < 21; ++c) EXPECT_NEAR(g.values(r, c), std::pow(g.xs[c] - g.ys[r], 2), 1e-12);
  const auto serial = contour_grid(identity_storage(1), sys, s, -2.0, 2.0, 21, false);
  EXPECT_EQ(serial.values, g.values);
}

TEST(Contour, InvalidAxes) {
  const auto sys = load("first_order");
  Slice s;
  s.index_b = 1;
  EXPECT_THROW(contour_grid(identity_storage(1), sys, s, -1, 1, 5), std::invalid_argument);
  s.index_b = 0;
  s.copy_b = 0;
  EXPECT_THROW(contour_grid(identity_storage(1), sys, s, -1, 1, 5), std::invalid_argument);
  s.copy_b = 1;
  EXPECT_THROW(contour_grid(identity_storage(1), sys, s, 1, -1, 5), std::invalid_argument);
}

TEST(Contour, CsvLayout) {
  Slice s;
  const auto g = contour_grid(identity_storage(1), load("first_order"), s, 0.0, 1.0, 3);
  const std::string csv = grid_csv(g, {"model_digest abc"});
  EXPECT_EQ(csv.rfind("# slice a=x[0] b=xtilde[0]", 0), 0u);
  EXPECT_NE(csv.find("\n# bounds 0 1 resolution 3\n# model_digest abc\nx,xtilde,S\n"), std::string::npos);
  EXPECT_NE(csv.find("\n1,0,1\n"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4 + 9);
}

TEST(Contour, SymmetricUnderSwapWithSymmetryReduction) {
  const auto sys = load("saturation");
  certify::Options o;
  o.assembly.symmetry_reduction = true;
  o.verify_samples = 500;
  const auto c = certify::incremental_gain_bound(sys, o);
  ASSERT_TRUE(c.feasible());
  const auto g = contour_grid(c.storage, sys, Slice{}, -15, 15, 31);
  for (int r = 0; r < 31; ++r)
    for (int k = 0; k < 31; ++k) EXPECT_NEAR(g.values(r, k), g.values(k, r), 1e-6 * (1 + std::abs(g.values(r, k))));
}
