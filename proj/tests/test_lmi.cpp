#include <gtest/gtest.h>

#include "pwacert/lmi.hpp"
#include "testing.hpp"

using namespace pwacert::lmi;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int count_kind(const VariableRegistry& reg, const std::string& prefix) {
  int c = 0;
  for (const auto& v : reg.variables())
    if (v.name.rfind(prefix, 0) == 0) ++c;
  return c;
}

}  // namespace

TEST(AffineMat, Arithmetic) {
  VariableRegistry reg;
  const AffineMat X = reg.expr(reg.add("X", VarKind::symmetric, 2));
  const AffineMat t = reg.expr(reg.add("t", VarKind::scalar, 1));
  VectorXd x(4);
  x << 1, 2, 3, 4;  // X = [[1, 2], [2, 3]], t = 4
  MatrixXd Xv(2, 2);
  Xv << 1, 2, 2, 3;
  EXPECT_EQ(X.eval(x), Xv);
  MatrixXd A(2, 2);
  A << 0, 1, -1, 0;
  EXPECT_EQ((A.transpose() * X + X * A).eval(x), A.transpose() * Xv + Xv * A);
  EXPECT_EQ((X * 2.0 - X).eval(x), Xv);
  EXPECT_EQ((X * A).transpose().eval(x), (Xv * A).transpose());
  const AffineMat B = AffineMat::blocks({{X, AffineMat::zero(2, 1)}, {AffineMat::zero(1, 2), t}});
  MatrixXd Bv = MatrixXd::Zero(3, 3);
  Bv.topLeftCorner(2, 2) = Xv;
  Bv(2, 2) = 4;
  EXPECT_EQ(B.eval(x), Bv);
  EXPECT_EQ((X * A).sym().eval(x), 0.5 * (Xv * A + A.transpose() * Xv));
}

TEST(Registry, CoordinateCounts) {
  VariableRegistry reg;
  reg.add("P", VarKind::symmetric, 3);
  reg.add("U", VarKind::multiplier, 4);
  reg.add("L", VarKind::free, 3, 2);
  reg.add("g", VarKind::scalar, 1);
  EXPECT_EQ(reg.size(), 6 + 6 + 6 + 1);
  EXPECT_EQ(reg.nonneg_coords().size(), 6u);
  EXPECT_EQ(reg.scalar_coord("g"), 18);
  EXPECT_EQ(reg.coord_name(7), "U[1]");
  EXPECT_THROW(reg.add("P", VarKind::scalar, 1), std::invalid_argument);
  EXPECT_THROW(reg.scalar_coord("P"), std::invalid_argument);
}

TEST(Registry, MultiplierHasZeroDiagonal) {
  VariableRegistry reg;
  const AffineMat U = reg.expr(reg.add("U", VarKind::multiplier, 3));
  const MatrixXd v = U.eval(VectorXd::Ones(reg.size()));
  EXPECT_TRUE(v.diagonal().isZero());
  EXPECT_EQ(v.sum(), 6.0);
}

TEST(Assembly, GainCountsForDeadzone) {
  const auto sys = load("deadzone");
  const auto prob = assemble_gain_lmis(sys);
  const int N = sys.N();
  EXPECT_EQ(prob.psd.size(), static_cast<size_t>(2 * N + 2 * N * (N - 1)));
  EXPECT_EQ(count_kind(prob.registry, "Pbar_"), N * (N - 1));
  EXPECT_EQ(count_kind(prob.registry, "U_"), N * (N - 1));
  EXPECT_EQ(count_kind(prob.registry, "W_"), N * (N - 1));
  EXPECT_EQ(count_kind(prob.registry, "L_"), 72);
  // multiplier order is r_i + r_j
  const auto& U13 = prob.registry.var(prob.registry.id("U_1_3"));
  EXPECT_EQ(U13.rows, sys.region(1).G.rows() + sys.region(3).G.rows());
  EXPECT_EQ(prob.objective[prob.registry.scalar_coord("gamma")], 1.0);
  EXPECT_FALSE(prob.maximize);
}

TEST(Assembly, StabilityCarriesFbarEqualityAndNormalization) {
  const auto sys = load("saturation");
  const auto prob = assemble_stability_lmis(sys);
  const int N = sys.N();
  EXPECT_EQ(prob.psd.size(), static_cast<size_t>(3 * N + 3 * N * (N - 1)));
  int fbar = 0, norm = 0;
  for (const auto& e : prob.equalities) {
    if (e.label.find(" F = 0") != std::string::npos) ++fbar;
    if (e.label == "sigma2 = 1") ++norm;
  }
  EXPECT_EQ(fbar, N * (N - 1));
  EXPECT_EQ(norm, 1);
  EXPECT_TRUE(prob.maximize);
  EXPECT_EQ(prob.objective[prob.registry.scalar_coord("sigma3")], -1.0);
  EXPECT_EQ(prob.bounds.size(), 3u);
  for (const auto& b : prob.bounds) EXPECT_EQ(b.lower, kEpsPos);
}

TEST(Assembly, CombinedHasGammaAndSigmas) {
  const auto prob = assemble_combined_lmis(load("first_order"));
  for (const char* s : {"gamma", "sigma1", "sigma2", "sigma3"}) EXPECT_TRUE(prob.registry.has(s)) << s;
  EXPECT_EQ(prob.psd.size(), 3u);
}

TEST(Assembly, CommonQuadraticTiesEverything) {
  AssemblyOptions o;
  o.common_quadratic = true;
  const auto prob = assemble_gain_lmis(load("egg"), o);
  EXPECT_TRUE(prob.registry.has("P"));
  EXPECT_EQ(count_kind(prob.registry, "P_"), 0);
  EXPECT_EQ(count_kind(prob.registry, "Pbar_"), 0);
  EXPECT_TRUE(prob.equalities.empty());
}

TEST(Assembly, SymmetryReductionRegistersHalfTheCells) {
  AssemblyOptions o;
  o.symmetry_reduction = true;
  const auto sys = load("saturation");
  const auto prob = assemble_gain_lmis(sys, o);
  EXPECT_EQ(count_kind(prob.registry, "Pbar_"), 3);
  EXPECT_TRUE(prob.registry.has("Pbar_1_2"));
  EXPECT_FALSE(prob.registry.has("Pbar_2_1"));
}

TEST(Assembly, DiagonalCellsUseLiftedP) {
  const auto prob = assemble_gain_lmis(load("saturation"));
  VectorXd x = VectorXd::Random(prob.registry.size());
  const MatrixXd P2 = prob.P.at(2).eval(x);
  const MatrixXd L = prob.Pbar.at({2, 2}).eval(x);
  EXPECT_DOUBLE_EQ(L(0, 0), P2(0, 0));
  EXPECT_DOUBLE_EQ(L(0, 1), -P2(0, 0));
  EXPECT_DOUBLE_EQ(L(2, 2), 0.0);
}

TEST(Assembly, ContinuityEqualitiesAreSymmetric) {
  const auto prob = assemble_gain_lmis(load("saturation"));
  int cont = 0;
  for (const auto& e : prob.equalities)
    if (e.label.rfind("continuity", 0) == 0) {
      ++cont;
      EXPECT_TRUE(e.symmetric);
      EXPECT_EQ(e.count(), 6);
    }
  EXPECT_GT(cont, 0);
}

TEST(Assembly, OffDiagonalGainBlocksCarryTheCongruence) {
  const auto prob = assemble_gain_lmis(load("saturation"));
  int hinted = 0;
  for (const auto& c : prob.psd)
    if (c.congruence.size()) {
      ++hinted;
      EXPECT_EQ(c.congruence.rows(), c.expr.rows());
    }
  EXPECT_EQ(hinted, 6);
  AssemblyOptions o;
  o.congruence_hints = false;
  for (const auto& c : assemble_gain_lmis(load("saturation"), o).psd) EXPECT_EQ(c.congruence.size(), 0);
}

TEST(Assembly, InputCongruenceIsOrthogonal) {
  const MatrixXd T = input_congruence(2, 3);
  ASSERT_EQ(T.rows(), 5 + 6);
  EXPECT_LT((T * T.transpose() - MatrixXd::Identity(11, 11)).norm(), 1e-14);
}

TEST(Assembly, DumpListsEverything) {
  const auto prob = assemble_gain_lmis(load("first_order"));
  const auto j = dump(prob);
  EXPECT_EQ(j["kind"], "gain");
  EXPECT_EQ(j["psd_constraints"].size(), prob.psd.size());
  EXPECT_EQ(j["variables"].size(), prob.registry.variables().size());
}
