#include "pwacert/augment.hpp"

#include <stdexcept>
#include <string>

namespace pwacert {
namespace augment {

using model::ModelError;

AugmentedCell augmented_cell(const model::PwaSystem& sys, int i, int j) {
  const auto& Ri = sys.region(i);
  const auto& Rj = sys.region(j);
  const int n = sys.n, p = sys.p, m = sys.m;
  const int nb = 2 * n + 1;
  AugmentedCell c;
  c.i = i;
  c.j = j;
  c.Abar = MatrixXd::Zero(nb, nb);
  c.Abar.block(0, 0, n, n) = Ri.A;
  c.Abar.block(n, n, n, n) = Rj.A;
  c.Abar.block(0, 2 * n, n, 1) = Ri.a;
  c.Abar.block(n, 2 * n, n, 1) = Rj.a;
  c.Bbar = MatrixXd::Zero(nb, 2 * p);
  c.Bbar.block(0, 0, n, p) = Ri.B;
  c.Bbar.block(n, p, n, p) = Rj.B;
  c.Cbar = MatrixXd::Zero(m, nb);
  c.Cbar.block(0, 0, m, n) = Ri.C;
  c.Cbar.block(0, n, m, n) = -Rj.C;
  c.Cbar.col(2 * n) = Ri.c - Rj.c;
  c.Dbar.resize(m, 2 * p);
  c.Dbar << sys.D, -sys.D;
  c.Fbar = MatrixXd::Zero(nb, p);
  c.Fbar.topRows(n) = Ri.B;
  c.Fbar.middleRows(n, n) = Rj.B;
  const int ri = static_cast<int>(Ri.G.rows()), rj = static_cast<int>(Rj.G.rows());
  c.Gbar = MatrixXd::Zero(ri + rj, nb);
  c.Gbar.block(0, 0, ri, n) = Ri.G;
  c.Gbar.block(0, 2 * n, ri, 1) = Ri.g;
  c.Gbar.block(ri, n, rj, n) = Rj.G;
  c.Gbar.block(ri, 2 * n, rj, 1) = Rj.g;
  return c;
}

MatrixXd lift_diagonal(const MatrixXd& P) {
  if (P.rows() != P.cols() || (P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, P.norm()))
    throw std::invalid_argument("lift_diagonal: input must be symmetric");
  const long n = P.rows();
  MatrixXd L = MatrixXd::Zero(2 * n + 1, 2 * n + 1);
  L.block(0, 0, n, n) = P;
  L.block(0, n, n, n) = -P;
  L.block(n, 0, n, n) = -P;
  L.block(n, n, n, n) = P;
  return L;
}

MatrixXd jbar(int n) { return lift_diagonal(MatrixXd::Identity(n, n)); }

MatrixXd ibar(int p) {
  MatrixXd I = MatrixXd::Identity(p, p);
  MatrixXd out(2 * p, 2 * p);
  out << I, -I, -I, I;
  return out;
}

MatrixXd swap_permutation(int n) {
  MatrixXd Pi = MatrixXd::Zero(2 * n + 1, 2 * n + 1);
  Pi.block(0, n, n, n).setIdentity();
  Pi.block(n, 0, n, n).setIdentity();
  Pi(2 * n, 2 * n) = 1.0;
  return Pi;
}

VectorXd stack_state(const VectorXd& x, const VectorXd& xt) {
  VectorXd xb(x.size() + xt.size() + 1);
  xb << x, xt, 1.0;
  return xb;
}

MatrixXd boundary_matrix(const model::PwaSystem& sys, Cell a, Cell b) {
  if (a == b) throw ModelError("boundary_matrix: cells must differ");
  const int n = sys.n, nb = 2 * n + 1;
  std::vector<MatrixXd> blocks;
  if (a.first != b.first) {
    const auto* bd = sys.boundary(a.first, b.first);
    if (!bd)
      throw ModelError("missing boundary declaration between regions " + std::to_string(a.first) + " and " +
                       std::to_string(b.first));
    MatrixXd r = MatrixXd::Zero(bd->E.rows(), nb);
    r.leftCols(n) = bd->E;
    r.col(2 * n) = bd->e;
    blocks.push_back(r);
  }
  if (a.second != b.second) {
    const auto* bd = sys.boundary(a.second, b.second);
    if (!bd)
      throw ModelError("missing boundary declaration between regions " + std::to_string(a.second) + " and " +
                       std::to_string(b.second));
    MatrixXd r = MatrixXd::Zero(bd->E.rows(), nb);
    r.middleCols(n, n) = bd->E;
    r.col(2 * n) = bd->e;
    blocks.push_back(r);
  }
  long rows = 0;
  for (const auto& bl : blocks) rows += bl.rows();
  MatrixXd E(rows, nb);
  long r0 = 0;
  for (const auto& bl : blocks) {
    E.middleRows(r0, bl.rows()) = bl;
    r0 += bl.rows();
  }
  return E;
}

std::vector<std::vector<bool>> region_touch(const model::PwaSystem& sys) {
  const int N = sys.N();
  std::vector<std::vector<bool>> t(N + 1, std::vector<bool>(N + 1, false));
  for (int i = 1; i <= N; ++i) {
    t[i][i] = true;
    for (int k = i + 1; k <= N; ++k) {
      const bool ne = poly::nonempty(sys.region(i).set().intersect(sys.region(k).set()));
      t[i][k] = t[k][i] = ne;
    }
  }
  return t;
}

CellPairAdjacency augmented_adjacency(const model::PwaSystem& sys) {
  const int N = sys.N();
  const auto touch = region_touch(sys);
  std::vector<Cell> cells;
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j) cells.emplace_back(i, j);
  CellPairAdjacency adj;
  for (size_t a = 0; a < cells.size(); ++a)
    for (size_t b = a + 1; b < cells.size(); ++b) {
      const Cell ca = cells[a], cb = cells[b];
      if (!touch[ca.first][cb.first] || !touch[ca.second][cb.second]) continue;
      adj.pairs.push_back({ca, cb, boundary_matrix(sys, ca, cb)});
    }
  return adj;
}

std::vector<VectorXd> sample_intersection(const model::PwaSystem& sys, Cell a, Cell b, int count, unsigned seed,
                                          double box) {
  const auto X = sys.region(a.first).set().intersect(sys.region(b.first).set());
  const auto Xt = sys.region(a.second).set().intersect(sys.region(b.second).set());
  const auto xs = poly::sample_points(X, count, seed, box);
  const auto ys = poly::sample_points(Xt, count, seed + 7919u, box);
  std::vector<VectorXd> out;
  for (size_t q = 0; q < xs.size() && q < ys.size(); ++q) out.push_back(stack_state(xs[q], ys[q]));
  return out;
}

}  // namespace augment
}  // namespace pwacert
