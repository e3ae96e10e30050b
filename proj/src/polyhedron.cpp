#include "pwacert/polyhedron.hpp"

#include <random>

#include "pwacert/conic.hpp"

namespace pwacert {
namespace poly {

namespace {

conic::Settings lp_settings() {
  conic::Settings s;
  s.parallel = false;
  return s;
}

// Gx + g >= 0 and |x| <= box as orthant rows of the conic form over (x, extra).
void box_rows(const Polyhedron& P, double box, int extra, MatrixXd& G, VectorXd& h) {
  const int n = P.dim();
  const int r = static_cast<int>(P.G.rows());
  G = MatrixXd::Zero(r + 2 * n, n + extra);
  h = VectorXd::Zero(r + 2 * n);
  G.topLeftCorner(r, n) = -P.G;
  h.head(r) = P.g;
  for (int k = 0; k < n; ++k) {
    G(r + 2 * k, k) = 1.0;
    h[r + 2 * k] = box;
    G(r + 2 * k + 1, k) = -1.0;
    h[r + 2 * k + 1] = box;
  }
}

VectorXd polish(const Polyhedron& P, const VectorXd& x) {
  const VectorXd slack = P.G * x + P.g;
  const double tol = 1e-6 * (1.0 + x.norm());
  std::vector<int> act;
  for (int r = 0; r < slack.size(); ++r)
    if (std::abs(slack[r]) <= tol && P.G.row(r).norm() > 0.0) act.push_back(r);
  if (act.empty()) return x;
  MatrixXd Ga(act.size(), P.dim());
  VectorXd ga(act.size());
  for (size_t q = 0; q < act.size(); ++q) {
    Ga.row(q) = P.G.row(act[q]);
    ga[q] = P.g[act[q]];
  }
  VectorXd y = x - Ga.completeOrthogonalDecomposition().solve(Ga * x + ga);
  if ((P.G * y + P.g).minCoeff() >= -1e-12 * (1.0 + y.norm())) return y;
  return x;
}

}  // namespace

Polyhedron Polyhedron::intersect(const Polyhedron& o) const {
  Polyhedron out;
  out.G.resize(G.rows() + o.G.rows(), G.cols());
  out.G << G, o.G;
  out.g.resize(g.size() + o.g.size());
  out.g << g, o.g;
  return out;
}

bool Polyhedron::contains(const VectorXd& x, double slack) const {
  if (G.rows() == 0) return true;
  return (G * x + g).minCoeff() >= -slack;
}

Margin chebyshev_margin(const Polyhedron& P, double box) {
  const int n = P.dim();
  Polyhedron N = P;
  for (int r = 0; r < N.G.rows(); ++r) {
    const double nr = std::sqrt(N.G.row(r).squaredNorm() + N.g[r] * N.g[r]);
    if (nr > 0.0) {
      N.G.row(r) /= nr;
      N.g[r] /= nr;
    }
  }
  MatrixXd G;
  VectorXd h;
  box_rows(N, box, 1, G, h);
  const int r = static_cast<int>(N.G.rows());
  for (int q = 0; q < r; ++q) G(q, n) = 1.0;
  // t <= 1
  MatrixXd G2(G.rows() + 1, G.cols());
  G2 << G, MatrixXd::Zero(1, G.cols());
  G2(G.rows(), n) = 1.0;
  VectorXd h2(h.size() + 1);
  h2 << h, 1.0;
  conic::Problem prob;
  prob.c = VectorXd::Zero(n + 1);
  prob.c[n] = -1.0;
  prob.G = G2.sparseView();
  prob.h = h2;
  prob.A = conic::SpMat(0, n + 1);
  prob.b = VectorXd(0);
  prob.cones.l = static_cast<int>(h2.size());
  conic::Result res = conic::solve(prob, lp_settings());
  Margin m;
  if (res.status != conic::Status::optimal) return m;
  m.solved = true;
  m.t = res.x[n];
  m.x = res.x.head(n);
  return m;
}

bool nonempty(const Polyhedron& P, double tol) {
  if (P.G.rows() == 0) return true;
  const Margin m = chebyshev_margin(P);
  return m.solved && m.t >= -tol;
}

bool interior_nonempty(const Polyhedron& P, double tol) {
  if (P.G.rows() == 0) return true;
  const Margin m = chebyshev_margin(P);
  return m.solved && m.t > tol;
}

std::vector<VectorXd> sample_points(const Polyhedron& P, int count, std::uint64_t seed, double box) {
  const int n = P.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<VectorXd> vertices;
  const int nv = std::max(2, 2 * n + 2);
  MatrixXd G;
  VectorXd h;
  box_rows(P, box, 0, G, h);
  conic::Problem prob;
  prob.G = G.sparseView();
  prob.h = h;
  prob.A = conic::SpMat(0, n);
  prob.b = VectorXd(0);
  prob.cones.l = static_cast<int>(h.size());
  for (int v = 0; v < nv; ++v) {
    VectorXd d(n);
    for (int k = 0; k < n; ++k) d[k] = nd(rng);
    prob.c = d;
    conic::Result res = conic::solve(prob, lp_settings());
    if (res.status != conic::Status::optimal) continue;
    vertices.push_back(polish(P, res.x));
  }
  std::vector<VectorXd> out;
  if (vertices.empty()) return out;
  std::exponential_distribution<double> ed(1.0);
  for (int s = 0; s < count; ++s) {
    VectorXd w(vertices.size());
    for (int q = 0; q < w.size(); ++q) w[q] = ed(rng);
    w /= w.sum();
    VectorXd x = VectorXd::Zero(n);
    for (size_t q = 0; q < vertices.size(); ++q) x += w[q] * vertices[q];
    out.push_back(x);
  }
  return out;
}

}  // namespace poly
}  // namespace pwacert
