#ifndef PWACERT_POLYHEDRON_HPP
#define PWACERT_POLYHEDRON_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace pwacert {
namespace poly {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// {x | Gx + g >= 0}
struct Polyhedron {
  MatrixXd G;
  VectorXd g;

  int dim() const { return static_cast<int>(G.cols()); }
  Polyhedron intersect(const Polyhedron& o) const;
  bool contains(const VectorXd& x, double slack) const;
};

struct Margin {
  bool solved = false;
  double t = 0.0;  // largest normalized slack, capped at 1
  VectorXd x;
};

// max t s.t. each row (normalized by the norm of [G_r g_r]) is >= t, |x| <= box.
Margin chebyshev_margin(const Polyhedron& P, double box = 1e6);

bool nonempty(const Polyhedron& P, double tol = 1e-7);
bool interior_nonempty(const Polyhedron& P, double tol = 1e-7);

// Points of P (inside the box) built from LP vertices under random objectives
// and random convex combinations of them. Active rows are polished to exact
// equality, so samples on lower-dimensional faces stay on them.
std::vector<VectorXd> sample_points(const Polyhedron& P, int count, std::uint64_t seed, double box = 50.0);

}  // namespace poly
}  // namespace pwacert

#endif
