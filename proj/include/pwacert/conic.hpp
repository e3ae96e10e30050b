#ifndef PWACERT_CONIC_HPP
#define PWACERT_CONIC_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace pwacert {
namespace conic {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// Cone layout of a slack vector: l orthant entries, then one svec block per
// PSD order in `s`.
struct Cones {
  int l = 0;
  std::vector<int> s;

  int dim() const;
  int degree() const;
};

inline int svec_dim(int k) { return k * (k + 1) / 2; }

// Lower triangle, column-major, off-diagonals scaled by sqrt(2) so that the
// Euclidean product of two svecs is the trace product of the matrices.
VectorXd svec(const MatrixXd& M);
MatrixXd smat(const VectorXd& v, int k);
int svec_index(int i, int j, int k);

// minimize c'x  s.t.  Gx + s = h, s in K;  Ax = b
struct Problem {
  VectorXd c;
  SpMat G;
  VectorXd h;
  SpMat A;
  VectorXd b;
  Cones cones;
};

struct Settings {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  double inftol = 1e-7;
  double reduced_tol = 1e-6;  // accepted when the iteration stalls
  int max_iter = 120;
  bool presolve = true;
  bool parallel = true;
  int verbose = 0;
};

enum class Status { optimal, infeasible, unbounded, numerical_failure };

const char* to_string(Status s);

struct Result {
  Status status = Status::numerical_failure;
  VectorXd x;
  VectorXd s;
  VectorXd z;
  double pcost = 0.0;
  double dcost = 0.0;
  double pres = 0.0;
  double dres = 0.0;
  double gap = 0.0;
  int iterations = 0;
  int reduced_vars = 0;
  int removed_directions = 0;
  std::string message;
};

Result solve(const Problem& prob, const Settings& settings = {});

// Smallest eigenvalue-like margin of v in K (min entry / min eigenvalue).
double cone_margin(const VectorXd& v, const Cones& cones);

}  // namespace conic
}  // namespace pwacert

#endif
