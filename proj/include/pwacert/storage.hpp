#ifndef PWACERT_STORAGE_HPP
#define PWACERT_STORAGE_HPP

#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pwacert/augment.hpp"
#include "pwacert/lmi.hpp"
#include "pwacert/model.hpp"

namespace pwacert {
namespace storage {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using augment::Cell;

constexpr double kEpsMem = 1e-9;
constexpr double kEpsEval = 1e-6;

class NoCellFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// S(x, x~) = (x - x~)' P_i (x - x~) on diagonal cells, xbar' Pbar_ij xbar
// on the others.
struct StorageFunction {
  int n = 0;
  int N = 0;
  std::map<int, MatrixXd> P;
  std::map<Cell, MatrixXd> Pbar;  // off-diagonal cells only

  MatrixXd cell_matrix(Cell c) const;
};

StorageFunction from_solution(const lmi::LmiProblem& prob, const VectorXd& x);

Cell locate_cell(const model::PwaSystem& sys, const VectorXd& x, const VectorXd& xt);
double evaluate(const StorageFunction& Sf, const model::PwaSystem& sys, const VectorXd& x, const VectorXd& xt);
double evaluate_in(const StorageFunction& Sf, Cell c, const VectorXd& x, const VectorXd& xt);

nlohmann::json to_json(const StorageFunction& Sf);
StorageFunction from_json(const nlohmann::json& j);

// Sampled trajectory pair. iu[k], iy[k] integrate |u - u~|^2 and |y - y~|^2
// over [t[k], t[k+1]].
struct PairSamples {
  std::vector<double> t;
  std::vector<VectorXd> x, xt;
  std::vector<double> iu, iy;
};

// max over checkpoints of S(t_k) - S(t_0) - int_0^t_k (eta^2 |du|^2 - |dy|^2).
double dissipation_violation(const StorageFunction& Sf, const model::PwaSystem& sys, double eta,
                             const PairSamples& pair);

struct VerifyOptions {
  int sample_count = 10000;
  unsigned seed = 7;
  double box = 50.0;
  const lmi::LmiProblem* problem = nullptr;  // with the solution below
  const VectorXd* solution = nullptr;
  double eta = -1.0;
  const std::vector<PairSamples>* pairs = nullptr;
  // Stability sandwich sigma1 |dx|^2 <= S <= sigma2 |dx|^2, checked when > 0.
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};

struct VerifyReport {
  double continuity_mismatch = 0.0;
  int continuity_samples = 0;
  int adjacencies = 0;
  double min_S = std::numeric_limits<double>::infinity();
  double max_diagonal_S = 0.0;  // |S(x, x)|, structurally zero
  double sandwich_violation = 0.0;
  int S_samples = 0;
  double min_lmi_eig = std::numeric_limits<double>::infinity();
  std::string worst_lmi;
  double max_equality_residual = 0.0;
  std::string worst_equality;
  double min_bound_slack = std::numeric_limits<double>::infinity();
  double dissipation_violation = std::numeric_limits<double>::quiet_NaN();
  int dissipation_pairs = 0;

  bool lmi_pass(double tol = kEpsEval) const;
  bool sampled_pass(double tol = kEpsEval) const;
  bool pass(double tol = kEpsEval) const { return lmi_pass(tol) && sampled_pass(tol); }
};

VerifyReport verify_certificate(const StorageFunction& Sf, const model::PwaSystem& sys, const VerifyOptions& opt = {});
nlohmann::json to_json(const VerifyReport& r);

// Two-coordinate slice: copy 0 is x, copy 1 is x~. Other coordinates are
// taken from the base point.
struct Slice {
  int copy_a = 0, index_a = 0;
  int copy_b = 1, index_b = 0;
  VectorXd x_base, xt_base;
};

struct Grid {
  Slice slice;
  VectorXd xs, ys;
  MatrixXd values;  // values(r, c) at (xs[c], ys[r]); NaN outside the partition
};

Grid contour_grid(const StorageFunction& Sf, const model::PwaSystem& sys, const Slice& slice, double lo, double hi,
                  int resolution, bool parallel = true);
std::string grid_csv(const Grid& g, const std::vector<std::string>& extra_header = {});

}  // namespace storage
}  // namespace pwacert

#endif
