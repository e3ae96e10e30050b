#ifndef PWACERT_CERTIFY_HPP
#define PWACERT_CERTIFY_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "pwacert/conic.hpp"
#include "pwacert/lmi.hpp"
#include "pwacert/model.hpp"
#include "pwacert/storage.hpp"

namespace pwacert {
namespace certify {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kTolCert = 1e-6;

struct Options {
  lmi::AssemblyOptions assembly;
  conic::Settings solver;
  int verify_samples = 10000;
  unsigned seed = 7;
  double tol_cert = kTolCert;
};

enum class Outcome { feasible, infeasible, verification_failed, solver_failed };
const char* to_string(Outcome o);

struct SolverInfo {
  std::string backend;
  std::string status;
  int iterations = 0;
  double pres = 0.0;
  double dres = 0.0;
  double objective = 0.0;
  double solve_time = 0.0;  // stdout only, never serialized
  std::string message;
  int variables = 0;
  int psd_constraints = 0;
  int equalities = 0;
};

struct Common {
  Outcome outcome = Outcome::solver_failed;
  std::string reason;
  std::string digest;
  bool common_quadratic = false;
  lmi::LmiProblem problem;
  VectorXd solution;
  storage::StorageFunction storage;
  storage::VerifyReport verification;
  SolverInfo solver;

  bool feasible() const { return outcome == Outcome::feasible; }
};

struct GainCertificate : Common {
  double gamma = 0.0;
  double eta = 0.0;  // sqrt(gamma)
};

struct StabilityCertificate : Common {
  double sigma1 = 0.0, sigma2 = 0.0, sigma3 = 0.0;
  double decay_rate_bound() const { return sigma3 / (2.0 * sigma2); }
  double overshoot_bound() const { return std::sqrt(sigma2 / sigma1); }
};

struct CombinedCertificate : Common {
  double gamma = 0.0, eta = 0.0;
  double sigma1 = 0.0, sigma2 = 0.0, sigma3 = 0.0;
  double decay_rate_bound() const { return sigma3 / (2.0 * sigma2); }
  double overshoot_bound() const { return std::sqrt(sigma2 / sigma1); }
};

GainCertificate incremental_gain_bound(const model::PwaSystem& sys, const Options& opt = {});
StabilityCertificate incremental_stability(const model::PwaSystem& sys, const Options& opt = {});
CombinedCertificate combined_certificate(const model::PwaSystem& sys, const Options& opt = {});

// Empty when every A_i is Hurwitz, else "non-Hurwitz subsystem i (...)".
std::string non_hurwitz_diagnostic(const model::PwaSystem& sys);

// H-infinity norm of (A, B, C, D) by bisection on the bounded-real LMI.
// +inf when A is not Hurwitz. The returned value is the lower bracket end.
double hinf_norm(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& D, double rel_tol = 1e-4,
                 const conic::Settings& s = {});
// max_i of the subsystem norms.
double hinf_lower_bound(const model::PwaSystem& sys, double rel_tol = 1e-4);

nlohmann::json to_json(const GainCertificate& c);
nlohmann::json to_json(const StabilityCertificate& c);
nlohmann::json to_json(const CombinedCertificate& c);

}  // namespace certify
}  // namespace pwacert

#endif
