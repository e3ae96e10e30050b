#ifndef PWACERT_SDP_HPP
#define PWACERT_SDP_HPP

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "pwacert/conic.hpp"
#include "pwacert/lmi.hpp"

namespace pwacert {
namespace sdp {

using conic::Status;
using Eigen::VectorXd;

// Variables are the registry coordinates, unchanged. Slack layout: one
// orthant row per scalar bound and per multiplier entry, then one PSD block
// per psd constraint in assembly order.
struct ConicProgram {
  conic::Problem problem;
  std::vector<std::string> cone_labels;
  std::vector<std::string> equality_labels;
  int nvars = 0;
};

struct SdpSolution {
  Status status = Status::numerical_failure;
  VectorXd x;  // present iff optimal
  double objective = 0.0;
  double pres = 0.0;
  double dres = 0.0;
  double solve_time = 0.0;
  int iterations = 0;
  std::string backend;
  std::string message;
};

constexpr double kTolSolve = 1e-8;

ConicProgram to_standard_form(const lmi::LmiProblem& prob);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual conic::Result solve(const conic::Problem& prob, const conic::Settings& s) const = 0;
};

// Reads PWACERT_BACKEND when name is empty; "ipm" is the only backend.
std::unique_ptr<Backend> make_backend(const std::string& name = "");

SdpSolution solve(const ConicProgram& prog, const conic::Settings& settings = {});

// {"cones", "c", "G", "h", "A", "b"} with matrices as [row, col, value] triplets.
nlohmann::json export_triplets(const ConicProgram& prog);

}  // namespace sdp
}  // namespace pwacert

#endif
