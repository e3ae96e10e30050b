#ifndef PWACERT_SIM_HPP
#define PWACERT_SIM_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pwacert/certify.hpp"
#include "pwacert/model.hpp"
#include "pwacert/storage.hpp"

namespace pwacert {
namespace sim {

using Eigen::VectorXd;

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InputSignal {
  enum class Kind { zero, constant, sinusoid, table };
  Kind kind = Kind::zero;
  int p = 1;
  VectorXd amplitude, offset;  // sinusoid: amplitude sin(omega t) + offset; constant: offset
  double omega = 0.0;          // rad/s
  std::vector<double> times;   // table: value[k] holds on [times[k], times[k+1])
  std::vector<VectorXd> values;

  static InputSignal zero(int p);
  static InputSignal constant(const VectorXd& v);
  static InputSignal sinusoid(const VectorXd& amplitude, double omega, const VectorXd& offset);
  static InputSignal table(const std::vector<double>& times, const std::vector<VectorXd>& values);

  VectorXd operator()(double t) const;
  // Left limit; differs from operator() only at table breakpoints.
  VectorXd left(double t) const;
  // First table breakpoint strictly after t, or +inf.
  double next_break(double t) const;
};

struct Event {
  double time = 0.0;
  int from = 0;
  int to = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<VectorXd> states;
  std::vector<VectorXd> outputs;
  std::vector<int> regions;  // region active on [times[k], times[k+1])
  std::vector<Event> events;
  std::vector<std::string> warnings;
};

struct SimOptions {
  double dwell_min = 1e-9;  // s
  int max_switches = 10000; // per 1 s window
  double bisect_rel = 1e-10;  // crossing refinement, relative to dt
  bool check_continuity = true;
};

Trajectory simulate(const model::PwaSystem& sys, const VectorXd& x0, const InputSignal& u, double T, double dt,
                    const SimOptions& opt = {});

// Lowest-index region containing x, or 0.
int find_region(const model::PwaSystem& sys, const VectorXd& x, double slack = 1e-9);

// Cubic Hermite interpolation of the state at t, using the active region's
// vector field at the segment ends.
VectorXd state_at(const model::PwaSystem& sys, const Trajectory& tr, const InputSignal& u, double t);

struct Quotient {
  double ratio = 0.0;       // int |y - y~|^2 / int |u - u~|^2
  double sqrt_ratio = 0.0;
  double output_energy = 0.0;
  double input_energy = 0.0;
};

Quotient gain_quotient(const model::PwaSystem& sys, const VectorXd& x0, const InputSignal& u, const InputSignal& ut,
                       double T, double dt, const SimOptions& opt = {});

// Two runs from x0, xt0 on a merged event-refined grid, with per-interval
// trapezoid integrals of |u - u~|^2 and |y - y~|^2.
storage::PairSamples pair_samples(const model::PwaSystem& sys, const VectorXd& x0, const VectorXd& xt0,
                                  const InputSignal& u, const InputSignal& ut, double T, double dt,
                                  const SimOptions& opt = {});

struct DecayReport {
  bool pass = true;
  double max_ratio = 0.0;
  double worst_time = 0.0;
  int samples = 0;
  bool trivial = false;  // x0 == xt0
};

constexpr double kDecayTol = 1e-3;

DecayReport decay_check(const model::PwaSystem& sys, double overshoot, double rate, const VectorXd& x0,
                        const VectorXd& xt0, const InputSignal& u, double T, double dt, const SimOptions& opt = {});
DecayReport decay_check(const model::PwaSystem& sys, const certify::StabilityCertificate& cert, const VectorXd& x0,
                        const VectorXd& xt0, const InputSignal& u, double T, double dt, const SimOptions& opt = {});

// Equilibrium of the region dynamics under constant u, if it lies in that region.
bool equilibrium(const model::PwaSystem& sys, const VectorXd& u, VectorXd& x);

std::string trajectory_csv(const model::PwaSystem& sys, const Trajectory& tr,
                           const std::vector<std::string>& extra_header = {});

}  // namespace sim
}  // namespace pwacert

#endif
