#include "pwacert/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <sstream>

namespace pwacert {
namespace sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd field(const model::Region& r, const VectorXd& x, const VectorXd& u) { return r.A * x + r.a + r.B * u; }

VectorXd output(const model::PwaSystem& sys, const model::Region& r, const VectorXd& x, const VectorXd& u) {
  return r.C * x + r.c + sys.D * u;
}

double row_margin(const model::Region& r, const VectorXd& x) {
  if (r.G.rows() == 0) return kInf;
  return (r.G * x + r.g).minCoeff();
}

struct Stepper {
  const model::PwaSystem& sys;
  const InputSignal& u;

  // One RK4 step of length h from (t, x) under region r's dynamics. Table
  // inputs are constant over the step by construction of the step sizes.
  VectorXd step(const model::Region& r, double t, const VectorXd& x, double h) const {
    VectorXd u0, um, u1;
    if (u.kind == InputSignal::Kind::table) {
      u0 = um = u1 = u(t + 0.5 * h);
    } else {
      u0 = u(t);
      um = u(t + 0.5 * h);
      u1 = u(t + h);
    }
    const VectorXd k1 = field(r, x, u0);
    const VectorXd k2 = field(r, x + 0.5 * h * k1, um);
    const VectorXd k3 = field(r, x + 0.5 * h * k2, um);
    const VectorXd k4 = field(r, x + h * k3, u1);
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

// Segment k with times[k] <= t < times[k+1] (right) or times[k] < t <= times[k+1] (left).
int segment(const Trajectory& tr, double t, bool left) {
  const auto& ts = tr.times;
  const int last = static_cast<int>(ts.size()) - 2;
  if (last < 0) return 0;
  auto it = left ? std::lower_bound(ts.begin(), ts.end(), t) : std::upper_bound(ts.begin(), ts.end(), t);
  int k = static_cast<int>(it - ts.begin()) - 1;
  return std::clamp(k, 0, last);
}

VectorXd hermite(const model::PwaSystem& sys, const Trajectory& tr, const InputSignal& u, int k, double t) {
  if (tr.times.size() < 2) return tr.states[0];
  const double t0 = tr.times[k], t1 = tr.times[k + 1];
  const double h = t1 - t0;
  if (!(h > 0.0)) return tr.states[k];
  const auto& r = sys.region(tr.regions[k]);
  const VectorXd& x0 = tr.states[k];
  const VectorXd& x1 = tr.states[k + 1];
  const VectorXd f0 = field(r, x0, u(t0));
  const VectorXd f1 = field(r, x1, u.left(t1));
  const double s = std::clamp((t - t0) / h, 0.0, 1.0);
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * h * f0 + (-2 * s3 + 3 * s2) * x1 + (s3 - s2) * h * f1;
}

std::vector<double> merge_times(const Trajectory& a, const Trajectory& b, double T) {
  std::vector<double> m;
  m.reserve(a.times.size() + b.times.size());
  std::merge(a.times.begin(), a.times.end(), b.times.begin(), b.times.end(), std::back_inserter(m));
  const double tol = 1e-12 * std::max(1.0, T);
  std::vector<double> out;
  out.reserve(m.size());
  for (double t : m)
    if (out.empty() || t - out.back() > tol) out.push_back(t);
  return out;
}

// State and output of one run at t, from the right (the segment starting at
// t) or from the left.
struct Probe {
  const model::PwaSystem& sys;
  const Trajectory& tr;
  const InputSignal& u;

  VectorXd state(double t) const { return hermite(sys, tr, u, segment(tr, t, false), t); }
  VectorXd out(double t, const VectorXd& x, bool left) const {
    const int k = segment(tr, t, left);
    const auto& r = sys.region(tr.regions[k]);
    return output(sys, r, x, left ? u.left(t) : u(t));
  }
};

struct Pair {
  std::vector<double> t;
  std::vector<VectorXd> x, xt;
  std::vector<double> iu, iy;
};

Pair run_pair(const model::PwaSystem& sys, const VectorXd& x0, const VectorXd& xt0, const InputSignal& u,
              const InputSignal& ut, double T, double dt, const SimOptions& opt) {
  const Trajectory a = simulate(sys, x0, u, T, dt, opt);
  const Trajectory b = simulate(sys, xt0, ut, T, dt, opt);
  const Probe pa{sys, a, u}, pb{sys, b, ut};
  Pair p;
  p.t = merge_times(a, b, T);
  for (double t : p.t) {
    p.x.push_back(pa.state(t));
    p.xt.push_back(pb.state(t));
  }
  for (size_t k = 0; k + 1 < p.t.size(); ++k) {
    const double t0 = p.t[k], t1 = p.t[k + 1], h = t1 - t0;
    const double du0 = (u(t0) - ut(t0)).squaredNorm();
    const double du1 = (u.left(t1) - ut.left(t1)).squaredNorm();
    const double dy0 = (pa.out(t0, p.x[k], false) - pb.out(t0, p.xt[k], false)).squaredNorm();
    const double dy1 = (pa.out(t1, p.x[k + 1], true) - pb.out(t1, p.xt[k + 1], true)).squaredNorm();
    p.iu.push_back(0.5 * h * (du0 + du1));
    p.iy.push_back(0.5 * h * (dy0 + dy1));
  }
  return p;
}

}  // namespace

InputSignal InputSignal::zero(int p) {
  InputSignal s;
  s.kind = Kind::zero;
  s.p = p;
  return s;
}

InputSignal InputSignal::constant(const VectorXd& v) {
  InputSignal s;
  s.kind = Kind::constant;
  s.p = static_cast<int>(v.size());
  s.offset = v;
  return s;
}

InputSignal InputSignal::sinusoid(const VectorXd& amplitude, double omega, const VectorXd& offset) {
  if (amplitude.size() != offset.size()) throw std::invalid_argument("sinusoid amplitude and offset sizes differ");
  InputSignal s;
  s.kind = Kind::sinusoid;
  s.p = static_cast<int>(amplitude.size());
  s.amplitude = amplitude;
  s.offset = offset;
  s.omega = omega;
  return s;
}

InputSignal InputSignal::table(const std::vector<double>& times, const std::vector<VectorXd>& values) {
  if (times.empty() || times.size() != values.size()) throw std::invalid_argument("table needs matching times and values");
  for (size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw std::invalid_argument("table times must be strictly increasing");
  for (const auto& v : values)
    if (v.size() != values[0].size()) throw std::invalid_argument("table values differ in size");
  InputSignal s;
  s.kind = Kind::table;
  s.p = static_cast<int>(values[0].size());
  s.times = times;
  s.values = values;
  return s;
}

VectorXd InputSignal::operator()(double t) const {
  switch (kind) {
    case Kind::zero: return VectorXd::Zero(p);
    case Kind::constant: return offset;
    case Kind::sinusoid: return amplitude * std::sin(omega * t) + offset;
    case Kind::table: {
      auto it = std::upper_bound(times.begin(), times.end(), t);
      const int k = std::max(0, static_cast<int>(it - times.begin()) - 1);
      return values[k];
    }
  }
  return VectorXd::Zero(p);
}

VectorXd InputSignal::left(double t) const {
  if (kind != Kind::table) return (*this)(t);
  auto it = std::lower_bound(times.begin(), times.end(), t);
  const int k = std::max(0, static_cast<int>(it - times.begin()) - 1);
  return values[k];
}

double InputSignal::next_break(double t) const {
  if (kind != Kind::table) return kInf;
  auto it = std::upper_bound(times.begin(), times.end(), t);
  return it == times.end() ? kInf : *it;
}

int find_region(const model::PwaSystem& sys, const VectorXd& x, double slack) {
  for (const auto& r : sys.regions)
    if (r.contains(x, slack)) return r.index;
  return 0;
}

Trajectory simulate(const model::PwaSystem& sys, const VectorXd& x0, const InputSignal& u, double T, double dt,
                    const SimOptions& opt) {
  if (x0.size() != sys.n) throw std::invalid_argument("x0 has the wrong dimension");
  if (u.p != sys.p) throw std::invalid_argument("input has the wrong dimension");
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
  Trajectory tr;
  if (opt.check_continuity) {
    for (const auto& c : model::check_continuity(sys)) {
      if (c.pass) continue;
      std::ostringstream os;
      os << "discontinuous vector field across boundary " << c.i << "|" << c.j << " (residual " << c.residual
         << (c.same_B ? "" : ", B differs") << "); trajectories may not be unique";
      tr.warnings.push_back(os.str());
    }
  }
  int r = find_region(sys, x0);
  if (r == 0) throw SimError("initial state outside the partition");

  const Stepper st{sys, u};
  auto record = [&](double t, const VectorXd& x, int reg) {
    tr.times.push_back(t);
    tr.states.push_back(x);
    tr.outputs.push_back(output(sys, sys.region(reg), x, u(t)));
    tr.regions.push_back(reg);
  };
  double t = 0.0;
  VectorXd x = x0;
  record(t, x, r);
  long k = 0;
  std::deque<double> window;
  const double tend = T * (1.0 - 1e-14);
  while (t < tend) {
    const double grid = std::min(T, (k + 1) * dt);
    const double target = std::min(grid, u.next_break(t));
    const double h = target - t;
    const auto& reg = sys.region(r);
    const VectorXd x1 = st.step(reg, t, x, h);
    const double eps = 1e-10 * (1.0 + x1.lpNorm<Eigen::Infinity>());
    if (row_margin(reg, x1) >= -eps) {
      t = target;
      x = x1;
      if (target == grid) ++k;
      record(t, x, r);
      continue;
    }
    double lo = 0.0, hi = h;
    while (hi - lo > opt.bisect_rel * dt) {
      const double mid = 0.5 * (lo + hi);
      if (row_margin(reg, st.step(reg, t, x, mid)) < -eps)
        hi = mid;
      else
        lo = mid;
    }
    const double tc = t + hi;
    const VectorXd xc = st.step(reg, t, x, hi);
    int next = 0;
    for (const auto& o : sys.regions)
      if (o.index != r && o.contains(xc, 1e-9 * (1.0 + xc.lpNorm<Eigen::Infinity>()))) {
        next = o.index;
        break;
      }
    if (next == 0) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "trajectory escaped the partition at t = %.9g", tc);
      throw SimError(buf);
    }
    if (!tr.events.empty() && tc - tr.events.back().time < opt.dwell_min) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "Zeno guard: switches %d->%d closer than %g s at t = %.9g", r, next, opt.dwell_min,
                    tc);
      throw SimError(buf);
    }
    window.push_back(tc);
    while (!window.empty() && window.front() <= tc - 1.0) window.pop_front();
    if (static_cast<int>(window.size()) > opt.max_switches) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "Zeno guard: more than %d switches within 1 s at t = %.9g", opt.max_switches, tc);
      throw SimError(buf);
    }
    tr.events.push_back({tc, r, next});
    t = tc;
    x = xc;
    r = next;
    record(t, x, r);
  }
  return tr;
}

VectorXd state_at(const model::PwaSystem& sys, const Trajectory& tr, const InputSignal& u, double t) {
  return hermite(sys, tr, u, segment(tr, t, false), t);
}

Quotient gain_quotient(const model::PwaSystem& sys, const VectorXd& x0, const InputSignal& u, const InputSignal& ut,
                       double T, double dt, const SimOptions& opt) {
  const Pair p = run_pair(sys, x0, x0, u, ut, T, dt, opt);
  Quotient q;
  for (double v : p.iu) q.input_energy += v;
  for (double v : p.iy) q.output_energy += v;
  if (!(q.input_energy > 0.0)) throw SimError("zero input-difference energy");
  q.ratio = q.output_energy / q.input_energy;
  q.sqrt_ratio = std::sqrt(q.ratio);
  return q;
}

storage::PairSamples pair_samples(const model::PwaSystem& sys, const VectorXd& x0, const VectorXd& xt0,
                                  const InputSignal& u, const InputSignal& ut, double T, double dt,
                                  const SimOptions& opt) {
  Pair p = run_pair(sys, x0, xt0, u, ut, T, dt, opt);
  storage::PairSamples s;
  s.t = std::move(p.t);
  s.x = std::move(p.x);
  s.xt = std::move(p.xt);
  s.iu = std::move(p.iu);
  s.iy = std::move(p.iy);
  return s;
}

DecayReport decay_check(const model::PwaSystem& sys, double overshoot, double rate, const VectorXd& x0,
                        const VectorXd& xt0, const InputSignal& u, double T, double dt, const SimOptions& opt) {
  DecayReport rep;
  const double d0 = (x0 - xt0).norm();
  if (d0 == 0.0) {
    rep.trivial = true;
    return rep;
  }
  const Pair p = run_pair(sys, x0, xt0, u, u, T, dt, opt);
  for (size_t k = 0; k < p.t.size(); ++k) {
    const double bound = overshoot * std::exp(-rate * p.t[k]) * d0;
    const double ratio = (p.x[k] - p.xt[k]).norm() / bound;
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.worst_time = p.t[k];
    }
    ++rep.samples;
  }
  rep.pass = rep.max_ratio <= 1.0 + kDecayTol;
  return rep;
}

DecayReport decay_check(const model::PwaSystem& sys, const certify::StabilityCertificate& cert, const VectorXd& x0,
                        const VectorXd& xt0, const InputSignal& u, double T, double dt, const SimOptions& opt) {
  if (!cert.feasible()) throw std::invalid_argument("decay_check needs a verified stability certificate");
  return decay_check(sys, cert.overshoot_bound(), cert.decay_rate_bound(), x0, xt0, u, T, dt, opt);
}

bool equilibrium(const model::PwaSystem& sys, const VectorXd& u, VectorXd& x) {
  for (const auto& r : sys.regions) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(r.A);
    if (!lu.isInvertible()) continue;
    const VectorXd xe = lu.solve(-(r.a + r.B * u));
    if (r.contains(xe, 1e-9)) {
      x = xe;
      return true;
    }
  }
  return false;
}

std::string trajectory_csv(const model::PwaSystem& sys, const Trajectory& tr,
                           const std::vector<std::string>& extra_header) {
  std::ostringstream os;
  char buf[128];
  for (const auto& h : extra_header) os << "# " << h << "\n";
  for (const auto& w : tr.warnings) os << "# warning " << w << "\n";
  for (const auto& e : tr.events) {
    std::snprintf(buf, sizeof buf, "# event %.12g %d %d", e.time, e.from, e.to);
    os << buf << "\n";
  }
  os << "t";
  for (int i = 1; i <= sys.n; ++i) os << ",x" << i;
  for (int i = 1; i <= sys.m; ++i) os << ",y" << i;
  os << ",region\n";
  for (size_t k = 0; k < tr.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", tr.times[k]);
    os << buf;
    for (int i = 0; i < sys.n; ++i) {
      std::snprintf(buf, sizeof buf, ",%.12g", tr.states[k][i]);
      os << buf;
    }
    for (int i = 0; i < sys.m; ++i) {
      std::snprintf(buf, sizeof buf, ",%.12g", tr.outputs[k][i]);
      os << buf;
    }
    os << "," << tr.regions[k] << "\n";
  }
  return os.str();
}

}  // namespace sim
}  // namespace pwacert
