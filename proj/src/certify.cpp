#include "pwacert/certify.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "pwacert/sdp.hpp"

namespace pwacert {
namespace certify {

namespace {

using lmi::AffineMat;
using lmi::VarKind;

// With sandwich set, sigma1 |dx|^2 <= S <= sigma2 |dx|^2 is sampled too.
void solve_and_verify(Common& cert, const model::PwaSystem& sys, const Options& opt, bool sandwich = false) {
  cert.digest = model::digest(sys);
  cert.common_quadratic = opt.assembly.common_quadratic;
  const auto prog = sdp::to_standard_form(cert.problem);
  const auto sol = sdp::solve(prog, opt.solver);
  auto& si = cert.solver;
  si.backend = sol.backend;
  si.status = conic::to_string(sol.status);
  si.iterations = sol.iterations;
  si.pres = sol.pres;
  si.dres = sol.dres;
  si.objective = sol.objective;
  si.solve_time = sol.solve_time;
  si.message = sol.message;
  si.variables = cert.problem.registry.size();
  si.psd_constraints = static_cast<int>(cert.problem.psd.size());
  si.equalities = cert.problem.equality_count();

  if (sol.status == conic::Status::infeasible) {
    cert.outcome = Outcome::infeasible;
    cert.reason = "no piecewise-quadratic certificate: solver found a dual improving ray";
    if (cert.common_quadratic) cert.reason = "no common quadratic certificate: solver found a dual improving ray";
    return;
  }
  if (sol.status != conic::Status::optimal) {
    cert.outcome = Outcome::solver_failed;
    cert.reason = std::string("solver status ") + conic::to_string(sol.status) + ": " + sol.message;
    return;
  }
  cert.solution = sol.x;
  cert.storage = storage::from_solution(cert.problem, sol.x);
  storage::VerifyOptions vo;
  vo.sample_count = opt.verify_samples;
  vo.seed = opt.seed;
  vo.problem = &cert.problem;
  vo.solution = &cert.solution;
  if (sandwich) {
    const auto& reg = cert.problem.registry;
    vo.sigma1 = sol.x[reg.scalar_coord("sigma1")];
    vo.sigma2 = sol.x[reg.scalar_coord("sigma2")];
  }
  cert.verification = storage::verify_certificate(cert.storage, sys, vo);
  if (cert.verification.pass(opt.tol_cert)) {
    cert.outcome = Outcome::feasible;
    return;
  }
  cert.outcome = Outcome::verification_failed;
  std::ostringstream os;
  const auto& v = cert.verification;
  os << "verification failed: min LMI eigenvalue " << v.min_lmi_eig << " (" << v.worst_lmi << "), equality residual "
     << v.max_equality_residual << ", bound slack " << v.min_bound_slack << ", continuity " << v.continuity_mismatch
     << ", min S " << v.min_S << ", sandwich " << v.sandwich_violation;
  cert.reason = os.str();
}

double coord(const Common& c, const char* name) { return c.solution[c.problem.registry.scalar_coord(name)]; }

nlohmann::json common_json(const Common& c, const char* kind) {
  nlohmann::json j;
  j["kind"] = kind;
  j["model_digest"] = c.digest;
  j["outcome"] = to_string(c.outcome);
  j["reason"] = c.reason;
  j["common_quadratic"] = c.common_quadratic;
  const auto& s = c.solver;
  j["solver"] = {{"backend", s.backend},         {"status", s.status},       {"iterations", s.iterations},
                 {"primal_residual", s.pres},    {"dual_residual", s.dres},  {"objective", s.objective},
                 {"message", s.message},          {"variables", s.variables}, {"psd_constraints", s.psd_constraints},
                 {"equalities", s.equalities}};
  if (c.solution.size()) {
    j["storage"] = storage::to_json(c.storage);
    nlohmann::json vars = nlohmann::json::object();
    const auto& reg = c.problem.registry;
    for (int id = 0; id < static_cast<int>(reg.variables().size()); ++id)
      vars[reg.var(id).name] = model::matrix_json(reg.value(id, c.solution));
    j["variables"] = vars;
    j["verification"] = storage::to_json(c.verification);
  }
  return j;
}

}  // namespace

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::feasible: return "feasible";
    case Outcome::infeasible: return "infeasible";
    case Outcome::verification_failed: return "verification-failed";
    case Outcome::solver_failed: return "solver-failed";
  }
  return "?";
}

std::string non_hurwitz_diagnostic(const model::PwaSystem& sys) {
  std::ostringstream os;
  for (const auto& r : sys.regions) {
    if (model::is_hurwitz(r.A)) continue;
    const double re = r.A.eigenvalues().real().maxCoeff();
    if (os.tellp() > 0) os << "; ";
    os << "non-Hurwitz subsystem " << r.index << " (max real eigenvalue " << re << ")";
  }
  return os.str();
}

GainCertificate incremental_gain_bound(const model::PwaSystem& sys, const Options& opt) {
  GainCertificate c;
  c.problem = lmi::assemble_gain_lmis(sys, opt.assembly);
  solve_and_verify(c, sys, opt);
  if (c.solution.size()) {
    c.gamma = coord(c, "gamma");
    c.eta = std::sqrt(std::max(c.gamma, 0.0));
  }
  return c;
}

StabilityCertificate incremental_stability(const model::PwaSystem& sys, const Options& opt) {
  StabilityCertificate c;
  c.digest = model::digest(sys);
  c.common_quadratic = opt.assembly.common_quadratic;
  if (const auto d = non_hurwitz_diagnostic(sys); !d.empty()) {
    c.outcome = Outcome::infeasible;
    c.reason = d;
    return c;
  }
  c.problem = lmi::assemble_stability_lmis(sys, opt.assembly);
  solve_and_verify(c, sys, opt, true);
  if (c.solution.size()) {
    c.sigma1 = coord(c, "sigma1");
    c.sigma2 = coord(c, "sigma2");
    c.sigma3 = coord(c, "sigma3");
  }
  return c;
}

CombinedCertificate combined_certificate(const model::PwaSystem& sys, const Options& opt) {
  CombinedCertificate c;
  c.digest = model::digest(sys);
  c.common_quadratic = opt.assembly.common_quadratic;
  if (const auto d = non_hurwitz_diagnostic(sys); !d.empty()) {
    c.outcome = Outcome::infeasible;
    c.reason = d;
    return c;
  }
  c.problem = lmi::assemble_combined_lmis(sys, opt.assembly);
  solve_and_verify(c, sys, opt, true);
  if (c.solution.size()) {
    c.gamma = coord(c, "gamma");
    c.eta = std::sqrt(std::max(c.gamma, 0.0));
    c.sigma1 = coord(c, "sigma1");
    c.sigma2 = coord(c, "sigma2");
    c.sigma3 = coord(c, "sigma3");
  }
  return c;
}

double hinf_norm(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& D, double rel_tol,
                 const conic::Settings& s) {
  if (!model::is_hurwitz(A)) return std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(A.rows());
  const int p = static_cast<int>(B.cols());
  const double dnorm = D.size() ? D.operatorNorm() : 0.0;

  // Phase I: max t s.t. -BRL(g) >= t I, P >= 0, t <= 1. Strictly feasible iff t > 0.
  auto feasible = [&](double g) {
    lmi::LmiProblem prob;
    auto& reg = prob.registry;
    const AffineMat P = reg.expr(reg.add("P", VarKind::symmetric, n));
    const AffineMat t = reg.expr(reg.add("t", VarKind::scalar, 1));
    const MatrixXd Ip = MatrixXd::Identity(p, p);
    const AffineMat tl = A.transpose() * P + P * A + C.transpose() * C;
    const AffineMat tr = P * B + C.transpose() * D;
    const AffineMat br = AffineMat(D.transpose() * D - g * g * Ip);
    const AffineMat brl = AffineMat::blocks({{tl, tr}, {tr.transpose(), br}});
    AffineMat tI = AffineMat::zero(n + p, n + p);
    tI.add_term(reg.scalar_coord("t"), MatrixXd::Identity(n + p, n + p));
    prob.psd.push_back({"P >= 0", P, {}});
    prob.psd.push_back({"-BRL >= tI", -brl - tI, {}});
    prob.psd.push_back({"t <= 1", AffineMat(MatrixXd::Ones(1, 1)) - t, {}});
    prob.objective = VectorXd::Zero(reg.size());
    prob.objective[reg.scalar_coord("t")] = -1.0;
    prob.n = n;
    const auto sol = sdp::solve(sdp::to_standard_form(prob), s);
    return sol.status == conic::Status::optimal && sol.x[reg.scalar_coord("t")] > 1e-7;
  };

  double lo = dnorm;
  double hi = std::max(1.0, 2.0 * dnorm);
  for (int k = 0; k < 80 && !feasible(hi); ++k) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      hi = mid;
    else
      lo = mid;
  }
  return lo;
}

double hinf_lower_bound(const model::PwaSystem& sys, double rel_tol) {
  double worst = 0.0;
  for (const auto& r : sys.regions) worst = std::max(worst, hinf_norm(r.A, r.B, r.C, sys.D, rel_tol));
  return worst;
}

nlohmann::json to_json(const GainCertificate& c) {
  auto j = common_json(c, "gain");
  if (c.solution.size()) {
    j["gamma"] = c.gamma;
    j["eta"] = c.eta;
  }
  return j;
}

nlohmann::json to_json(const StabilityCertificate& c) {
  auto j = common_json(c, "stability");
  if (c.solution.size()) {
    j["sigma1"] = c.sigma1;
    j["sigma2"] = c.sigma2;
    j["sigma3"] = c.sigma3;
    j["decay_rate_bound"] = c.decay_rate_bound();
    j["overshoot_bound"] = c.overshoot_bound();
  }
  return j;
}

nlohmann::json to_json(const CombinedCertificate& c) {
  auto j = common_json(c, "combined");
  if (c.solution.size()) {
    j["gamma"] = c.gamma;
    j["eta"] = c.eta;
    j["sigma1"] = c.sigma1;
    j["sigma2"] = c.sigma2;
    j["sigma3"] = c.sigma3;
    j["decay_rate_bound"] = c.decay_rate_bound();
    j["overshoot_bound"] = c.overshoot_bound();
  }
  return j;
}

}  // namespace certify
}  // namespace pwacert
