#include "pwacert/storage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pwacert/kernels.hpp"
#include "pwacert/polyhedron.hpp"

namespace pwacert {
namespace storage {

namespace {

MatrixXd matrix_from(const nlohmann::json& j) {
  const int r = static_cast<int>(j.size());
  const int c = r ? static_cast<int>(j[0].size()) : 0;
  MatrixXd M(r, c);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < c; ++b) M(a, b) = j[a][b].get<double>();
  return M;
}

std::string cell_key(Cell c) { return std::to_string(c.first) + "," + std::to_string(c.second); }

double quad(const MatrixXd& M, const VectorXd& v) { return v.dot(M * v); }

double min_eig(const MatrixXd& M) {
  const MatrixXd S = 0.5 * (M + M.transpose());
  if (S.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace

MatrixXd StorageFunction::cell_matrix(Cell c) const {
  if (c.first == c.second) return augment::lift_diagonal(P.at(c.first));
  return Pbar.at(c);
}

StorageFunction from_solution(const lmi::LmiProblem& prob, const VectorXd& x) {
  StorageFunction Sf;
  Sf.n = prob.n;
  Sf.N = static_cast<int>(prob.P.size());
  for (const auto& [i, e] : prob.P) {
    const MatrixXd M = e.eval(x);
    Sf.P[i] = 0.5 * (M + M.transpose());
  }
  for (const auto& [c, e] : prob.Pbar) {
    if (c.first == c.second) continue;
    const MatrixXd M = e.eval(x);
    Sf.Pbar[c] = 0.5 * (M + M.transpose());
  }
  return Sf;
}

Cell locate_cell(const model::PwaSystem& sys, const VectorXd& x, const VectorXd& xt) {
  int i = 0, j = 0;
  for (const auto& r : sys.regions)
    if (r.contains(x, kEpsMem)) {
      i = r.index;
      break;
    }
  for (const auto& r : sys.regions)
    if (r.contains(xt, kEpsMem)) {
      j = r.index;
      break;
    }
  if (i == 0 || j == 0) throw NoCellFound("no cell contains the point pair");
  return {i, j};
}

double evaluate_in(const StorageFunction& Sf, Cell c, const VectorXd& x, const VectorXd& xt) {
  if (c.first == c.second) return quad(Sf.P.at(c.first), x - xt);
  return quad(Sf.Pbar.at(c), augment::stack_state(x, xt));
}

double evaluate(const StorageFunction& Sf, const model::PwaSystem& sys, const VectorXd& x, const VectorXd& xt) {
  return evaluate_in(Sf, locate_cell(sys, x, xt), x, xt);
}

nlohmann::json to_json(const StorageFunction& Sf) {
  nlohmann::json j;
  j["n"] = Sf.n;
  j["N"] = Sf.N;
  j["P"] = nlohmann::json::object();
  for (const auto& [i, M] : Sf.P) j["P"][std::to_string(i)] = model::matrix_json(M);
  j["Pbar"] = nlohmann::json::object();
  for (const auto& [c, M] : Sf.Pbar) j["Pbar"][cell_key(c)] = model::matrix_json(M);
  return j;
}

StorageFunction from_json(const nlohmann::json& j) {
  StorageFunction Sf;
  Sf.n = j.at("n").get<int>();
  Sf.N = j.at("N").get<int>();
  for (const auto& [k, v] : j.at("P").items()) Sf.P[std::stoi(k)] = matrix_from(v);
  for (const auto& [k, v] : j.at("Pbar").items()) {
    const auto comma = k.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("bad cell key " + k);
    Sf.Pbar[{std::stoi(k.substr(0, comma)), std::stoi(k.substr(comma + 1))}] = matrix_from(v);
  }
  for (const auto& [i, M] : Sf.P)
    if (M.rows() != Sf.n || M.cols() != Sf.n) throw std::invalid_argument("P_" + std::to_string(i) + " has wrong size");
  for (const auto& [c, M] : Sf.Pbar)
    if (M.rows() != 2 * Sf.n + 1 || M.cols() != 2 * Sf.n + 1)
      throw std::invalid_argument("Pbar_" + cell_key(c) + " has wrong size");
  return Sf;
}

double dissipation_violation(const StorageFunction& Sf, const model::PwaSystem& sys, double eta,
                             const PairSamples& pair) {
  if (pair.t.empty()) return 0.0;
  const double S0 = evaluate(Sf, sys, pair.x[0], pair.xt[0]);
  double supply = 0.0, worst = -std::numeric_limits<double>::infinity();
  for (size_t k = 1; k < pair.t.size(); ++k) {
    supply += eta * eta * pair.iu[k - 1] - pair.iy[k - 1];
    const double S = evaluate(Sf, sys, pair.x[k], pair.xt[k]);
    worst = std::max(worst, S - S0 - supply);
  }
  return std::max(worst, 0.0);
}

bool VerifyReport::lmi_pass(double tol) const {
  return min_lmi_eig >= -tol && max_equality_residual <= tol && min_bound_slack >= -tol;
}

bool VerifyReport::sampled_pass(double tol) const {
  return continuity_mismatch <= tol && min_S >= -tol && max_diagonal_S == 0.0 && sandwich_violation <= tol;
}

// Sampled quantities are normalized by 1 + |x|^2 + |x~|^2: an LMI slack of
// -tol bounds the quadratic form by -tol |xbar|^2, not by -tol.
VerifyReport verify_certificate(const StorageFunction& Sf, const model::PwaSystem& sys, const VerifyOptions& opt) {
  VerifyReport r;
  const int N = sys.N();

  if (opt.problem && opt.solution) {
    const auto& prob = *opt.problem;
    const VectorXd& x = *opt.solution;
    for (const auto& c : prob.psd) {
      const double e = min_eig(c.expr.eval(x));
      if (e < r.min_lmi_eig) {
        r.min_lmi_eig = e;
        r.worst_lmi = c.label;
      }
    }
    for (const auto& e : prob.equalities) {
      const MatrixXd v = e.expr.eval(x);
      const double res = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
      if (res > r.max_equality_residual) {
        r.max_equality_residual = res;
        r.worst_equality = e.label;
      }
    }
    for (const auto& b : prob.bounds) r.min_bound_slack = std::min(r.min_bound_slack, x[b.coord] - b.lower);
    for (int c : prob.registry.nonneg_coords()) r.min_bound_slack = std::min(r.min_bound_slack, x[c]);
  } else {
    r.min_lmi_eig = 0.0;
    r.min_bound_slack = 0.0;
  }

  const auto adj = augment::augmented_adjacency(sys);
  r.adjacencies = static_cast<int>(adj.pairs.size());
  if (!adj.pairs.empty()) {
    const int per = std::max(1, (opt.sample_count + r.adjacencies - 1) / r.adjacencies);
    unsigned seed = opt.seed;
    for (const auto& a : adj.pairs) {
      const MatrixXd D = Sf.cell_matrix(a.a) - Sf.cell_matrix(a.b);
      for (const auto& xb : augment::sample_intersection(sys, a.a, a.b, per, ++seed, opt.box)) {
        const double scale = 1.0 + xb.head(2 * sys.n).squaredNorm();
        r.continuity_mismatch = std::max(r.continuity_mismatch, std::abs(quad(D, xb)) / scale);
        ++r.continuity_samples;
      }
    }
  }

  const int per_cell = std::max(1, opt.sample_count / std::max(1, N * N));
  std::vector<std::vector<VectorXd>> pts(N + 1);
  for (int i = 1; i <= N; ++i)
    pts[i] = poly::sample_points(sys.region(i).set(), per_cell, opt.seed + 1000 + i, opt.box);
  for (int i = 1; i <= N; ++i) {
    for (const auto& x : pts[i]) {
      const double d = evaluate_in(Sf, {i, i}, x, x);
      r.max_diagonal_S = std::max(r.max_diagonal_S, std::abs(d));
    }
    for (int j = 1; j <= N; ++j) {
      const auto& A = pts[i];
      const auto& B = pts[j];
      if (A.empty() || B.empty()) continue;
      for (int k = 0; k < per_cell; ++k) {
        const VectorXd& x = A[k % A.size()];
        const VectorXd& xt = B[(k * 7 + 3) % B.size()];
        const double S = evaluate_in(Sf, {i, j}, x, xt);
        const double scale = 1.0 + x.squaredNorm() + xt.squaredNorm();
        r.min_S = std::min(r.min_S, S / scale);
        if (opt.sigma1 > 0.0 || opt.sigma2 > 0.0) {
          const double d2 = (x - xt).squaredNorm();
          double v = opt.sigma1 * d2 - S;
          if (opt.sigma2 > 0.0) v = std::max(v, S - opt.sigma2 * d2);
          r.sandwich_violation = std::max(r.sandwich_violation, v / scale);
        }
        ++r.S_samples;
      }
    }
  }

  if (opt.pairs && opt.eta >= 0.0) {
    r.dissipation_violation = 0.0;
    for (const auto& p : *opt.pairs) {
      r.dissipation_violation = std::max(r.dissipation_violation, dissipation_violation(Sf, sys, opt.eta, p));
      ++r.dissipation_pairs;
    }
  }
  return r;
}

nlohmann::json to_json(const VerifyReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j;
  j["min_lmi_eig"] = num(r.min_lmi_eig);
  j["worst_lmi"] = r.worst_lmi;
  j["max_equality_residual"] = r.max_equality_residual;
  j["worst_equality"] = r.worst_equality;
  j["min_bound_slack"] = num(r.min_bound_slack);
  j["continuity_mismatch"] = r.continuity_mismatch;
  j["continuity_samples"] = r.continuity_samples;
  j["adjacencies"] = r.adjacencies;
  j["min_S_normalized"] = num(r.min_S);
  j["max_diagonal_S"] = r.max_diagonal_S;
  j["sandwich_violation"] = r.sandwich_violation;
  j["S_samples"] = r.S_samples;
  j["dissipation_violation"] = num(r.dissipation_violation);
  j["dissipation_pairs"] = r.dissipation_pairs;
  j["lmi_pass"] = r.lmi_pass();
  j["sampled_pass"] = r.sampled_pass();
  return j;
}

Grid contour_grid(const StorageFunction& Sf, const model::PwaSystem& sys, const Slice& slice, double lo, double hi,
                  int resolution, bool parallel) {
  const int n = sys.n;
  auto bad = [&](int copy, int index) { return (copy != 0 && copy != 1) || index < 0 || index >= n; };
  if (bad(slice.copy_a, slice.index_a) || bad(slice.copy_b, slice.index_b))
    throw std::invalid_argument("slice axis out of range");
  if (slice.copy_a == slice.copy_b && slice.index_a == slice.index_b)
    throw std::invalid_argument("slice axes coincide");
  if (!(hi > lo) || resolution < 2) throw std::invalid_argument("grid needs hi > lo and resolution >= 2");
  const VectorXd xb = slice.x_base.size() == n ? slice.x_base : VectorXd::Zero(n);
  const VectorXd tb = slice.xt_base.size() == n ? slice.xt_base : VectorXd::Zero(n);

  Grid g;
  g.slice = slice;
  g.slice.x_base = xb;
  g.slice.xt_base = tb;
  g.xs = VectorXd::LinSpaced(resolution, lo, hi);
  g.ys = g.xs;
  auto f = [&](double a, double b) {
    VectorXd pt[2] = {xb, tb};
    pt[slice.copy_a][slice.index_a] = a;
    pt[slice.copy_b][slice.index_b] = b;
    try {
      return evaluate(Sf, sys, pt[0], pt[1]);
    } catch (const NoCellFound&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  g.values = parallel ? kernels::grid_parallel(f, g.xs, g.ys) : kernels::grid_serial(f, g.xs, g.ys);
  return g;
}

std::string grid_csv(const Grid& g, const std::vector<std::string>& extra_header) {
  auto axis = [](int copy, int index) {
    return std::string(copy == 0 ? "x" : "xtilde") + "[" + std::to_string(index) + "]";
  };
  std::ostringstream os;
  char buf[96];
  os << "# slice a=" << axis(g.slice.copy_a, g.slice.index_a) << " b=" << axis(g.slice.copy_b, g.slice.index_b)
     << " base_x=" << g.slice.x_base.transpose().format(Eigen::IOFormat(12, Eigen::DontAlignCols, " ", " "))
     << " base_xtilde=" << g.slice.xt_base.transpose().format(Eigen::IOFormat(12, Eigen::DontAlignCols, " ", " "))
     << "\n";
  std::snprintf(buf, sizeof buf, "# bounds %.12g %.12g resolution %d", g.xs[0], g.xs[g.xs.size() - 1],
                static_cast<int>(g.xs.size()));
  os << buf << "\n";
  for (const auto& h : extra_header) os << "# " << h << "\n";
  os << "x,xtilde,S\n";
  for (int r = 0; r < g.values.rows(); ++r)
    for (int c = 0; c < g.values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g", g.xs[c], g.ys[r], g.values(r, c));
      os << buf << "\n";
    }
  return os.str();
}

}  // namespace storage
}  // namespace pwacert
