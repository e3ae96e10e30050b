#include "pwacert/sdp.hpp"

#include <chrono>
#include <cstdlib>
#include <stdexcept>

namespace pwacert {
namespace sdp {

using conic::svec;
using Eigen::MatrixXd;
using Trip = Eigen::Triplet<double>;

ConicProgram to_standard_form(const lmi::LmiProblem& prob) {
  ConicProgram out;
  const int nv = prob.registry.size();
  out.nvars = nv;
  std::vector<Trip> gt;
  std::vector<double> h;
  int row = 0;
  for (const auto& b : prob.bounds) {
    gt.emplace_back(row, b.coord, -1.0);
    h.push_back(-b.lower);
    out.cone_labels.push_back(b.label);
    ++row;
  }
  for (int k : prob.registry.nonneg_coords()) {
    gt.emplace_back(row, k, -1.0);
    h.push_back(0.0);
    out.cone_labels.push_back(prob.registry.coord_name(k) + " >= 0");
    ++row;
  }
  conic::Cones K;
  K.l = row;
  for (const auto& c : prob.psd) {
    const int k = c.expr.rows();
    if (c.expr.cols() != k) throw std::logic_error("psd constraint '" + c.label + "' is not square");
    const bool hint = c.congruence.size() > 0;
    auto sym_check = [&](const MatrixXd& M) {
      if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
        throw std::logic_error("psd constraint '" + c.label + "' is not a symmetric affine expression");
    };
    auto tr = [&](const MatrixXd& M) -> MatrixXd { return hint ? MatrixXd(c.congruence.transpose() * M * c.congruence) : M; };
    sym_check(c.expr.constant());
    const VectorXd h0 = svec(tr(c.expr.constant()));
    for (int q = 0; q < h0.size(); ++q) h.push_back(h0[q]);
    for (const auto& [coord, M] : c.expr.terms()) {
      sym_check(M);
      const VectorXd g = svec(tr(M));
      for (int q = 0; q < g.size(); ++q)
        if (g[q] != 0.0) gt.emplace_back(row + q, coord, -g[q]);
    }
    row += static_cast<int>(h0.size());
    K.s.push_back(k);
    out.cone_labels.push_back(c.label);
  }
  std::vector<Trip> at;
  std::vector<double> b;
  int er = 0;
  for (const auto& e : prob.equalities) {
    const int R = e.expr.rows(), C = e.expr.cols();
    for (int j = 0; j < C; ++j)
      for (int i = 0; i < R; ++i) {
        if (e.symmetric && i > j) continue;
        for (const auto& [coord, M] : e.expr.terms())
          if (M(i, j) != 0.0) at.emplace_back(er, coord, M(i, j));
        b.push_back(-e.expr.constant()(i, j));
        out.equality_labels.push_back(e.label);
        ++er;
      }
  }
  auto& P = out.problem;
  P.cones = K;
  P.c = prob.objective.size() ? prob.objective : VectorXd::Zero(nv);
  P.G.resize(row, nv);
  P.G.setFromTriplets(gt.begin(), gt.end());
  P.h = Eigen::Map<VectorXd>(h.data(), static_cast<long>(h.size()));
  P.A.resize(er, nv);
  P.A.setFromTriplets(at.begin(), at.end());
  P.b = Eigen::Map<VectorXd>(b.data(), static_cast<long>(b.size()));
  return out;
}

namespace {

class IpmBackend : public Backend {
 public:
  std::string name() const override { return "ipm"; }
  conic::Result solve(const conic::Problem& prob, const conic::Settings& s) const override {
    return conic::solve(prob, s);
  }
};

}  // namespace

std::unique_ptr<Backend> make_backend(const std::string& name) {
  std::string n = name;
  if (n.empty()) {
    const char* env = std::getenv("PWACERT_BACKEND");
    n = env ? env : "ipm";
  }
  if (n == "ipm") return std::make_unique<IpmBackend>();
  throw std::invalid_argument("unknown SDP backend '" + n + "' (available: ipm)");
}

SdpSolution solve(const ConicProgram& prog, const conic::Settings& settings) {
  SdpSolution sol;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto be = make_backend();
    sol.backend = be->name();
    const conic::Result r = be->solve(prog.problem, settings);
    sol.status = r.status;
    sol.pres = r.pres;
    sol.dres = r.dres;
    sol.iterations = r.iterations;
    sol.message = r.message;
    if (r.status == Status::optimal) {
      sol.x = r.x;
      sol.objective = prog.problem.c.dot(r.x);
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    sol.status = Status::numerical_failure;
    sol.message = std::string("backend failure: ") + e.what();
  }
  sol.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

nlohmann::json export_triplets(const ConicProgram& prog) {
  using nlohmann::json;
  auto trip = [](const conic::SpMat& M) {
    json t = json::array();
    for (int k = 0; k < M.outerSize(); ++k)
      for (conic::SpMat::InnerIterator it(M, k); it; ++it) t.push_back({it.row(), it.col(), it.value()});
    return json{{"rows", M.rows()}, {"cols", M.cols()}, {"triplets", t}};
  };
  const auto& P = prog.problem;
  json out;
  out["layout"] = "minimize c'x s.t. Gx + s = h, s in K, Ax = b; K = orthant(l) x PSD blocks in svec form "
                  "(lower triangle, column-major, off-diagonal entries scaled by sqrt(2))";
  out["cones"] = {{"l", P.cones.l}, {"s", P.cones.s}};
  out["cone_labels"] = prog.cone_labels;
  out["c"] = model::vector_json(P.c);
  out["G"] = trip(P.G);
  out["h"] = model::vector_json(P.h);
  out["A"] = trip(P.A);
  out["b"] = model::vector_json(P.b);
  return out;
}

}  // namespace sdp
}  // namespace pwacert
