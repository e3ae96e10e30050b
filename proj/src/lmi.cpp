#include "pwacert/lmi.hpp"

#include <cmath>
#include <stdexcept>

namespace pwacert {
namespace lmi {

using model::PwaSystem;

void AffineMat::add_term(int coord, const MatrixXd& M) {
  auto it = terms_.find(coord);
  if (it == terms_.end())
    terms_.emplace(coord, M);
  else
    it->second += M;
}

MatrixXd AffineMat::eval(const VectorXd& x) const {
  MatrixXd out = c0_;
  for (const auto& [k, M] : terms_) out += x[k] * M;
  return out;
}

AffineMat AffineMat::transpose() const {
  AffineMat out(c0_.transpose());
  for (const auto& [k, M] : terms_) out.terms_.emplace(k, M.transpose());
  return out;
}

AffineMat AffineMat::operator+(const AffineMat& o) const {
  if (o.rows() != rows() || o.cols() != cols()) throw std::invalid_argument("AffineMat: shape mismatch in +");
  AffineMat out(*this);
  out.c0_ += o.c0_;
  for (const auto& [k, M] : o.terms_) out.add_term(k, M);
  return out;
}

AffineMat AffineMat::operator-() const { return *this * -1.0; }

AffineMat AffineMat::operator-(const AffineMat& o) const { return *this + (-o); }

AffineMat AffineMat::operator*(double s) const {
  AffineMat out(c0_ * s);
  for (const auto& [k, M] : terms_) out.terms_.emplace(k, M * s);
  return out;
}

AffineMat AffineMat::operator*(const MatrixXd& R) const {
  if (R.rows() != cols()) throw std::invalid_argument("AffineMat: shape mismatch in right product");
  AffineMat out(c0_ * R);
  for (const auto& [k, M] : terms_) out.terms_.emplace(k, M * R);
  return out;
}

AffineMat operator*(const MatrixXd& L, const AffineMat& X) {
  if (L.cols() != X.rows()) throw std::invalid_argument("AffineMat: shape mismatch in left product");
  AffineMat out(L * X.c0_);
  for (const auto& [k, M] : X.terms_) out.terms_.emplace(k, L * M);
  return out;
}

AffineMat AffineMat::blocks(const std::vector<std::vector<AffineMat>>& b) {
  std::vector<int> rh, cw;
  for (const auto& row : b) rh.push_back(row.at(0).rows());
  for (const auto& blk : b.at(0)) cw.push_back(blk.cols());
  int R = 0, C = 0;
  for (int r : rh) R += r;
  for (int c : cw) C += c;
  AffineMat out(MatrixXd::Zero(R, C));
  int r0 = 0;
  for (size_t i = 0; i < b.size(); ++i) {
    int c0 = 0;
    for (size_t j = 0; j < b[i].size(); ++j) {
      const AffineMat& X = b[i][j];
      if (X.rows() != rh[i] || X.cols() != cw[j]) throw std::invalid_argument("AffineMat::blocks: ragged layout");
      out.c0_.block(r0, c0, X.rows(), X.cols()) = X.c0_;
      for (const auto& [k, M] : X.terms_) {
        MatrixXd Z = MatrixXd::Zero(R, C);
        Z.block(r0, c0, M.rows(), M.cols()) = M;
        out.add_term(k, Z);
      }
      c0 += cw[j];
    }
    r0 += rh[i];
  }
  return out;
}

const char* to_string(VarKind k) {
  switch (k) {
    case VarKind::symmetric: return "symmetric-matrix";
    case VarKind::multiplier: return "elementwise-nonneg-zero-diag-matrix";
    case VarKind::free: return "free-matrix";
    case VarKind::scalar: return "scalar";
  }
  return "scalar";
}

const char* to_string(Kind k) {
  switch (k) {
    case Kind::gain: return "gain";
    case Kind::stability: return "stability";
    case Kind::combined: return "combined";
  }
  return "gain";
}

int VariableRegistry::add(const std::string& name, VarKind kind, int rows, int cols) {
  if (index_.count(name)) throw std::invalid_argument("duplicate variable name " + name);
  Variable v;
  v.name = name;
  v.kind = kind;
  v.rows = rows;
  v.cols = cols < 0 ? rows : cols;
  v.offset = total_;
  switch (kind) {
    case VarKind::symmetric: v.ncoords = rows * (rows + 1) / 2; break;
    case VarKind::multiplier: v.ncoords = rows * (rows - 1) / 2; break;
    case VarKind::free: v.ncoords = v.rows * v.cols; break;
    case VarKind::scalar:
      v.rows = v.cols = 1;
      v.ncoords = 1;
      break;
  }
  total_ += v.ncoords;
  vars_.push_back(v);
  index_[name] = static_cast<int>(vars_.size()) - 1;
  return index_[name];
}

int VariableRegistry::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown variable " + name);
  return it->second;
}

AffineMat VariableRegistry::expr(int id) const {
  const Variable& v = var(id);
  AffineMat out = AffineMat::zero(v.rows, v.cols);
  int k = v.offset;
  switch (v.kind) {
    case VarKind::symmetric:
    case VarKind::multiplier:
      for (int j = 0; j < v.rows; ++j)
        for (int i = (v.kind == VarKind::symmetric ? j : j + 1); i < v.rows; ++i) {
          MatrixXd M = MatrixXd::Zero(v.rows, v.rows);
          M(i, j) = 1.0;
          M(j, i) = 1.0;
          out.add_term(k++, M);
        }
      break;
    case VarKind::free:
      for (int j = 0; j < v.cols; ++j)
        for (int i = 0; i < v.rows; ++i) {
          MatrixXd M = MatrixXd::Zero(v.rows, v.cols);
          M(i, j) = 1.0;
          out.add_term(k++, M);
        }
      break;
    case VarKind::scalar: out.add_term(k, MatrixXd::Ones(1, 1)); break;
  }
  return out;
}

MatrixXd VariableRegistry::value(int id, const VectorXd& x) const { return expr(id).eval(x); }

int VariableRegistry::scalar_coord(const std::string& name) const {
  const Variable& v = var(id(name));
  if (v.kind != VarKind::scalar) throw std::invalid_argument(name + " is not a scalar");
  return v.offset;
}

std::vector<int> VariableRegistry::nonneg_coords() const {
  std::vector<int> out;
  for (const auto& v : vars_)
    if (v.kind == VarKind::multiplier)
      for (int k = 0; k < v.ncoords; ++k) out.push_back(v.offset + k);
  return out;
}

std::string VariableRegistry::coord_name(int coord) const {
  for (const auto& v : vars_)
    if (coord >= v.offset && coord < v.offset + v.ncoords) return v.name + "[" + std::to_string(coord - v.offset) + "]";
  return "?";
}

int Equality::count() const {
  if (symmetric) return expr.rows() * (expr.rows() + 1) / 2;
  return expr.rows() * expr.cols();
}

int LmiProblem::equality_count() const {
  int c = 0;
  for (const auto& e : equalities) c += e.count();
  return c;
}

MatrixXd input_congruence(int n, int p) {
  const int nb = 2 * n + 1;
  MatrixXd T = MatrixXd::Zero(nb + 2 * p, nb + 2 * p);
  T.topLeftCorner(nb, nb).setIdentity();
  const double s = 1.0 / std::sqrt(2.0);
  MatrixXd I = MatrixXd::Identity(p, p);
  T.block(nb, nb, p, p) = s * I;
  T.block(nb, nb + p, p, p) = s * I;
  T.block(nb + p, nb, p, p) = -s * I;
  T.block(nb + p, nb + p, p, p) = s * I;
  return T;
}

namespace {

std::string idx(int i, int j) { return std::to_string(i) + "_" + std::to_string(j); }

AffineMat lift(const AffineMat& P) {
  const int n = P.rows();
  AffineMat Z1 = AffineMat::zero(n, 1), Zr = AffineMat::zero(1, n), Z = AffineMat::zero(1, 1);
  return AffineMat::blocks({{P, -P, Z1}, {-P, P, Z1}, {Zr, Zr, Z}});
}

AffineMat scaled_identity(const AffineMat& s, const MatrixXd& I) {
  // s is 1x1
  AffineMat out(s.constant()(0, 0) * I);
  for (const auto& [k, M] : s.terms()) out.add_term(k, M(0, 0) * I);
  return out;
}

// Registers P_i, Pbar_ij (or their tied/reduced forms) and the storage map.
void storage_variables(const PwaSystem& sys, LmiProblem& prob, const AssemblyOptions& opt) {
  auto& reg = prob.registry;
  const int n = sys.n, N = sys.N();
  prob.n = n;
  prob.common_quadratic = opt.common_quadratic;
  prob.symmetry_reduction = opt.symmetry_reduction;
  if (opt.common_quadratic) {
    reg.add("P", VarKind::symmetric, n);
    for (int i = 1; i <= N; ++i) prob.P[i] = reg.expr("P");
  } else {
    for (int i = 1; i <= N; ++i) prob.P[i] = reg.expr(reg.add("P_" + std::to_string(i), VarKind::symmetric, n));
  }
  const MatrixXd Pi = augment::swap_permutation(n);
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j) {
      if (i == j) {
        prob.Pbar[{i, i}] = lift(prob.P[i]);
      } else if (opt.common_quadratic) {
        prob.Pbar[{i, j}] = lift(prob.P[i]);
      } else if (opt.symmetry_reduction && i > j) {
        prob.Pbar[{i, j}] = Pi * prob.Pbar.at({j, i}) * Pi.transpose();
      } else {
        prob.Pbar[{i, j}] = reg.expr(reg.add("Pbar_" + idx(i, j), VarKind::symmetric, 2 * n + 1));
      }
    }
}

AffineMat sproc(const MatrixXd& Gbar, const AffineMat& U) { return Gbar.transpose() * U * Gbar; }

void finish_continuity(const PwaSystem& sys, LmiProblem& prob) {
  if (prob.common_quadratic) return;
  const auto adj = augment::augmented_adjacency(sys);
  auto eqs = continuity_equalities(prob, adj);
  for (auto& e : eqs) prob.equalities.push_back(std::move(e));
}

}  // namespace

std::vector<Equality> continuity_equalities(LmiProblem& prob, const augment::CellPairAdjacency& adj) {
  std::vector<Equality> out;
  for (const auto& pr : adj.pairs) {
    const std::string name = "L_" + idx(pr.a.first, pr.a.second) + "__" + idx(pr.b.first, pr.b.second);
    const int nb = static_cast<int>(pr.Ebar.cols());
    const AffineMat L = prob.registry.expr(prob.registry.add(name, VarKind::free, nb, static_cast<int>(pr.Ebar.rows())));
    const AffineMat LE = L * pr.Ebar;
    Equality e;
    e.label = "continuity " + idx(pr.a.first, pr.a.second) + " ~ " + idx(pr.b.first, pr.b.second);
    e.expr = prob.Pbar.at(pr.a) - prob.Pbar.at(pr.b) - LE - LE.transpose();
    e.symmetric = true;
    out.push_back(std::move(e));
  }
  return out;
}

LmiProblem assemble_gain_lmis(const PwaSystem& sys, const AssemblyOptions& opt) {
  LmiProblem prob;
  prob.kind = Kind::gain;
  auto& reg = prob.registry;
  const int n = sys.n, p = sys.p, N = sys.N();
  storage_variables(sys, prob, opt);
  const AffineMat gam = reg.expr(reg.add("gamma", VarKind::scalar, 1));
  prob.bounds.push_back({"gamma >= 0", reg.scalar_coord("gamma"), 0.0});
  const MatrixXd& D = sys.D;
  const MatrixXd Ip = MatrixXd::Identity(p, p);
  for (int i = 1; i <= N; ++i) {
    const auto& R = sys.region(i);
    const AffineMat& P = prob.P[i];
    const AffineMat Q = R.A.transpose() * P + P * R.A + R.C.transpose() * R.C;
    const AffineMat S = P * R.B + R.C.transpose() * D;
    const AffineMat Z = AffineMat(D.transpose() * D) - scaled_identity(gam, Ip);
    prob.psd.push_back({"P_" + std::to_string(i) + " >= 0", P, {}});
    prob.psd.push_back({"gain diagonal " + std::to_string(i), -AffineMat::blocks({{Q, S}, {S.transpose(), Z}}), {}});
  }
  const MatrixXd Ib = augment::ibar(p);
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j) {
      if (i == j) continue;
      const auto cell = augment::augmented_cell(sys, i, j);
      const int pij = static_cast<int>(cell.Gbar.rows());
      const AffineMat U = reg.expr(reg.add("U_" + idx(i, j), VarKind::multiplier, pij));
      const AffineMat W = reg.expr(reg.add("W_" + idx(i, j), VarKind::multiplier, pij));
      const AffineMat& Pb = prob.Pbar.at({i, j});
      prob.psd.push_back({"Pbar_" + idx(i, j) + " - G'UG >= 0", Pb - sproc(cell.Gbar, U), {}});
      const AffineMat Q = cell.Abar.transpose() * Pb + Pb * cell.Abar + cell.Cbar.transpose() * cell.Cbar +
                          sproc(cell.Gbar, W);
      const AffineMat S = Pb * cell.Bbar + cell.Cbar.transpose() * cell.Dbar;
      const AffineMat Z = AffineMat(cell.Dbar.transpose() * cell.Dbar) - scaled_identity(gam, Ib);
      prob.psd.push_back({"gain cell " + idx(i, j), -AffineMat::blocks({{Q, S}, {S.transpose(), Z}}),
                          opt.congruence_hints ? input_congruence(n, p) : MatrixXd()});
    }
  finish_continuity(sys, prob);
  prob.objective = VectorXd::Zero(reg.size());
  prob.objective[reg.scalar_coord("gamma")] = 1.0;
  return prob;
}

LmiProblem assemble_stability_lmis(const PwaSystem& sys, const AssemblyOptions& opt) {
  LmiProblem prob;
  prob.kind = Kind::stability;
  auto& reg = prob.registry;
  const int n = sys.n, N = sys.N();
  storage_variables(sys, prob, opt);
  const AffineMat s1 = reg.expr(reg.add("sigma1", VarKind::scalar, 1));
  const AffineMat s2 = reg.expr(reg.add("sigma2", VarKind::scalar, 1));
  const AffineMat s3 = reg.expr(reg.add("sigma3", VarKind::scalar, 1));
  for (const char* s : {"sigma1", "sigma2", "sigma3"})
    prob.bounds.push_back({std::string(s) + " >= eps", reg.scalar_coord(s), opt.eps_pos});
  const MatrixXd In = MatrixXd::Identity(n, n);
  for (int i = 1; i <= N; ++i) {
    const auto& R = sys.region(i);
    const AffineMat& P = prob.P[i];
    const std::string t = std::to_string(i);
    prob.psd.push_back({"P_" + t + " - s1 I >= 0", P - scaled_identity(s1, In), {}});
    prob.psd.push_back({"s2 I - P_" + t + " >= 0", scaled_identity(s2, In) - P, {}});
    prob.psd.push_back({"decay diagonal " + t, -(R.A.transpose() * P + P * R.A + scaled_identity(s3, In)), {}});
  }
  const MatrixXd J = augment::jbar(n);
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j) {
      if (i == j) continue;
      const auto cell = augment::augmented_cell(sys, i, j);
      const int pij = static_cast<int>(cell.Gbar.rows());
      const AffineMat U = reg.expr(reg.add("U_" + idx(i, j), VarKind::multiplier, pij));
      const AffineMat Rm = reg.expr(reg.add("R_" + idx(i, j), VarKind::multiplier, pij));
      const AffineMat W = reg.expr(reg.add("W_" + idx(i, j), VarKind::multiplier, pij));
      const AffineMat& Pb = prob.Pbar.at({i, j});
      const std::string t = idx(i, j);
      prob.psd.push_back({"Pbar_" + t + " - s1 J - G'UG >= 0", Pb - scaled_identity(s1, J) - sproc(cell.Gbar, U), {}});
      prob.psd.push_back({"s2 J - Pbar_" + t + " - G'RG >= 0", scaled_identity(s2, J) - Pb - sproc(cell.Gbar, Rm), {}});
      prob.psd.push_back({"decay cell " + t, -(cell.Abar.transpose() * Pb + Pb * cell.Abar + scaled_identity(s3, J) +
                                               sproc(cell.Gbar, W)),
                          {}});
      prob.equalities.push_back({"Pbar_" + t + " F = 0", Pb * cell.Fbar, false});
    }
  finish_continuity(sys, prob);
  prob.equalities.push_back({"sigma2 = 1", s2 - MatrixXd::Ones(1, 1), false});
  prob.objective = VectorXd::Zero(reg.size());
  prob.objective[reg.scalar_coord("sigma3")] = -1.0;
  prob.maximize = true;
  return prob;
}

LmiProblem assemble_combined_lmis(const PwaSystem& sys, const AssemblyOptions& opt) {
  LmiProblem prob;
  prob.kind = Kind::combined;
  auto& reg = prob.registry;
  const int n = sys.n, p = sys.p, N = sys.N();
  storage_variables(sys, prob, opt);
  const AffineMat gam = reg.expr(reg.add("gamma", VarKind::scalar, 1));
  const AffineMat s1 = reg.expr(reg.add("sigma1", VarKind::scalar, 1));
  const AffineMat s2 = reg.expr(reg.add("sigma2", VarKind::scalar, 1));
  const AffineMat s3 = reg.expr(reg.add("sigma3", VarKind::scalar, 1));
  prob.bounds.push_back({"gamma >= 0", reg.scalar_coord("gamma"), 0.0});
  for (const char* s : {"sigma1", "sigma2", "sigma3"})
    prob.bounds.push_back({std::string(s) + " >= eps", reg.scalar_coord(s), opt.eps_pos});
  const MatrixXd& D = sys.D;
  const MatrixXd In = MatrixXd::Identity(n, n), Ip = MatrixXd::Identity(p, p);
  for (int i = 1; i <= N; ++i) {
    const auto& R = sys.region(i);
    const AffineMat& P = prob.P[i];
    const std::string t = std::to_string(i);
    prob.psd.push_back({"P_" + t + " - s1 I >= 0", P - scaled_identity(s1, In), {}});
    prob.psd.push_back({"s2 I - P_" + t + " >= 0", scaled_identity(s2, In) - P, {}});
    const AffineMat Q = R.A.transpose() * P + P * R.A + R.C.transpose() * R.C + scaled_identity(s3, In);
    const AffineMat S = P * R.B + R.C.transpose() * D;
    const AffineMat Z = AffineMat(D.transpose() * D) - scaled_identity(gam, Ip);
    prob.psd.push_back({"combined diagonal " + t, -AffineMat::blocks({{Q, S}, {S.transpose(), Z}}), {}});
  }
  const MatrixXd J = augment::jbar(n);
  const MatrixXd Ib = augment::ibar(p);
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j) {
      if (i == j) continue;
      const auto cell = augment::augmented_cell(sys, i, j);
      const int pij = static_cast<int>(cell.Gbar.rows());
      const AffineMat U = reg.expr(reg.add("U_" + idx(i, j), VarKind::multiplier, pij));
      const AffineMat Rm = reg.expr(reg.add("R_" + idx(i, j), VarKind::multiplier, pij));
      const AffineMat W = reg.expr(reg.add("W_" + idx(i, j), VarKind::multiplier, pij));
      const AffineMat& Pb = prob.Pbar.at({i, j});
      const std::string t = idx(i, j);
      prob.psd.push_back({"Pbar_" + t + " - s1 J - G'UG >= 0", Pb - scaled_identity(s1, J) - sproc(cell.Gbar, U), {}});
      prob.psd.push_back({"s2 J - Pbar_" + t + " - G'RG >= 0", scaled_identity(s2, J) - Pb - sproc(cell.Gbar, Rm), {}});
      const AffineMat Q = cell.Abar.transpose() * Pb + Pb * cell.Abar + cell.Cbar.transpose() * cell.Cbar +
                          scaled_identity(s3, J) + sproc(cell.Gbar, W);
      const AffineMat S = Pb * cell.Bbar + cell.Cbar.transpose() * cell.Dbar;
      const AffineMat Z = AffineMat(cell.Dbar.transpose() * cell.Dbar) - scaled_identity(gam, Ib);
      prob.psd.push_back({"combined cell " + t, -AffineMat::blocks({{Q, S}, {S.transpose(), Z}}),
                          opt.congruence_hints ? input_congruence(n, p) : MatrixXd()});
    }
  finish_continuity(sys, prob);
  prob.objective = VectorXd::Zero(reg.size());
  prob.objective[reg.scalar_coord("gamma")] = 1.0;
  return prob;
}

nlohmann::json dump(const LmiProblem& prob) {
  using nlohmann::json;
  json out;
  out["kind"] = to_string(prob.kind);
  json vars = json::array();
  for (const auto& v : prob.registry.variables())
    vars.push_back({{"name", v.name}, {"kind", to_string(v.kind)}, {"rows", v.rows}, {"cols", v.cols},
                    {"offset", v.offset}, {"coords", v.ncoords}});
  out["variables"] = vars;
  auto expr_json = [](const AffineMat& A) {
    json t = json::array();
    for (const auto& [k, M] : A.terms()) t.push_back({{"coord", k}, {"matrix", model::matrix_json(M)}});
    return json{{"constant", model::matrix_json(A.constant())}, {"terms", t}};
  };
  json psd = json::array();
  for (const auto& c : prob.psd) {
    json o = {{"label", c.label}, {"order", c.expr.rows()}, {"expr", expr_json(c.expr)}};
    if (c.congruence.size()) o["congruence"] = model::matrix_json(c.congruence);
    psd.push_back(o);
  }
  out["psd_constraints"] = psd;
  json eqs = json::array();
  for (const auto& e : prob.equalities)
    eqs.push_back({{"label", e.label}, {"symmetric", e.symmetric}, {"expr", expr_json(e.expr)}});
  out["equalities"] = eqs;
  json bounds = json::array();
  for (const auto& b : prob.bounds) bounds.push_back({{"label", b.label}, {"coord", b.coord}, {"lower", b.lower}});
  out["bounds"] = bounds;
  out["nonneg_coords"] = prob.registry.nonneg_coords();
  out["objective"] = prob.objective.size() ? model::vector_json(prob.objective) : json(nullptr);
  out["sense"] = prob.maximize ? "maximize (stored negated)" : "minimize";
  return out;
}

}  // namespace lmi
}  // namespace pwacert
