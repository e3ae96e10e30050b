#include "pwacert/model.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace pwacert {
namespace model {

using nlohmann::json;

namespace {

std::string shape(long r, long c) { return std::to_string(r) + "x" + std::to_string(c); }

const json& field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ModelError("schema violation: missing field '" + where + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ModelError("schema violation: '" + where + "' must be a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ModelError("schema violation: '" + where + "' must be an integer");
  return v.get<int>();
}

MatrixXd read_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ModelError("schema violation: '" + where + "' must be a non-empty nested array");
  const long rows = static_cast<long>(v.size());
  if (!v[0].is_array()) throw ModelError("schema violation: '" + where + "' must be a nested array of rows");
  const long cols = static_cast<long>(v[0].size());
  MatrixXd M(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (!v[r].is_array() || static_cast<long>(v[r].size()) != cols)
      throw ModelError("schema violation: '" + where + "' has ragged rows");
    for (long c = 0; c < cols; ++c) M(r, c) = number(v[r][c], where);
  }
  return M;
}

VectorXd read_vector(const json& v, const std::string& where) {
  if (!v.is_array()) throw ModelError("schema violation: '" + where + "' must be an array");
  VectorXd x(v.size());
  for (size_t k = 0; k < v.size(); ++k) x[k] = number(v[k], where);
  return x;
}

void expect(const MatrixXd& M, long r, long c, const std::string& what) {
  if (M.rows() != r || M.cols() != c)
    throw ModelError("dimension mismatch: " + what + " expected " + shape(r, c) + ", got " + shape(M.rows(), M.cols()));
}

void expect(const VectorXd& v, long r, const std::string& what) {
  if (v.size() != r)
    throw ModelError("dimension mismatch: " + what + " expected length " + std::to_string(r) + ", got " +
                     std::to_string(v.size()));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

bool Region::contains(const VectorXd& x, double slack) const { return set().contains(x, slack); }

const Region& PwaSystem::region(int index) const {
  if (index < 1 || index > N()) throw ModelError("invalid region index " + std::to_string(index));
  return regions[index - 1];
}

const Boundary* PwaSystem::boundary(int i, int j) const {
  for (const auto& b : boundaries)
    if ((b.i == i && b.j == j) || (b.i == j && b.j == i)) return &b;
  return nullptr;
}

json matrix_json(const MatrixXd& M) {
  json out = json::array();
  for (long r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    out.push_back(row);
  }
  return out;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (long k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

PwaSystem parse_model(const json& doc) {
  if (!doc.is_object()) throw ModelError("schema violation: model document must be an object");
  PwaSystem sys;
  sys.n = integer(field(doc, "n", ""), "n");
  sys.p = integer(field(doc, "p", ""), "p");
  sys.m = integer(field(doc, "m", ""), "m");
  if (sys.n < 1 || sys.p < 1 || sys.m < 1) throw ModelError("schema violation: n, p, m must be >= 1");
  const int n = sys.n, p = sys.p, m = sys.m;
  sys.D = read_matrix(field(doc, "D", ""), "D");
  expect(sys.D, m, p, "D");
  const json& regs = field(doc, "regions", "");
  if (!regs.is_array() || regs.empty()) throw ModelError("schema violation: 'regions' must be a non-empty array");
  std::set<int> seen;
  for (size_t q = 0; q < regs.size(); ++q) {
    const std::string w = "regions[" + std::to_string(q) + "].";
    const json& r = regs[q];
    if (r.contains("D")) throw ModelError("per-region D is not supported: " + w + "D (D must be shared)");
    Region R;
    R.index = integer(field(r, "index", w), w + "index");
    if (R.index < 1) throw ModelError("schema violation: " + w + "index must be >= 1");
    if (!seen.insert(R.index).second) throw ModelError("duplicate region index " + std::to_string(R.index));
    const std::string tag = "region " + std::to_string(R.index) + " ";
    R.G = read_matrix(field(r, "G", w), w + "G");
    R.g = read_vector(field(r, "g", w), w + "g");
    R.A = read_matrix(field(r, "A", w), w + "A");
    R.a = read_vector(field(r, "a", w), w + "a");
    R.B = read_matrix(field(r, "B", w), w + "B");
    R.C = read_matrix(field(r, "C", w), w + "C");
    R.c = read_vector(field(r, "c", w), w + "c");
    expect(R.G, R.G.rows(), n, tag + "G");
    expect(R.g, R.G.rows(), tag + "g");
    expect(R.A, n, n, tag + "A");
    expect(R.a, n, tag + "a");
    expect(R.B, n, p, tag + "B");
    expect(R.C, m, n, tag + "C");
    expect(R.c, m, tag + "c");
    sys.regions.push_back(std::move(R));
  }
  std::sort(sys.regions.begin(), sys.regions.end(), [](const Region& a, const Region& b) { return a.index < b.index; });
  for (int q = 0; q < sys.N(); ++q)
    if (sys.regions[q].index != q + 1)
      throw ModelError("schema violation: region indices must be 1..N, missing " + std::to_string(q + 1));
  if (doc.contains("boundaries")) {
    const json& bs = doc.at("boundaries");
    if (!bs.is_array()) throw ModelError("schema violation: 'boundaries' must be an array");
    for (size_t q = 0; q < bs.size(); ++q) {
      const std::string w = "boundaries[" + std::to_string(q) + "].";
      Boundary b;
      b.i = integer(field(bs[q], "i", w), w + "i");
      b.j = integer(field(bs[q], "j", w), w + "j");
      if (b.i == b.j) throw ModelError("boundary " + w + " links a region to itself");
      if (b.i < 1 || b.i > sys.N() || b.j < 1 || b.j > sys.N())
        throw ModelError("boundary " + w + " references an unknown region");
      if (sys.boundary(b.i, b.j)) throw ModelError("duplicate boundary between regions " + std::to_string(b.i) +
                                                   " and " + std::to_string(b.j));
      b.E = read_matrix(field(bs[q], "E", w), w + "E");
      b.e = read_vector(field(bs[q], "e", w), w + "e");
      expect(b.E, b.E.rows(), n, w + "E");
      expect(b.e, b.E.rows(), w + "e");
      sys.boundaries.push_back(std::move(b));
    }
  }
  if (doc.contains("metadata")) sys.metadata = doc.at("metadata");
  return sys;
}

PwaSystem parse_model_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("schema violation: not valid JSON (") + e.what() + ")");
  }
  return parse_model(doc);
}

PwaSystem load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_text(ss.str());
}

json to_json(const PwaSystem& sys) {
  json doc;
  doc["n"] = sys.n;
  doc["p"] = sys.p;
  doc["m"] = sys.m;
  doc["D"] = matrix_json(sys.D);
  json regs = json::array();
  for (const auto& r : sys.regions) {
    json o;
    o["index"] = r.index;
    o["G"] = matrix_json(r.G);
    o["g"] = vector_json(r.g);
    o["A"] = matrix_json(r.A);
    o["a"] = vector_json(r.a);
    o["B"] = matrix_json(r.B);
    o["C"] = matrix_json(r.C);
    o["c"] = vector_json(r.c);
    regs.push_back(o);
  }
  doc["regions"] = regs;
  json bs = json::array();
  for (const auto& b : sys.boundaries) {
    json o;
    o["i"] = b.i;
    o["j"] = b.j;
    o["E"] = matrix_json(b.E);
    o["e"] = vector_json(b.e);
    bs.push_back(o);
  }
  doc["boundaries"] = bs;
  return doc;
}

std::string digest(const PwaSystem& sys) {
  const std::string s = to_json(sys).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool ValidationReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.informational && !c.pass) return false;
  return true;
}

const Check* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::vector<ContinuityResult> check_continuity(const PwaSystem& sys) {
  std::vector<ContinuityResult> out;
  for (const auto& b : sys.boundaries) {
    const Region& Ri = sys.region(b.i);
    const Region& Rj = sys.region(b.j);
    ContinuityResult cr;
    cr.i = b.i;
    cr.j = b.j;
    MatrixXd Ee(b.E.rows(), sys.n + 1);
    Ee << b.E, b.e;
    MatrixXd T(sys.n, sys.n + 1);
    T << Ri.A - Rj.A, Ri.a - Rj.a;
    // g [E e] = T  <=>  [E e]' g' = T'
    cr.gmat = Ee.transpose().completeOrthogonalDecomposition().solve(T.transpose()).transpose();
    cr.residual = (cr.gmat * Ee - T).norm() / std::max(1.0, T.norm());
    cr.same_B = (Ri.B - Rj.B).norm() <= 1e-12 * std::max(1.0, Ri.B.norm());
    cr.pass = cr.residual < kContinuityTol && cr.same_B;
    out.push_back(std::move(cr));
  }
  return out;
}

bool is_continuous(const PwaSystem& sys) {
  for (const auto& c : check_continuity(sys))
    if (!c.pass) return false;
  return true;
}

std::pair<double, double> lipschitz_constants(const PwaSystem& sys) {
  for (const auto& c : check_continuity(sys))
    if (!c.pass)
      throw ModelError("continuity precondition violated on boundary (" + std::to_string(c.i) + "," +
                       std::to_string(c.j) + "), residual " + fmt(c.residual));
  double lx = 0.0, lu = 0.0;
  for (const auto& r : sys.regions) {
    Eigen::JacobiSVD<MatrixXd> sa(r.A), sb(r.B);
    lx = std::max(lx, sa.singularValues()[0]);
    lu = std::max(lu, sb.singularValues()[0]);
  }
  return {lx, lu};
}

bool is_hurwitz(const MatrixXd& A) {
  Eigen::EigenSolver<MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff() < 0.0;
}

ValidationReport validate(const PwaSystem& sys) {
  ValidationReport rep;

  {
    Check c{"assumption-1", true, "", 0.0, false};
    std::string offenders;
    bool any_origin = false;
    for (const auto& r : sys.regions) {
      if (r.g.minCoeff() < 0.0) continue;
      any_origin = true;
      const double res = std::max(r.a.cwiseAbs().maxCoeff(), r.c.cwiseAbs().maxCoeff());
      c.residual = std::max(c.residual, res);
      if (res != 0.0) {
        c.pass = false;
        offenders += " " + std::to_string(r.index);
      }
    }
    c.detail = !any_origin ? "no region contains the origin"
               : c.pass    ? "a_i = 0 and c_i = 0 in every region containing the origin"
                           : "origin regions with nonzero a or c:" + offenders;
    rep.checks.push_back(c);
  }

  {
    Check c{"region-nonempty", true, "", 0.0, false};
    std::string empty;
    for (const auto& r : sys.regions) {
      const poly::Margin mg = poly::chebyshev_margin(r.set());
      if (!mg.solved || mg.t < -1e-7) {
        c.pass = false;
        empty += " " + std::to_string(r.index);
      }
      if (mg.solved) c.residual = std::min(c.residual, mg.t);
    }
    c.detail = c.pass ? "every region is LP-feasible" : "empty regions:" + empty;
    rep.checks.push_back(c);
  }

  {
    Check c{"boundary-containment", true, "", 0.0, false};
    std::string bad;
    for (size_t q = 0; q < sys.boundaries.size(); ++q) {
      const Boundary& b = sys.boundaries[q];
      const poly::Polyhedron X = sys.region(b.i).set().intersect(sys.region(b.j).set());
      if (!poly::nonempty(X)) {
        c.pass = false;
        bad += " (" + std::to_string(b.i) + "," + std::to_string(b.j) + ": empty intersection)";
        continue;
      }
      for (const auto& x : poly::sample_points(X, 100, 1000 + q)) {
        const double r = (b.E * x + b.e).norm();
        c.residual = std::max(c.residual, r);
      }
    }
    if (c.residual > 1e-8) {
      c.pass = false;
      bad += " max |Ex+e| = " + fmt(c.residual);
    }
    c.detail = c.pass ? "declared hyperplanes contain every sampled intersection point" : "violations:" + bad;
    rep.checks.push_back(c);
  }

  {
    Check c{"disjoint-interiors", true, "", 0.0, false};
    std::string bad;
    for (int i = 1; i <= sys.N(); ++i)
      for (int j = i + 1; j <= sys.N(); ++j) {
        const poly::Margin mg = poly::chebyshev_margin(sys.region(i).set().intersect(sys.region(j).set()));
        if (mg.solved && mg.t > 1e-7) {
          c.pass = false;
          c.residual = std::max(c.residual, mg.t);
          bad += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
        }
      }
    c.detail = c.pass ? "no two region interiors intersect" : "overlapping interiors:" + bad;
    rep.checks.push_back(c);
  }

  rep.checks.push_back(Check{"shared-D", true, "single D of shape " + shape(sys.D.rows(), sys.D.cols()), 0.0, false});

  {
    Check c{"continuity", true, "", 0.0, true};
    std::string bad;
    for (const auto& cr : check_continuity(sys)) {
      c.residual = std::max(c.residual, cr.residual);
      if (!cr.pass) {
        c.pass = false;
        bad += " (" + std::to_string(cr.i) + "," + std::to_string(cr.j) + ")";
      }
    }
    c.detail = c.pass ? "continuous; continuity implies no sliding modes"
                      : "discontinuous across" + bad + "; sliding or Zeno behavior is not excluded";
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace model
}  // namespace pwacert
