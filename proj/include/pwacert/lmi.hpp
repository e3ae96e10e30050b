#ifndef PWACERT_LMI_HPP
#define PWACERT_LMI_HPP

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pwacert/augment.hpp"
#include "pwacert/model.hpp"

namespace pwacert {
namespace lmi {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using augment::Cell;

// Affine matrix expression c0 + sum_k x_k M_k over scalar coordinates x_k.
class AffineMat {
 public:
  AffineMat() = default;
  explicit AffineMat(const MatrixXd& c0) : c0_(c0) {}
  static AffineMat zero(int rows, int cols) { return AffineMat(MatrixXd::Zero(rows, cols)); }

  int rows() const { return static_cast<int>(c0_.rows()); }
  int cols() const { return static_cast<int>(c0_.cols()); }
  const MatrixXd& constant() const { return c0_; }
  const std::map<int, MatrixXd>& terms() const { return terms_; }
  void add_term(int coord, const MatrixXd& M);

  MatrixXd eval(const VectorXd& x) const;
  AffineMat transpose() const;
  AffineMat sym() const { return (*this + transpose()) * 0.5; }

  AffineMat operator+(const AffineMat& o) const;
  AffineMat operator-(const AffineMat& o) const;
  AffineMat operator-() const;
  AffineMat operator*(double s) const;
  AffineMat operator*(const MatrixXd& R) const;
  friend AffineMat operator*(const MatrixXd& L, const AffineMat& X);
  AffineMat operator+(const MatrixXd& M) const { return *this + AffineMat(M); }
  AffineMat operator-(const MatrixXd& M) const { return *this - AffineMat(M); }

  static AffineMat blocks(const std::vector<std::vector<AffineMat>>& b);

 private:
  MatrixXd c0_;
  std::map<int, MatrixXd> terms_;
};

enum class VarKind { symmetric, multiplier, free, scalar };
const char* to_string(VarKind k);

struct Variable {
  std::string name;
  VarKind kind = VarKind::scalar;
  int rows = 1;
  int cols = 1;
  int offset = 0;
  int ncoords = 1;
};

class VariableRegistry {
 public:
  // Multipliers are symmetric, entrywise >= 0 off the diagonal, and carry no
  // diagonal coordinates at all.
  int add(const std::string& name, VarKind kind, int rows, int cols = -1);
  int size() const { return total_; }
  const std::vector<Variable>& variables() const { return vars_; }
  const Variable& var(int id) const { return vars_.at(id); }
  int id(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  AffineMat expr(int id) const;
  AffineMat expr(const std::string& name) const { return expr(id(name)); }
  MatrixXd value(int id, const VectorXd& x) const;
  MatrixXd value(const std::string& name, const VectorXd& x) const { return value(id(name), x); }
  int scalar_coord(const std::string& name) const;
  std::vector<int> nonneg_coords() const;
  std::string coord_name(int coord) const;

 private:
  std::vector<Variable> vars_;
  std::map<std::string, int> index_;
  int total_ = 0;
};

struct PsdConstraint {
  std::string label;
  AffineMat expr;         // required >= 0
  MatrixXd congruence;    // optional orthogonal T; the solver sees T' expr T
};

struct Equality {
  std::string label;
  AffineMat expr;         // required = 0
  bool symmetric = false; // only the upper triangle is emitted
  int count() const;
};

struct ScalarBound {
  std::string label;
  int coord = 0;
  double lower = 0.0;
};

enum class Kind { gain, stability, combined };
const char* to_string(Kind k);

struct LmiProblem {
  Kind kind = Kind::gain;
  VariableRegistry registry;
  std::vector<PsdConstraint> psd;
  std::vector<Equality> equalities;
  std::vector<ScalarBound> bounds;
  VectorXd objective;  // minimized; empty means feasibility
  bool maximize = false;  // reporting only: objective was negated
  // Storage pieces as expressions in the registry.
  std::map<int, AffineMat> P;
  std::map<Cell, AffineMat> Pbar;
  int n = 0;
  bool common_quadratic = false;
  bool symmetry_reduction = false;

  int equality_count() const;
};

struct AssemblyOptions {
  bool common_quadratic = false;
  bool symmetry_reduction = false;
  double eps_pos = 1e-6;
  bool congruence_hints = true;
};

constexpr double kEpsPos = 1e-6;

LmiProblem assemble_gain_lmis(const model::PwaSystem& sys, const AssemblyOptions& opt = {});
LmiProblem assemble_stability_lmis(const model::PwaSystem& sys, const AssemblyOptions& opt = {});
LmiProblem assemble_combined_lmis(const model::PwaSystem& sys, const AssemblyOptions& opt = {});

// lift(P_i) stands in for diagonal cells; L is registered as a free
// (2n+1) x m_b matrix per adjacent pair.
std::vector<Equality> continuity_equalities(LmiProblem& prob, const augment::CellPairAdjacency& adj);

// T = blkdiag(I_{2n+1}, [[I, I], [-I, I]] / sqrt(2)) separates difference and
// common input directions.
MatrixXd input_congruence(int n, int p);

nlohmann::json dump(const LmiProblem& prob);

}  // namespace lmi
}  // namespace pwacert

#endif
