#ifndef PWACERT_MODEL_HPP
#define PWACERT_MODEL_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pwacert/polyhedron.hpp"

namespace pwacert {
namespace model {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Region {
  int index = 0;
  MatrixXd G;
  VectorXd g;
  MatrixXd A;
  VectorXd a;
  MatrixXd B;
  MatrixXd C;
  VectorXd c;

  poly::Polyhedron set() const { return {G, g}; }
  bool contains(const VectorXd& x, double slack) const;
};

struct Boundary {
  int i = 0;
  int j = 0;
  MatrixXd E;
  VectorXd e;
};

// Regions are stored sorted by index, and indices are exactly 1..N.
struct PwaSystem {
  int n = 0, p = 0, m = 0;
  std::vector<Region> regions;
  MatrixXd D;
  std::vector<Boundary> boundaries;
  nlohmann::json metadata = nlohmann::json::object();

  int N() const { return static_cast<int>(regions.size()); }
  const Region& region(int index) const;
  // Declared boundary between i and j in either orientation, or nullptr.
  const Boundary* boundary(int i, int j) const;
};

PwaSystem parse_model(const nlohmann::json& doc);
PwaSystem parse_model_text(const std::string& text);
PwaSystem load_model(const std::string& path);

nlohmann::json to_json(const PwaSystem& sys);
// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
std::string digest(const PwaSystem& sys);

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
  double residual = 0.0;
  bool informational = false;
};

struct ValidationReport {
  std::vector<Check> checks;
  bool all_pass() const;
  const Check* find(const std::string& name) const;
};

ValidationReport validate(const PwaSystem& sys);

struct ContinuityResult {
  int i = 0;
  int j = 0;
  bool pass = false;
  bool same_B = false;
  double residual = 0.0;
  MatrixXd gmat;  // n x m_ij, solves gmat [E e] = [A_i - A_j, a_i - a_j]
};

constexpr double kContinuityTol = 1e-8;

std::vector<ContinuityResult> check_continuity(const PwaSystem& sys);
bool is_continuous(const PwaSystem& sys);

// (L_x, L_u) = (max_i ||A_i||_2, max_i ||B_i||_2); throws unless continuous.
std::pair<double, double> lipschitz_constants(const PwaSystem& sys);

bool is_hurwitz(const MatrixXd& A);

// JSON helpers shared by the other modules.
nlohmann::json matrix_json(const MatrixXd& M);
nlohmann::json vector_json(const VectorXd& v);

}  // namespace model
}  // namespace pwacert

#endif
