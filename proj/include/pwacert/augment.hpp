#ifndef PWACERT_AUGMENT_HPP
#define PWACERT_AUGMENT_HPP

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pwacert/model.hpp"

namespace pwacert {
namespace augment {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Cell = std::pair<int, int>;

// Two-copy system on the product cell X_i x X_j with state col(x, x~, 1).
struct AugmentedCell {
  int i = 0;
  int j = 0;
  MatrixXd Abar;  // (2n+1) x (2n+1)
  MatrixXd Bbar;  // (2n+1) x 2p
  MatrixXd Cbar;  // m x (2n+1)
  MatrixXd Dbar;  // m x 2p
  MatrixXd Fbar;  // (2n+1) x p
  MatrixXd Gbar;  // (r_i + r_j) x (2n+1)
};

AugmentedCell augmented_cell(const model::PwaSystem& sys, int i, int j);

// [[P, -P, 0], [-P, P, 0], [0, 0, 0]]
MatrixXd lift_diagonal(const MatrixXd& P);
MatrixXd jbar(int n);
MatrixXd ibar(int p);
// Swaps the two state copies, keeps the constant coordinate.
MatrixXd swap_permutation(int n);

VectorXd stack_state(const VectorXd& x, const VectorXd& xt);

MatrixXd boundary_matrix(const model::PwaSystem& sys, Cell a, Cell b);

struct Adjacency {
  Cell a;
  Cell b;
  MatrixXd Ebar;
};

struct CellPairAdjacency {
  std::vector<Adjacency> pairs;
};

// Pairwise LP-nonemptiness of X_i cap X_j, 1-based indices (entry [0] unused).
std::vector<std::vector<bool>> region_touch(const model::PwaSystem& sys);

CellPairAdjacency augmented_adjacency(const model::PwaSystem& sys);

// Points col(x, x~, 1) of (X_i cap X_k) x (X_j cap X_l).
std::vector<VectorXd> sample_intersection(const model::PwaSystem& sys, Cell a, Cell b, int count, unsigned seed,
                                          double box = 50.0);

}  // namespace augment
}  // namespace pwacert

#endif
