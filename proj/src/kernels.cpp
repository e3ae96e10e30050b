#include "pwacert/kernels.hpp"

#include <cmath>
#include <exception>
#include <mutex>

#include <omp.h>

namespace pwacert {
namespace kernels {

namespace {

void congruence_column(MatrixXd& G, int col, int row0, const MatrixXd& T, MatrixXd& M, MatrixXd& out) {
  const int k = static_cast<int>(T.cols());
  const double r2 = std::sqrt(2.0);
  int idx = row0;
  for (int j = 0; j < k; ++j) {
    for (int i = j; i < k; ++i, ++idx) {
      double v = G(idx, col);
      if (i != j) v /= r2;
      M(i, j) = v;
      M(j, i) = v;
    }
  }
  out.noalias() = T * M * T.transpose();
  const int kk = static_cast<int>(T.rows());
  idx = row0;
  for (int j = 0; j < kk; ++j) {
    for (int i = j; i < kk; ++i, ++idx) {
      G(idx, col) = (i == j) ? out(i, j) : out(i, j) * r2;
    }
  }
}

}  // namespace

void psd_congruence_serial(MatrixXd& G, int row0, const MatrixXd& T) {
  const int k = static_cast<int>(T.cols());
  MatrixXd M(k, k), out(T.rows(), T.rows());
  for (int c = 0; c < G.cols(); ++c) congruence_column(G, c, row0, T, M, out);
}

void psd_congruence_parallel(MatrixXd& G, int row0, const MatrixXd& T) {
  const int k = static_cast<int>(T.cols());
  const int ncols = static_cast<int>(G.cols());
#pragma omp parallel
  {
    MatrixXd M(k, k), out(T.rows(), T.rows());
#pragma omp for schedule(static)
    for (int c = 0; c < ncols; ++c) congruence_column(G, c, row0, T, M, out);
  }
}

MatrixXd gram_serial(const MatrixXd& G) {
  const int n = static_cast<int>(G.cols());
  MatrixXd H(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      H(i, j) = G.col(i).dot(G.col(j));
      H(j, i) = H(i, j);
    }
  return H;
}

MatrixXd gram_parallel(const MatrixXd& G) {
  const int n = static_cast<int>(G.cols());
  MatrixXd H(n, n);
#pragma omp parallel for schedule(dynamic, 4)
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      H(i, j) = G.col(i).dot(G.col(j));
      H(j, i) = H(i, j);
    }
  return H;
}

MatrixXd grid_serial(const std::function<double(double, double)>& f, const VectorXd& xs, const VectorXd& ys) {
  MatrixXd out(ys.size(), xs.size());
  for (int r = 0; r < ys.size(); ++r)
    for (int c = 0; c < xs.size(); ++c) out(r, c) = f(xs[c], ys[r]);
  return out;
}

MatrixXd grid_parallel(const std::function<double(double, double)>& f, const VectorXd& xs, const VectorXd& ys) {
  MatrixXd out(ys.size(), xs.size());
  const int nr = static_cast<int>(ys.size());
  std::exception_ptr err;
  std::mutex mu;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < nr; ++r) {
    try {
      for (int c = 0; c < xs.size(); ++c) out(r, c) = f(xs[c], ys[r]);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

void batch_serial(int n, const std::function<void(int)>& job) {
  for (int i = 0; i < n; ++i) job(i);
}

void batch_parallel(int n, const std::function<void(int)>& job) {
  std::exception_ptr err;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      job(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace kernels
}  // namespace pwacert
