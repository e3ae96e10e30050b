#ifndef PWACERT_KERNELS_HPP
#define PWACERT_KERNELS_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

// Hot loops with a serial reference and an OpenMP twin. Both must agree to
// rounding; tests compare them and bench_kernels times them.
namespace pwacert {
namespace kernels {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Rows [row0, row0 + k(k+1)/2) of every column of G hold svec(M); they are
// overwritten with svec(T M T').
void psd_congruence_serial(MatrixXd& G, int row0, const MatrixXd& T);
void psd_congruence_parallel(MatrixXd& G, int row0, const MatrixXd& T);

// H = G' G
MatrixXd gram_serial(const MatrixXd& G);
MatrixXd gram_parallel(const MatrixXd& G);

// out(r, c) = f(xs[c], ys[r])
MatrixXd grid_serial(const std::function<double(double, double)>& f,
                     const VectorXd& xs, const VectorXd& ys);
MatrixXd grid_parallel(const std::function<double(double, double)>& f,
                       const VectorXd& xs, const VectorXd& ys);

// Calls job(i) for i in [0, n). The first exception is rethrown after the loop.
void batch_serial(int n, const std::function<void(int)>& job);
void batch_parallel(int n, const std::function<void(int)>& job);

}  // namespace kernels
}  // namespace pwacert

#endif
