#include <cmath>

#include <benchmark/benchmark.h>

#include "pwacert/kernels.hpp"

using namespace pwacert::kernels;

namespace {

void BM_Congruence(benchmark::State& st, bool parallel) {
  const int k = static_cast<int>(st.range(0));
  const int rows = k * (k + 1) / 2;
  const MatrixXd G0 = MatrixXd::Random(rows, 2000), T = MatrixXd::Random(k, k);
  for (auto _ : st) {
    MatrixXd G = G0;
    parallel ? psd_congruence_parallel(G, 0, T) : psd_congruence_serial(G, 0, T);
    benchmark::DoNotOptimize(G.data());
  }
}

void BM_Gram(benchmark::State& st, bool parallel) {
  const MatrixXd G = MatrixXd::Random(static_cast<int>(st.range(0)), 400);
  for (auto _ : st) {
    MatrixXd H = parallel ? gram_parallel(G) : gram_serial(G);
    benchmark::DoNotOptimize(H.data());
  }
}

void BM_Grid(benchmark::State& st, bool parallel) {
  const int n = static_cast<int>(st.range(0));
  const VectorXd xs = VectorXd::LinSpaced(n, -15, 15);
  auto f = [](double x, double y) { return std::exp(-0.01 * (x - y) * (x - y)) + std::sin(x * y); };
  for (auto _ : st) {
    MatrixXd g = parallel ? grid_parallel(f, xs, xs) : grid_serial(f, xs, xs);
    benchmark::DoNotOptimize(g.data());
  }
}

void BM_Batch(benchmark::State& st, bool parallel) {
  std::vector<double> out(static_cast<size_t>(st.range(0)));
  auto job = [&](int i) {
    double s = 0.0;
    for (int k = 1; k < 20000; ++k) s += std::sin(i + 1e-3 * k) / k;
    out[i] = s;
  };
  for (auto _ : st) {
    parallel ? batch_parallel(static_cast<int>(out.size()), job) : batch_serial(static_cast<int>(out.size()), job);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Congruence, serial, false)->Arg(5)->Arg(15);
BENCHMARK_CAPTURE(BM_Congruence, parallel, true)->Arg(5)->Arg(15);
BENCHMARK_CAPTURE(BM_Gram, serial, false)->Arg(1000)->Arg(4000);
BENCHMARK_CAPTURE(BM_Gram, parallel, true)->Arg(1000)->Arg(4000);
BENCHMARK_CAPTURE(BM_Grid, serial, false)->Arg(301);
BENCHMARK_CAPTURE(BM_Grid, parallel, true)->Arg(301);
BENCHMARK_CAPTURE(BM_Batch, serial, false)->Arg(64);
BENCHMARK_CAPTURE(BM_Batch, parallel, true)->Arg(64);

BENCHMARK_MAIN();
