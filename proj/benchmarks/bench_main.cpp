#include <benchmark/benchmark.h>

#include <leqg/kron.hpp>
#include <leqg/riccati.hpp>
#include <leqg/simulate.hpp>
#include <leqg/structured.hpp>
#include <leqg/synthesis.hpp>

using namespace leqg;

namespace {

// Dense synthesis cost grows like O((nd)^3); the structured route stays at
// the single-agent size plus an O((nd)^2) assembly.
void BM_dense_synthesis(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const SystemSpec spec = SystemSpec::basic(2, 0.0);
  const MultiAgentSystem sys = assemble(spec, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        full_info_synthesis(sys, RiskParameter{0.5}).X_n.X);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_dense_synthesis)->RangeMultiplier(2)->Range(1, 32)->Complexity();

void BM_structured_synthesis(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const SystemSpec spec = SystemSpec::basic(2, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rs_structured_X(spec, n, RiskParameter{0.5}).assembled());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_structured_synthesis)
    ->RangeMultiplier(2)
    ->Range(1, 32)
    ->Complexity();

void BM_solve_care(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const Matrix A = Matrix::Random(d, d);
  const Matrix B = Matrix::Random(d, d);
  const Matrix S = B * B.transpose() + 0.1 * Matrix::Identity(d, d);
  const Matrix C = Matrix::Random(d, d);
  const Matrix Qc = C * C.transpose() + 0.2 * Matrix::Identity(d, d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_care(A, S, Qc));
  }
}
BENCHMARK(BM_solve_care)->RangeMultiplier(2)->Range(2, 32);

void BM_kron_materialize(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const StructuredMatrix w =
      StructuredMatrix::ones_block(n, Matrix::Identity(4, 4));
  for (auto _ : state) {
    benchmark::DoNotOptimize(w.dense());
  }
}
BENCHMARK(BM_kron_materialize)->RangeMultiplier(4)->Range(4, 64);

void BM_simulate_steps(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.1), n);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.3});
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 1.0;
  cfg.seed = 1;
  const Vector x0 = Vector::Ones(sys.state_dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(sys, ctl, cfg, x0));
  }
  state.SetItemsProcessed(state.iterations() * 1000);  // steps per run
}
BENCHMARK(BM_simulate_steps)->RangeMultiplier(4)->Range(1, 16);

}  // namespace

BENCHMARK_MAIN();
