#include <benchmark/benchmark.h>

#include <vector>

#include "phsis/kernels.hpp"
#include "phsis/simulate.hpp"

using namespace phsis;

namespace {

PhaseType bench_ph(int p) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  for (int l = 0; l < p; ++l) {
    S(l, (l + 1) % p) = 1.0;
    S(l, l) = -1.5;
  }
  return PhaseType::make(Eigen::VectorXd::Constant(p, 1.0 / p), S);
}

struct KronFixture {
  KroneckerBlocks blocks;
  std::vector<double> x, y;

  explicit KronFixture(int n) {
    const Graph g = connected_erdos_renyi(n, 10.0 / n, 1).graph;
    blocks = b_delta_blocks(g, bench_ph(10), 0.5);
    x.assign(static_cast<std::size_t>(blocks.dim()), 1.0);
    y.resize(x.size());
  }
};

void BM_KronApplySerial(benchmark::State& state) {
  KronFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    kernels::serial::kron_apply(f.blocks, f.x, f.y, 1.0);
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * f.blocks.dim());
}

void BM_KronApplyOpenMP(benchmark::State& state) {
  KronFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    kernels::kron_apply(f.blocks, f.x, f.y, 1.0);
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * f.blocks.dim());
  state.counters["threads"] = kernels::max_threads();
}

struct SpmvFixture {
  CsrMatrix m;
  std::vector<double> x, y;

  explicit SpmvFixture(int n) {
    m = KroneckerOperator(b_delta_blocks(connected_erdos_renyi(n, 10.0 / n, 1).graph, bench_ph(10), 0.5)).materialize();
    x.assign(static_cast<std::size_t>(m.rows), 1.0);
    y.resize(x.size());
  }
};

void BM_SpmvSerial(benchmark::State& state) {
  SpmvFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    kernels::serial::spmv(f.m, f.x, f.y, 1.0);
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * f.m.nnz());
}

void BM_SpmvOpenMP(benchmark::State& state) {
  SpmvFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    kernels::spmv(f.m, f.x, f.y, 1.0);
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * f.m.nnz());
  state.counters["threads"] = kernels::max_threads();
}

SimConfig ensemble_config(int runs) {
  const Graph g = connected_erdos_renyi(100, 0.05, 1).graph;
  SimConfig cfg(g, bench_ph(4));
  cfg.rate = 0.2;
  cfg.t_max = 20.0;
  cfg.runs = runs;
  return cfg;
}

void BM_EnsembleSerial(benchmark::State& state) {
  const SimConfig cfg = ensemble_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(cfg, Execution::serial));
  state.SetItemsProcessed(state.iterations() * cfg.runs);
}

void BM_EnsembleOpenMP(benchmark::State& state) {
  const SimConfig cfg = ensemble_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(cfg, Execution::parallel));
  state.SetItemsProcessed(state.iterations() * cfg.runs);
  state.counters["threads"] = kernels::max_threads();
}

}  // namespace

BENCHMARK(BM_KronApplySerial)->Arg(500)->Arg(5000)->UseRealTime();
BENCHMARK(BM_KronApplyOpenMP)->Arg(500)->Arg(5000)->UseRealTime();
BENCHMARK(BM_SpmvSerial)->Arg(500)->Arg(5000)->UseRealTime();
BENCHMARK(BM_SpmvOpenMP)->Arg(500)->Arg(5000)->UseRealTime();
BENCHMARK(BM_EnsembleSerial)->Arg(200)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EnsembleOpenMP)->Arg(200)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
