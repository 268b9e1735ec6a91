// OpenMP kernels against their serial reference paths.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "kamkdv/nashmoser.hpp"

using namespace kamkdv;

namespace {

KdVModel& model() {
  static KdVModel m = [] {
    SiteSet S({1, 3});
    Truncation tr;
    tr.nu = 2;
    tr.L = 7;
    tr.J = 24;
    return KdVModel(S, Params::make(1e-3, 0.1, {1.0, 1.0}, S), NonlinearitySpec::ux5(), tr);
  }();
  return m;
}

TorusEmbedding torus() {
  std::mt19937_64 rng(1);
  TorusEmbedding i = TorusEmbedding::trivial(2, 7, 24);
  i.z = random_real_field(2, 7, 24, rng, 1e-4, 0.5, true, {1, -1, 3, -3});
  return i;
}

void BM_eval_F(benchmark::State& st) {
  KdVModel& m = model();
  m.parallel = st.range(0) != 0;
  const TorusEmbedding i = torus();
  for (auto _ : st) benchmark::DoNotOptimize(m.eval_F(i, {0.0, 0.0}));
  m.parallel = true;
  st.SetLabel(st.range(0) ? "openmp" : "serial");
}

void BM_node_jacobians(benchmark::State& st) {
  KdVModel& m = model();
  m.parallel = st.range(0) != 0;
  const TorusEmbedding i = torus();
  for (auto _ : st) benchmark::DoNotOptimize(m.node_jacobians(i));
  m.parallel = true;
  st.SetLabel(st.range(0) ? "openmp" : "serial");
}

// The Monte-Carlo loop runs under OpenMP; one thread is the serial reference.
void BM_cantor(benchmark::State& st) {
  const int threads = st.range(0) ? omp_get_max_threads() : 1;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  SiteSet S({1, 3});
  CantorOptions o;
  o.samples = 2000;
  for (auto _ : st) benchmark::DoNotOptimize(cantor_measure(S, 1e-3, std::pow(1e-3, 2.1), 4.0, o));
  omp_set_num_threads(saved);
  st.SetLabel(st.range(0) ? "openmp" : "serial");
}

}  // namespace

BENCHMARK(BM_eval_F)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_node_jacobians)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cantor)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
