// Serial reference path against the OpenMP path for the sample-parallel kernels.
// Arg 0 selects the path: 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "dalab/conjugacy.hpp"
#include "dalab/foliation.hpp"
#include "dalab/lyapunov.hpp"
#include "dalab/rigidity.hpp"
#include "dalab/splitting.hpp"

using namespace dalab;

namespace {

DAMap post() {
  IMat3 m;
  m << 1, -1, 0, -1, 2, -1, 0, -1, 2;
  return make_da_map(make_linear_map(m), reference_shears(), 0.05, ConstructionTag::post_composed);
}

Execution mode(const benchmark::State& st) { return st.range(0) == 0 ? Execution::serial : Execution::parallel; }

void label(benchmark::State& st) {
  st.SetLabel(st.range(0) == 0 ? "serial" : "parallel x" + std::to_string(thread_count()));
}

void BM_ExponentField(benchmark::State& st) {
  const DAMap f = post();
  for (auto _ : st) benchmark::DoNotOptimize(exponent_field(f, 16, 20000, 1, 100, mode(st)));
  label(st);
}

void BM_ConeCertificate(benchmark::State& st) {
  const DAMap f = post();
  for (auto _ : st) benchmark::DoNotOptimize(cone_certificate(f, 24, 0.5, mode(st)));
  label(st);
}

void BM_PeriodicData(benchmark::State& st) {
  const DAMap f = post();
  for (auto _ : st) benchmark::DoNotOptimize(periodic_data_spread(f, 3, mode(st)));
  label(st);
}

void BM_ConjugacyResidual(benchmark::State& st) {
  const ConjugacyApprox c = solve_conjugacy(post(), 1e-12);
  for (auto _ : st) benchmark::DoNotOptimize(conjugacy_residual(c, 12, mode(st)));
  label(st);
}

void BM_UBD(benchmark::State& st) {
  const DAMap f = post();
  for (auto _ : st) benchmark::DoNotOptimize(ubd_statistic(f, Bundle::wu, {0.2, 0.1}, 4, 1, {}, mode(st)));
  label(st);
}

void BM_CenterGrowth(benchmark::State& st) {
  const DAMap f = post();
  for (auto _ : st) benchmark::DoNotOptimize(center_growth(f, 64, 200, 1, mode(st)));
  label(st);
}

}  // namespace

BENCHMARK(BM_ExponentField)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConeCertificate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PeriodicData)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConjugacyResidual)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UBD)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CenterGrowth)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
