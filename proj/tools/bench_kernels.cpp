// Serial-vs-OpenMP timings for the hot kernels plus one end-to-end fusion
// fit. The parallel paths are bitwise identical to the serial references
// (verified in tests/unit/test_kernels.cpp); this target only measures them.

#include <chrono>
#include <cstdio>
#include <functional>

#include "curvefuse/fusion.hpp"
#include "curvefuse/kernels.hpp"
#include "curvefuse/rng.hpp"
#include "curvefuse/simbench.hpp"

#ifdef CURVEFUSE_HAVE_OPENMP
#include <omp.h>
#endif

namespace {

using curvefuse::Matrix;
namespace kernels = curvefuse::kernels;

double time_ms(const std::function<void()>& fn, int repeats) {
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / repeats;
}

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  curvefuse::RandomStream stream(seed);
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = stream.normal();
  return out;
}

void bench_pair_step(int n, int jn, int threads, int repeats) {
  kernels::PairIndex pairs(n);
  Matrix beta = random_matrix(n, jn, 11);
  Matrix delta_s = random_matrix(pairs.count(), jn, 22);
  Matrix dual_s = random_matrix(pairs.count(), jn, 33);
  Matrix delta_p = delta_s, dual_p = dual_s;

  double serial = time_ms(
      [&] { kernels::pair_prox_dual_step_serial(beta, pairs, 0.5, 3.0, 1.0, delta_s, dual_s); },
      repeats);
  double parallel = time_ms(
      [&] { kernels::pair_prox_dual_step(beta, pairs, 0.5, 3.0, 1.0, delta_p, dual_p, threads); },
      repeats);
  std::printf("pair_prox_dual_step  n=%-4d Jn=%-3d  serial %8.3f ms   omp(%d) %8.3f ms   x%.2f\n",
              n, jn, serial, threads, parallel, serial / parallel);
}

void bench_gram(int rows, int cols, int threads, int repeats) {
  Matrix x = random_matrix(rows, cols, 44);
  double serial = time_ms([&] { kernels::gram_serial(x); }, repeats);
  double parallel = time_ms([&] { kernels::gram(x, threads); }, repeats);
  std::printf("gram                 %4dx%-4d      serial %8.3f ms   omp(%d) %8.3f ms   x%.2f\n",
              rows, cols, serial, threads, parallel, serial / parallel);
}

void bench_fit(int group_size, int threads, int repeats) {
  curvefuse::ScenarioConfig scenario;
  scenario.group_size = group_size;
  curvefuse::SyntheticDataset ds = curvefuse::generate(scenario, 99);
  curvefuse::CurveSet curves = curvefuse::curves_from_dataset(ds.data, scenario.correction_mode);
  auto designs = curvefuse::build_designs(curves, scenario.spline);

  curvefuse::FusionConfig serial_cfg = scenario.fusion;
  serial_cfg.threads = 1;
  curvefuse::FusionConfig parallel_cfg = scenario.fusion;
  parallel_cfg.threads = threads;

  double serial = time_ms(
      [&] { curvefuse::fit_fixed(curves, designs, 0.1, 1.0, serial_cfg); }, repeats);
  double parallel = time_ms(
      [&] { curvefuse::fit_fixed(curves, designs, 0.1, 1.0, parallel_cfg); }, repeats);
  std::printf("fit_fixed            n=%-4d          serial %8.3f ms   omp(%d) %8.3f ms   x%.2f\n",
              2 * group_size, serial, threads, parallel, serial / parallel);
}

}  // namespace

int main() {
#ifdef CURVEFUSE_HAVE_OPENMP
  const int threads = omp_get_max_threads() > 1 ? omp_get_max_threads() : 4;
  std::printf("OpenMP enabled, omp_get_max_threads() = %d\n\n", omp_get_max_threads());
#else
  const int threads = 1;
  std::printf("OpenMP disabled at build time; parallel calls fall back to serial\n\n");
#endif

  bench_pair_step(40, 6, threads, 50);
  bench_pair_step(80, 6, threads, 50);
  bench_pair_step(160, 12, threads, 20);
  bench_gram(240, 10, threads, 200);
  bench_gram(240, 27, threads, 100);
  bench_gram(2000, 27, threads, 20);
  bench_fit(20, threads, 3);
  bench_fit(40, threads, 3);
  return 0;
}
