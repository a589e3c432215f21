// Benchmark of the OpenMP kernels against their serial references on the
// workloads that dominate runtime: the radial entropy integral, the 2-D
// Gaussian-mixture entropy, and a Monte Carlo batch. Prints wall times,
// speedup, and the max |parallel - serial| (expected: exactly 0).

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "ammac/entropy.hpp"
#include "ammac/kernels.hpp"
#include "ammac/mc.hpp"
#include "ammac/quadrature.hpp"

namespace {

using namespace ammac;

struct BenchResult {
  double serial_ms;
  double parallel_ms;
  double diff;
};

template <class FSerial, class FParallel>
BenchResult bench(int reps, FSerial&& fs, FParallel&& fp) {
  fs();
  fp();  // warm up
  double t0 = omp_get_wtime();
  double vs = 0.0;
  for (int i = 0; i < reps; ++i) vs = fs();
  const double ts = (omp_get_wtime() - t0) * 1e3 / reps;
  t0 = omp_get_wtime();
  double vp = 0.0;
  for (int i = 0; i < reps; ++i) vp = fp();
  const double tp = (omp_get_wtime() - t0) * 1e3 / reps;
  return {ts, tp, std::abs(vs - vp)};
}

void report(const char* name, const BenchResult& r) {
  std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   |diff| %.3g\n", name,
              r.serial_ms, r.parallel_ms, r.serial_ms / r.parallel_ms, r.diff);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  QuadConfig cfg;
  ChannelParams params{2.0, 1.0, 10.0};

  // radial entropy integrand over a mixture of rings
  engine::RadialMixture mix;
  mix.sigma2 = 1.0;
  for (int k = 0; k < 10; ++k) {
    mix.c.push_back(0.7 * (k + 1));
    mix.logw.push_back(std::log(0.1));
  }
  const RadialRule rule = engine::build_windowed_radial_rule(mix.c, 1.0, cfg, 4);
  auto radial_term = [&](std::size_t i) {
    const auto& n = rule.nodes[i];
    const double lg = mix.log_density_2d(n.x);
    return -n.w * 2.0 * M_PI * n.x * std::exp(lg) * lg;
  };
  report("radial mixture entropy",
         bench(
             20, [&] { return kernels::indexed_sum_serial(rule.nodes.size(), radial_term); },
             [&] { return kernels::indexed_sum_parallel(rule.nodes.size(), radial_term); }));

  // 2-D Gaussian-mixture entropy window sums
  engine::GaussMixture2D gm;
  gm.sigma2 = 1.0;
  for (int m = 0; m < 6; ++m) {
    gm.z.push_back(3.0 * std::exp(cplx(0.0, 1.04 * m)));
    gm.logq.push_back(std::log(1.0 / 6.0));
  }
  const engine::PolarWindow win = engine::build_polar_window(cfg, 1.0, 2);
  const std::size_t n_win = win.radial.size() * win.angular.nodes.size();
  auto window_term = [&](std::size_t idx) {
    const std::size_t ir = idx / win.angular.nodes.size();
    const std::size_t it = idx % win.angular.nodes.size();
    const double rho = win.radial[ir].x;
    const cplx y = gm.z[0] + rho * std::exp(cplx(0.0, win.angular.nodes[it].x));
    const double g = std::exp(-rho * rho / gm.sigma2) / (M_PI * gm.sigma2);
    return -win.radial[ir].w * win.angular.nodes[it].w * rho * g * gm.log_density(y);
  };
  report("gauss mixture window",
         bench(
             20, [&] { return kernels::indexed_sum_serial(n_win, window_term); },
             [&] { return kernels::indexed_sum_parallel(n_win, window_term); }));

  // Monte Carlo entropy batch (chunked kernel inside mc_h_Y)
  RadialPmf f_r{{{1.0, 0.4}, {3.0, 0.6}}};
  BdDistribution f_x2{BdPointMasses{{{cplx(1.0, 0.0), 0.5}, {cplx(-0.5, 0.3), 0.5}}}};
  QuadConfig mc_cfg = cfg;
  mc_cfg.mc_samples = 100000;
  auto mc_serial = [&] {
    omp_set_num_threads(1);
    const double v = mc::mc_h_Y(f_r, f_x2, params, mc_cfg).mean;
    omp_set_num_threads(omp_get_num_procs());
    return v;
  };
  auto mc_parallel = [&] { return mc::mc_h_Y(f_r, f_x2, params, mc_cfg).mean; };
  report("mc entropy batch", bench(5, mc_serial, mc_parallel));
  return 0;
}
