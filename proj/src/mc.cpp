#include "ammac/mc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "ammac/entropy.hpp"

namespace ammac::mc {

namespace {

std::uint64_t splitmix_fin(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

// Lanes within one logical sample.
enum Lane : std::uint64_t {
  kLaneAmplitude = 0,
  kLaneBdIndex = 1,
  kLaneTheta1 = 2,
  kLaneTheta2 = 3,
  kLaneNoiseMag = 4,
  kLaneNoisePhase = 5,
  kLanesPerSample = 8,
};

struct DiscreteSampler {
  std::vector<double> cum;

  explicit DiscreteSampler(const std::vector<double>& probs) {
    cum.reserve(probs.size());
    double s = 0.0;
    for (double p : probs) {
      s += p;
      cum.push_back(s);
    }
    cum.back() = 1.0 + 1e-15;
  }

  std::size_t operator()(double u) const {
    for (std::size_t i = 0; i + 1 < cum.size(); ++i)
      if (u <= cum[i]) return i;
    return cum.size() - 1;
  }
};

struct SampleContext {
  const ChannelParams* params;
  const RadialPmf* f_r;
  const BdDistribution* f_x2;
  engine::RadialMixture y_mix;  // for ln f_Y
  DiscreteSampler amp_sampler;
  DiscreteSampler bd_sampler;
};

struct Draw {
  cplx x1;
  cplx x2;
  cplx y;
  double r;  // |x1|
};

Draw draw_sample(const SampleContext& ctx, const CounterRng& rng, std::uint64_t i) {
  const std::uint64_t base = i * kLanesPerSample;
  const auto& params = *ctx.params;
  const std::size_t k = ctx.amp_sampler(rng.uniform(base + kLaneAmplitude));
  const double r = ctx.f_r->points[k].r;
  const double theta1 = 2.0 * M_PI * rng.uniform(base + kLaneTheta1) - M_PI;
  const cplx x1 = r * std::exp(cplx(0.0, theta1));

  cplx x2;
  const std::size_t m = ctx.bd_sampler(rng.uniform(base + kLaneBdIndex));
  if (ctx.f_x2->is_points()) {
    x2 = ctx.f_x2->points().points[m].x;
  } else {
    const double theta2 = 2.0 * M_PI * rng.uniform(base + kLaneTheta2) - M_PI;
    x2 = ctx.f_x2->circles().rings[m].rho * std::exp(cplx(0.0, theta2));
  }

  const double nmag = std::sqrt(params.sigma2) *
                      std::sqrt(-std::log(rng.uniform(base + kLaneNoiseMag)));
  const double nph = 2.0 * M_PI * rng.uniform(base + kLaneNoisePhase) - M_PI;
  const cplx z = nmag * std::exp(cplx(0.0, nph));

  return Draw{x1, x2, (params.a + x2) * x1 + z, r};
}

double log_f_y(const SampleContext& ctx, cplx y) { return ctx.y_mix.log_density_2d(std::abs(y)); }

// ln f_{Y|X1}(y | x1) for the full complex x1.
double log_f_y_given_x1(const SampleContext& ctx, cplx y, cplx x1) {
  const auto& params = *ctx.params;
  if (ctx.f_x2->is_points()) {
    const auto& pts = ctx.f_x2->points().points;
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> lv(pts.size());
    const double log_norm = -std::log(M_PI * params.sigma2);
    for (std::size_t m = 0; m < pts.size(); ++m) {
      lv[m] = std::log(pts[m].q) + log_norm -
              std::norm(y - (params.a + pts[m].x) * x1) / params.sigma2;
      mx = std::max(mx, lv[m]);
    }
    double s = 0.0;
    for (double v : lv) s += std::exp(v - mx);
    return mx + std::log(s);
  }
  engine::RadialMixture mix;
  mix.sigma2 = params.sigma2;
  for (const auto& rg : ctx.f_x2->circles().rings) {
    mix.c.push_back(rg.rho * std::abs(x1));
    mix.logw.push_back(std::log(rg.q));
  }
  return mix.log_density_2d(std::abs(y - params.a * x1));
}

double log_f_z(const ChannelParams& params, cplx resid) {
  return -std::log(M_PI * params.sigma2) - std::norm(resid) / params.sigma2;
}

// ln f_{Y|X2}(y | x2): circularly symmetric ring mixture with gains |a+x2|.
double log_f_y_given_x2(const SampleContext& ctx, cplx y, cplx x2) {
  const auto& params = *ctx.params;
  engine::RadialMixture mix;
  mix.sigma2 = params.sigma2;
  const double gain = std::abs(params.a + x2);
  for (const auto& pt : ctx.f_r->points) {
    mix.c.push_back(gain * pt.r);
    mix.logw.push_back(std::log(pt.p));
  }
  return mix.log_density_2d(std::abs(y));
}

SampleContext make_context(const RadialPmf& f_r, const BdDistribution& f_x2,
                           const ChannelParams& params, const QuadConfig& cfg) {
  validate(params, f_r, f_x2);
  if (cfg.mc_samples < 10000) throw SeedError("mc estimators need mc_samples >= 1e4");
  std::vector<double> pr;
  for (const auto& pt : f_r.points) pr.push_back(pt.p);
  std::vector<double> q;
  if (f_x2.is_points())
    for (const auto& pt : f_x2.points().points) q.push_back(pt.q);
  else
    for (const auto& rg : f_x2.circles().rings) q.push_back(rg.q);
  return SampleContext{&params, &f_r, &f_x2,
                       engine::output_mixture(f_r, engine::gain_mixture(params, f_x2, cfg),
                                              params.sigma2),
                       DiscreteSampler(pr), DiscreteSampler(q)};
}

constexpr std::int64_t kChunk = 4096;

// Chunked map-reduce over samples: per-chunk partial sums are written into
// per-chunk slots so the parallel and serial schedules reduce identically.
template <class PerSample, int NVals>
void run_chunks(std::int64_t n, const PerSample& fn, std::array<double, NVals>& sums,
                std::array<double, NVals>& sumsqs) {
  const std::int64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::array<double, NVals>> csum(static_cast<std::size_t>(n_chunks));
  std::vector<std::array<double, NVals>> csumsq(static_cast<std::size_t>(n_chunks));
#pragma omp parallel for schedule(static)
  for (std::int64_t ch = 0; ch < n_chunks; ++ch) {
    std::array<double, NVals> s{};
    std::array<double, NVals> s2{};
    const std::int64_t lo = ch * kChunk;
    const std::int64_t hi = std::min(n, lo + kChunk);
    std::array<double, NVals> vals{};
    for (std::int64_t i = lo; i < hi; ++i) {
      fn(static_cast<std::uint64_t>(i), vals);
      for (int v = 0; v < NVals; ++v) {
        s[static_cast<std::size_t>(v)] += vals[static_cast<std::size_t>(v)];
        s2[static_cast<std::size_t>(v)] +=
            vals[static_cast<std::size_t>(v)] * vals[static_cast<std::size_t>(v)];
      }
    }
    csum[static_cast<std::size_t>(ch)] = s;
    csumsq[static_cast<std::size_t>(ch)] = s2;
  }
  sums.fill(0.0);
  sumsqs.fill(0.0);
  for (std::int64_t ch = 0; ch < n_chunks; ++ch) {
    for (int v = 0; v < NVals; ++v) {
      sums[static_cast<std::size_t>(v)] += csum[static_cast<std::size_t>(ch)][static_cast<std::size_t>(v)];
      sumsqs[static_cast<std::size_t>(v)] += csumsq[static_cast<std::size_t>(ch)][static_cast<std::size_t>(v)];
    }
  }
}

McEstimate finalize(double sum, double sumsq, std::int64_t n, std::uint64_t seed) {
  McEstimate est;
  est.n_samples = n;
  est.seed = seed;
  est.mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sumsq / static_cast<double>(n) - est.mean * est.mean);
  est.std_error = std::sqrt(var / static_cast<double>(n));
  return est;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix_fin(seed + kWeyl) ^ splitmix_fin(stream * kWeyl + 0x243F6A8885A308D3ULL)) {}

std::uint64_t CounterRng::raw(std::uint64_t counter) const {
  return splitmix_fin(key_ + counter * kWeyl);
}

double CounterRng::uniform(std::uint64_t counter) const {
  return (static_cast<double>(raw(counter) >> 11) + 1.0) * 0x1.0p-53;
}

McEstimate mc_h_Y(const RadialPmf& f_r, const BdDistribution& f_x2, const ChannelParams& params,
                  const QuadConfig& cfg) {
  const SampleContext ctx = make_context(f_r, f_x2, params, cfg);
  const CounterRng rng(cfg.mc_seed, 1);
  std::array<double, 1> s{};
  std::array<double, 1> s2{};
  auto per_sample = [&](std::uint64_t i, std::array<double, 1>& out) {
    const Draw d = draw_sample(ctx, rng, i);
    out[0] = -log_f_y(ctx, d.y);
  };
  run_chunks<decltype(per_sample), 1>(cfg.mc_samples, per_sample, s, s2);
  return finalize(s[0], s2[0], cfg.mc_samples, cfg.mc_seed);
}

McEstimate mc_h_Y_given_X1(const RadialPmf& f_r, const BdDistribution& f_x2,
                           const ChannelParams& params, const QuadConfig& cfg) {
  const SampleContext ctx = make_context(f_r, f_x2, params, cfg);
  const CounterRng rng(cfg.mc_seed, 2);
  std::array<double, 1> s{};
  std::array<double, 1> s2{};
  auto per_sample = [&](std::uint64_t i, std::array<double, 1>& out) {
    const Draw d = draw_sample(ctx, rng, i);
    out[0] = -log_f_y_given_x1(ctx, d.y, d.x1);
  };
  run_chunks<decltype(per_sample), 1>(cfg.mc_samples, per_sample, s, s2);
  return finalize(s[0], s2[0], cfg.mc_samples, cfg.mc_seed);
}

McMutualInfos mc_mutual_infos(const RadialPmf& f_r, const BdDistribution& f_x2,
                              const ChannelParams& params, const QuadConfig& cfg) {
  const SampleContext ctx = make_context(f_r, f_x2, params, cfg);
  const CounterRng rng(cfg.mc_seed, 3);
  std::array<double, 4> s{};
  std::array<double, 4> s2{};
  auto per_sample = [&](std::uint64_t i, std::array<double, 4>& out) {
    const Draw d = draw_sample(ctx, rng, i);
    const double lfy = log_f_y(ctx, d.y);
    const double lfyx1 = log_f_y_given_x1(ctx, d.y, d.x1);
    const double lfz = log_f_z(params, d.y - (params.a + d.x2) * d.x1);
    const double lfyx2 = log_f_y_given_x2(ctx, d.y, d.x2);
    out[0] = lfyx1 - lfy;   // I(X1; Y)
    out[1] = lfz - lfyx1;   // I(X2; Y | X1)
    out[2] = lfz - lfy;     // I(X1, X2; Y)
    out[3] = lfz - lfyx2;   // I(X1; Y | X2)
  };
  run_chunks<decltype(per_sample), 4>(cfg.mc_samples, per_sample, s, s2);
  McMutualInfos mi;
  mi.I_x1_y = finalize(s[0], s2[0], cfg.mc_samples, cfg.mc_seed);
  mi.I_x2_y_given_x1 = finalize(s[1], s2[1], cfg.mc_samples, cfg.mc_seed);
  mi.I_joint = finalize(s[2], s2[2], cfg.mc_samples, cfg.mc_seed);
  mi.I_x1_y_given_x2 = finalize(s[3], s2[3], cfg.mc_samples, cfg.mc_seed);
  return mi;
}

}  // namespace ammac::mc
