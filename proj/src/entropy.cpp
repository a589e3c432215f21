#include "ammac/entropy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>

#include "ammac/kernels.hpp"
#include "ammac/special.hpp"

namespace ammac {

namespace engine {

namespace {

// Unit-interval Gauss-Legendre nodes, cached per order.
const std::vector<QuadNode>& unit_gauss(int n) {
  static std::mutex mu;
  static std::array<std::vector<QuadNode>, 33> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (n < 1 || n > 32) throw ConfigError("unit_gauss supports orders 1..32");
  auto& slot = cache[static_cast<std::size_t>(n)];
  if (slot.empty()) slot = gauss_legendre(n, 0.0, 1.0);
  return slot;
}

thread_local std::vector<double> tl_scratch;

}  // namespace

void append_gl_panel(std::vector<QuadNode>& nodes, int ppp, double a, double b) {
  const auto& unit = unit_gauss(ppp);
  const double len = b - a;
  for (const auto& un : unit) nodes.push_back({a + un.x * len, un.w * len});
}

PolarWindow build_polar_window(const QuadConfig& cfg, double sigma2, int refine) {
  PolarWindow win;
  const double sigma = std::sqrt(sigma2);
  const double cut = cfg.radial_cutoff_sigmas * sigma;
  const int n_panels = std::max(2, static_cast<int>(std::ceil(cfg.radial_cutoff_sigmas / 3.0))) *
                       ((refine + 1) / 2);
  const int ppp = std::clamp(cfg.radial_nodes / 32, 4, 24);
  const int n_ang = std::clamp(cfg.angular_nodes * refine / 3, 24, 1024);
  const double h = cut / n_panels;
  for (int pnl = 0; pnl < n_panels; ++pnl) append_gl_panel(win.radial, ppp, pnl * h, (pnl + 1) * h);
  win.angular = build_angular_rule_n(n_ang);
  return win;
}

GainMixture gain_mixture(const ChannelParams& params, const BdDistribution& f_x2,
                         const QuadConfig& cfg, int refine) {
  GainMixture gm;
  if (f_x2.is_points()) {
    for (const auto& pt : f_x2.points().points) {
      gm.g.push_back(std::abs(params.a + pt.x));
      gm.u.push_back(pt.q);
    }
    return gm;
  }
  const AngularRule ang = build_angular_rule(cfg, refine);
  const double inv2pi = 1.0 / (2.0 * M_PI);
  for (const auto& rg : f_x2.circles().rings) {
    for (const auto& n : ang.nodes) {
      gm.g.push_back(std::abs(params.a + rg.rho * std::exp(cplx(0.0, n.x))));
      gm.u.push_back(rg.q * n.w * inv2pi);
    }
  }
  return gm;
}

double RadialMixture::log_density_2d(double rho) const {
  const double s2 = sigma2;
  const double log_norm = -std::log(M_PI * s2);
  auto& buf = tl_scratch;
  buf.resize(c.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double d = rho - c[j];
    const double lv = logw[j] + log_norm - d * d / s2 + std::log(i0_scaled(2.0 * rho * c[j] / s2));
    buf[j] = lv;
    if (lv > mx) mx = lv;
  }
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double lv : buf) s += std::exp(lv - mx);
  return mx + std::log(s);
}

double RadialMixture::c_max() const {
  double m = 0.0;
  for (double v : c) m = std::max(m, v);
  return m;
}

RadialMixture output_mixture(const RadialPmf& f_r, const GainMixture& gains, double sigma2) {
  RadialMixture mix;
  mix.sigma2 = sigma2;
  mix.c.reserve(f_r.points.size() * gains.g.size());
  mix.logw.reserve(f_r.points.size() * gains.g.size());
  for (const auto& pt : f_r.points) {
    const double logp = std::log(pt.p);
    for (std::size_t i = 0; i < gains.g.size(); ++i) {
      mix.c.push_back(pt.r * gains.g[i]);
      mix.logw.push_back(logp + std::log(gains.u[i]));
    }
  }
  return mix;
}

RadialRule build_windowed_radial_rule(const std::vector<double>& centers, double sigma,
                                      const QuadConfig& cfg, int refine) {
  if (centers.empty()) throw ConfigError("build_windowed_radial_rule: no centers");
  const double cut = cfg.radial_cutoff_sigmas * sigma;
  std::vector<double> cs = centers;
  std::sort(cs.begin(), cs.end());

  std::vector<std::pair<double, double>> segs;
  for (double c : cs) {
    const double lo = std::max(0.0, c - cut);
    const double hi = c + cut;
    if (!segs.empty() && lo <= segs.back().second)
      segs.back().second = std::max(segs.back().second, hi);
    else
      segs.emplace_back(lo, hi);
  }

  const long budget = static_cast<long>(cfg.radial_nodes) * refine;
  std::vector<long> panels(segs.size());
  long total_panels = 0;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    panels[i] = std::max<long>(1, static_cast<long>(std::ceil((segs[i].second - segs[i].first) / (3.0 * sigma))));
    total_panels += panels[i];
  }

  long ppp = budget / std::max<long>(1, total_panels);
  if (ppp > 24) {
    // Budget exceeds 24-point panels of the natural width: split panels
    // finer so a refined rule is genuinely finer.
    const double factor = static_cast<double>(budget) / (24.0 * static_cast<double>(total_panels));
    total_panels = 0;
    for (auto& np : panels) {
      np = static_cast<long>(std::ceil(static_cast<double>(np) * factor));
      total_panels += np;
    }
    ppp = std::clamp<long>(budget / std::max<long>(1, total_panels), 4, 24);
  } else if (ppp < 4) {
    // Deliberately coarse budget: thin the panels.
    const double scale = static_cast<double>(budget) / (4.0 * static_cast<double>(total_panels));
    if (scale < 1.0) {
      total_panels = 0;
      for (auto& np : panels) {
        np = std::max<long>(1, static_cast<long>(std::floor(static_cast<double>(np) * scale)));
        total_panels += np;
      }
    }
    ppp = std::clamp<long>(budget / std::max<long>(1, total_panels), 2, 24);
  }

  RadialRule rule;
  rule.points_per_panel = static_cast<int>(ppp);
  rule.r_max = segs.back().second;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const double h = (segs[i].second - segs[i].first) / static_cast<double>(panels[i]);
    for (long pnl = 0; pnl < panels[i]; ++pnl)
      append_gl_panel(rule.nodes, static_cast<int>(ppp), segs[i].first + pnl * h,
                      segs[i].first + (pnl + 1) * h);
  }
  return rule;
}

double radial_mixture_entropy(const RadialMixture& mix, const QuadConfig& cfg, int refine) {
  const double sigma = std::sqrt(mix.sigma2);
  const RadialRule rule = build_windowed_radial_rule(mix.c, sigma, cfg, refine);
  return kernels::indexed_sum(rule.nodes.size(), [&](std::size_t i) {
    const auto& n = rule.nodes[i];
    const double lg = mix.log_density_2d(n.x);
    if (!std::isfinite(lg)) return 0.0;
    const double f = std::exp(lg);
    return -n.w * 2.0 * M_PI * n.x * f * lg;
  });
}

double GaussMixture2D::log_density(cplx y) const {
  const double log_norm = -std::log(M_PI * sigma2);
  double mx = -std::numeric_limits<double>::infinity();
  auto& buf = tl_scratch;
  buf.resize(z.size());
  for (std::size_t m = 0; m < z.size(); ++m) {
    const double lv = logq[m] + log_norm - std::norm(y - z[m]) / sigma2;
    buf[m] = lv;
    if (lv > mx) mx = lv;
  }
  double s = 0.0;
  for (double lv : buf) s += std::exp(lv - mx);
  return mx + std::log(s);
}

double gauss_mixture_entropy_2d(const GaussMixture2D& mix, const QuadConfig& cfg, int refine) {
  // h = -sum_m q_m int g_m(y) ln f(y) dy, each term on a polar window about
  // its own center, so the rule never depends on how far apart the
  // components sit.
  const PolarWindow win = build_polar_window(cfg, mix.sigma2, refine);
  const double log_norm = -std::log(M_PI * mix.sigma2);
  double total = 0.0;
  for (std::size_t m = 0; m < mix.z.size(); ++m) {
    const cplx zm = mix.z[m];
    const double hm = kernels::indexed_sum(win.radial.size() * win.angular.nodes.size(),
                                           [&](std::size_t idx) {
      const std::size_t ir = idx / win.angular.nodes.size();
      const std::size_t it = idx % win.angular.nodes.size();
      const double rho = win.radial[ir].x;
      const double w = win.radial[ir].w * win.angular.nodes[it].w;
      const cplx y = zm + rho * std::exp(cplx(0.0, win.angular.nodes[it].x));
      const double gm = std::exp(log_norm - rho * rho / mix.sigma2);
      return -w * rho * gm * mix.log_density(y);
    });
    total += std::exp(mix.logq[m]) * hm;
  }
  return total;
}

GaussMixture2D conditional_mixture_given_r(double r, const ChannelParams& params,
                                           const BdPointMasses& pts) {
  GaussMixture2D mix;
  mix.sigma2 = params.sigma2;
  for (const auto& pt : pts.points) {
    mix.z.push_back((params.a + pt.x) * r);
    mix.logq.push_back(std::log(pt.q));
  }
  return mix;
}

LogFyTable::LogFyTable(RadialMixture mix, double rho_max, int n)
    : mix_(std::move(mix)), rho_max_(rho_max) {
  if (n < 16 || !(rho_max > 0.0)) throw ConfigError("LogFyTable: bad table spec");
  step_ = rho_max / static_cast<double>(n - 1);
  values_.resize(static_cast<std::size_t>(n));
  kernels::indexed_fill(values_.size(), values_, [&](std::size_t i) {
    return mix_.log_density_2d(static_cast<double>(i) * step_);
  });
}

double LogFyTable::operator()(double rho) const {
  if (values_.empty()) throw ConfigError("LogFyTable: empty table");
  const double t = rho / step_;
  const auto n = static_cast<std::ptrdiff_t>(values_.size());
  const auto i = static_cast<std::ptrdiff_t>(std::floor(t));
  if (i < 1 || i + 2 >= n) return mix_.log_density_2d(rho);
  // Catmull-Rom through the four neighbouring samples.
  const double u = t - static_cast<double>(i);
  const double p0 = values_[static_cast<std::size_t>(i - 1)];
  const double p1 = values_[static_cast<std::size_t>(i)];
  const double p2 = values_[static_cast<std::size_t>(i + 1)];
  const double p3 = values_[static_cast<std::size_t>(i + 2)];
  return p1 + 0.5 * u *
                  (p2 - p0 +
                   u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0)));
}

}  // namespace engine

// --- spec-level operations ------------------------------------------------

using engine::GainMixture;
using engine::GaussMixture2D;
using engine::RadialMixture;

double ring_density(double rho, double c, double sigma2) {
  if (rho < 0.0 || c < 0.0 || !(sigma2 > 0.0))
    throw DomainError("ring_density requires rho, c >= 0 and sigma2 > 0");
  if (rho == 0.0) return 0.0;
  const double d = rho - c;
  return (2.0 * rho / sigma2) * std::exp(-d * d / sigma2) * i0_scaled(2.0 * rho * c / sigma2);
}

double output_radial_density(double rho, const RadialPmf& f_r, const BdDistribution& f_x2,
                             const ChannelParams& params, const QuadConfig& cfg) {
  if (rho < 0.0) throw DomainError("output_radial_density requires rho >= 0");
  const RadialMixture mix =
      engine::output_mixture(f_r, engine::gain_mixture(params, f_x2, cfg), params.sigma2);
  return 2.0 * M_PI * rho * std::exp(mix.log_density_2d(rho));
}

double kernel_K_radial(double rho, double r, const BdDistribution& f_x2,
                       const ChannelParams& params, const QuadConfig& cfg) {
  if (rho < 0.0 || r < 0.0) throw DomainError("kernel_K_radial requires rho, r >= 0");
  const GainMixture gm = engine::gain_mixture(params, f_x2, cfg);
  double s = 0.0;
  for (std::size_t i = 0; i < gm.g.size(); ++i)
    s += gm.u[i] * ring_density(rho, gm.g[i] * r, params.sigma2);
  return s;
}

namespace {

EntropyReport checked_entropy(const QuadConfig& cfg, EvalMode mode, const char* what,
                              const std::function<double(int)>& eval) {
  if (mode == EvalMode::fast) {
    EntropyReport rep;
    rep.value_nats = eval(1);
    rep.radial_nodes_used = cfg.radial_nodes;
    rep.angular_nodes_used = cfg.angular_nodes;
    return rep;
  }
  double coarse = eval(1);
  double fine = eval(2);
  int refine = 2;
  while (true) {
    const double err = std::abs(fine - coarse);
    const double tol = cfg.rel_tol * std::max(1.0, std::abs(fine));
    if (err <= tol) {
      EntropyReport rep;
      rep.value_nats = fine;
      rep.est_abs_error = err;
      rep.radial_nodes_used = cfg.radial_nodes * refine;
      rep.angular_nodes_used = cfg.angular_nodes * refine;
      return rep;
    }
    if (refine >= 8)
      throw QuadratureDivergence(std::string(what) + ": refinement did not reach rel_tol");
    refine *= 2;
    coarse = fine;
    fine = eval(refine);
  }
}

}  // namespace

EntropyReport h_Y(const RadialPmf& f_r, const BdDistribution& f_x2, const ChannelParams& params,
                  const QuadConfig& cfg, EvalMode mode) {
  return checked_entropy(cfg, mode, "h_Y", [&](int refine) {
    const GainMixture gm = engine::gain_mixture(params, f_x2, cfg, refine);
    const RadialMixture mix = engine::output_mixture(f_r, gm, params.sigma2);
    return engine::radial_mixture_entropy(mix, cfg, refine);
  });
}

double cond_entropy_given_r(double r, const BdDistribution& f_x2, const ChannelParams& params,
                            const QuadConfig& cfg, int refine) {
  if (r < 0.0) throw DomainError("cond_entropy_given_r requires r >= 0");
  if (f_x2.is_points()) {
    const GaussMixture2D mix = engine::conditional_mixture_given_r(r, params, f_x2.points());
    return engine::gauss_mixture_entropy_2d(mix, cfg, refine);
  }
  RadialMixture mix;
  mix.sigma2 = params.sigma2;
  for (const auto& rg : f_x2.circles().rings) {
    mix.c.push_back(rg.rho * r);
    mix.logw.push_back(std::log(rg.q));
  }
  return engine::radial_mixture_entropy(mix, cfg, refine);
}

EntropyReport h_Y_given_X1(const RadialPmf& f_r, const BdDistribution& f_x2,
                           const ChannelParams& params, const QuadConfig& cfg, EvalMode mode) {
  return checked_entropy(cfg, mode, "h_Y_given_X1", [&](int refine) {
    double s = 0.0;
    for (const auto& pt : f_r.points)
      s += pt.p * cond_entropy_given_r(pt.r, f_x2, params, cfg, refine);
    return s;
  });
}

double kernel_conditional_entropy(double r, const BdDistribution& f_x2,
                                  const ChannelParams& params, const QuadConfig& cfg, int refine) {
  if (r < 0.0) throw DomainError("kernel_conditional_entropy requires r >= 0");
  const GainMixture gm = engine::gain_mixture(params, f_x2, cfg, refine);
  RadialMixture mix;
  mix.sigma2 = params.sigma2;
  for (std::size_t i = 0; i < gm.g.size(); ++i) {
    mix.c.push_back(gm.g[i] * r);
    mix.logw.push_back(std::log(gm.u[i]));
  }
  return engine::radial_mixture_entropy(mix, cfg, refine);
}

double h_Y_fixed_phase(const RadialPmf& f_r, const BdDistribution& f_x2,
                       const ChannelParams& params, const QuadConfig& cfg, int refine) {
  if (!f_x2.is_points())
    throw DomainError("h_Y_fixed_phase supports point-mass BD distributions only");
  GaussMixture2D mix;
  mix.sigma2 = params.sigma2;
  for (const auto& rp : f_r.points) {
    const double logp = std::log(rp.p);
    for (const auto& pt : f_x2.points().points) {
      mix.z.push_back((params.a + pt.x) * rp.r);
      mix.logq.push_back(logp + std::log(pt.q));
    }
  }
  return engine::gauss_mixture_entropy_2d(mix, cfg, refine);
}

double omega1(double r, const RadialPmf& f_r, const BdDistribution& f_x2,
              const ChannelParams& params, const QuadConfig& cfg) {
  if (r < 0.0) throw DomainError("omega1 requires r >= 0");
  const GainMixture gm = engine::gain_mixture(params, f_x2, cfg);
  const RadialMixture y_mix = engine::output_mixture(f_r, gm, params.sigma2);

  std::vector<double> kc(gm.g.size());
  for (std::size_t i = 0; i < gm.g.size(); ++i) kc[i] = gm.g[i] * r;
  const RadialRule rule = engine::build_windowed_radial_rule(kc, std::sqrt(params.sigma2), cfg);

  return kernels::indexed_sum(rule.nodes.size(), [&](std::size_t i) {
    const auto& n = rule.nodes[i];
    double k = 0.0;
    for (std::size_t j = 0; j < kc.size(); ++j)
      k += gm.u[j] * ring_density(n.x, kc[j], params.sigma2);
    if (k <= 0.0) return 0.0;
    return -n.w * k * y_mix.log_density_2d(n.x);
  });
}

double omega2(cplx x2, const RadialPmf& f_r, const BdDistribution& f_x2, const Weights& weights,
              const ChannelParams& params, const QuadConfig& cfg) {
  if (std::abs(x2) > 1.0 + 1e-12) throw DomainError("omega2 requires |x2| <= 1");
  weights.check();
  const GainMixture gm = engine::gain_mixture(params, f_x2, cfg);
  const RadialMixture y_mix = engine::output_mixture(f_r, gm, params.sigma2);
  const engine::PolarWindow win = engine::build_polar_window(cfg, params.sigma2, 1);

  const double log_norm = -std::log(M_PI * params.sigma2);
  const double mu_diff = weights.mu2 - weights.mu1;

  double total = 0.0;
  for (const auto& rp : f_r.points) {
    const cplx center = (params.a + x2) * rp.r;

    // Conditional density of Y given the full X1 = (r, 0).
    GaussMixture2D cond_pts;
    RadialMixture cond_rings;
    double ring_center = 0.0;
    if (f_x2.is_points()) {
      cond_pts = engine::conditional_mixture_given_r(rp.r, params, f_x2.points());
    } else {
      cond_rings.sigma2 = params.sigma2;
      for (const auto& rg : f_x2.circles().rings) {
        cond_rings.c.push_back(rg.rho * rp.r);
        cond_rings.logw.push_back(std::log(rg.q));
      }
      ring_center = params.a * rp.r;
    }

    const double term = kernels::indexed_sum(
        win.radial.size() * win.angular.nodes.size(), [&](std::size_t idx) {
          const std::size_t ir = idx / win.angular.nodes.size();
          const std::size_t it = idx % win.angular.nodes.size();
          const double rho = win.radial[ir].x;
          const double w = win.radial[ir].w * win.angular.nodes[it].w;
          const cplx y = center + rho * std::exp(cplx(0.0, win.angular.nodes[it].x));
          const double gz = std::exp(log_norm - rho * rho / params.sigma2);
          const double log_fy = y_mix.log_density_2d(std::abs(y));
          const double log_cond = f_x2.is_points()
                                      ? cond_pts.log_density(y)
                                      : cond_rings.log_density_2d(std::abs(y - ring_center));
          return -w * rho * gz * (weights.mu1 * log_fy + mu_diff * log_cond);
        });
    total += rp.p * term;
  }
  return total;
}

namespace {

double i_x1_y_given_x2_impl(const RadialPmf& f_r, const BdDistribution& f_x2,
                            const ChannelParams& params, const QuadConfig& cfg, int refine) {
  const double floor = gaussian_entropy_nats(params.sigma2);
  auto entropy_for_gain = [&](double gain) {
    RadialMixture mix;
    mix.sigma2 = params.sigma2;
    for (const auto& pt : f_r.points) {
      mix.c.push_back(gain * pt.r);
      mix.logw.push_back(std::log(pt.p));
    }
    return engine::radial_mixture_entropy(mix, cfg, refine);
  };
  double s = 0.0;
  if (f_x2.is_points()) {
    for (const auto& pt : f_x2.points().points)
      s += pt.q * (entropy_for_gain(std::abs(params.a + pt.x)) - floor);
    return s;
  }
  const AngularRule ang = build_angular_rule(cfg, refine);
  const double inv2pi = 1.0 / (2.0 * M_PI);
  for (const auto& rg : f_x2.circles().rings) {
    double ring_term = 0.0;
    for (const auto& n : ang.nodes)
      ring_term +=
          n.w * inv2pi *
          (entropy_for_gain(std::abs(params.a + rg.rho * std::exp(cplx(0.0, n.x)))) - floor);
    s += rg.q * ring_term;
  }
  return s;
}

}  // namespace

MutualInfos mutual_infos(const RadialPmf& f_r, const BdDistribution& f_x2,
                         const ChannelParams& params, const QuadConfig& cfg, EvalMode mode) {
  const double floor = gaussian_entropy_nats(params.sigma2);
  const EntropyReport hy = h_Y(f_r, f_x2, params, cfg, mode);
  const EntropyReport hyx1 = h_Y_given_X1(f_r, f_x2, params, cfg, mode);
  MutualInfos mi;
  mi.I_x1_y = hy.value_nats - hyx1.value_nats;
  mi.I_x2_y_given_x1 = hyx1.value_nats - floor;
  mi.I_joint = hy.value_nats - floor;
  if (mode == EvalMode::fast) {
    mi.I_x1_y_given_x2 = i_x1_y_given_x2_impl(f_r, f_x2, params, cfg, 1);
  } else {
    const EntropyReport rep = checked_entropy(cfg, mode, "I_x1_y_given_x2", [&](int refine) {
      return i_x1_y_given_x2_impl(f_r, f_x2, params, cfg, refine);
    });
    mi.I_x1_y_given_x2 = rep.value_nats;
  }
  return mi;
}

double objective(const Weights& weights, const RadialPmf& f_r, const BdDistribution& f_x2,
                 const ChannelParams& params, const QuadConfig& cfg, EvalMode mode) {
  weights.check();
  const MutualInfos mi = mutual_infos(f_r, f_x2, params, cfg, mode);
  if (weights.mu1 < weights.mu2) return weights.mu1 * mi.I_x1_y + weights.mu2 * mi.I_x2_y_given_x1;
  if (weights.mu1 > weights.mu2) {
    const double i_x2_y = mi.I_joint - mi.I_x1_y_given_x2;
    return weights.mu1 * mi.I_x1_y_given_x2 + weights.mu2 * i_x2_y;
  }
  return 0.5 * mi.I_joint;
}

}  // namespace ammac
