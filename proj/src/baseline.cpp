#include "ammac/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ammac/entropy.hpp"
#include "ammac/kernels.hpp"
#include "ammac/quadrature.hpp"
#include "ammac/special.hpp"

namespace ammac {

namespace {

// E[g(r)] over the Rayleigh amplitude with E[r^2] = P, written as a
// composite Gauss-Legendre integral in w = r/sqrt(P):
// int_0^inf 2 w e^{-w^2} g(sqrt(P) w) dw. The w tail beyond 6 is ~2e-16.
template <class G>
double rayleigh_expectation(double P, int min_nodes, const G& g, int refine = 1) {
  const double w_max = 6.0;
  const int panels = 12 * refine;
  const int ppp = std::max(8, min_nodes / panels + 1);
  std::vector<QuadNode> nodes;
  const double h = w_max / panels;
  for (int pnl = 0; pnl < panels; ++pnl)
    engine::append_gl_panel(nodes, ppp, pnl * h, (pnl + 1) * h);
  const double sp = std::sqrt(P);
  return kernels::indexed_sum(nodes.size(), [&](std::size_t i) {
    const double w = nodes[i].x;
    return nodes[i].w * 2.0 * w * std::exp(-w * w) * g(sp * w);
  });
}

// Composite GL rule on [0, r_max] with panels about `panel_w` wide.
std::vector<QuadNode> plain_rule(double r_max, double panel_w, int ppp) {
  const int panels = std::max(2, static_cast<int>(std::ceil(r_max / panel_w)));
  std::vector<QuadNode> nodes;
  const double h = r_max / panels;
  for (int pnl = 0; pnl < panels; ++pnl)
    engine::append_gl_panel(nodes, std::clamp(ppp, 4, 24), pnl * h, (pnl + 1) * h);
  return nodes;
}

// Variances of the theta2-conditioned Gaussians s(theta) = P|a+e^{j t}|^2 + sigma2.
std::vector<std::pair<double, double>> scale_mixture(const ChannelParams& params,
                                                     const QuadConfig& cfg, int refine) {
  const AngularRule ang = build_angular_rule(cfg, refine);
  std::vector<std::pair<double, double>> sw;  // (s, weight/2pi)
  for (const auto& n : ang.nodes) {
    const double gain = std::abs(params.a + std::exp(cplx(0.0, n.x)));
    sw.emplace_back(params.P * gain * gain + params.sigma2, n.w / (2.0 * M_PI));
  }
  return sw;
}

// h(Y) for the baseline pair: Y | theta2 ~ CN(0, s(theta2)), so f_Y is a
// circularly symmetric Gaussian scale mixture.
double baseline_h_y(const ChannelParams& params, const QuadConfig& cfg, int refine) {
  const auto sw = scale_mixture(params, cfg, refine);
  double s_min = sw.front().first;
  double s_max = sw.front().first;
  for (const auto& [s, w] : sw) {
    s_min = std::min(s_min, s);
    s_max = std::max(s_max, s);
  }
  const auto nodes = plain_rule(cfg.radial_cutoff_sigmas * std::sqrt(s_max),
                                3.0 * std::sqrt(s_min), 12 * refine);
  return kernels::indexed_sum(nodes.size(), [&](std::size_t i) {
    const double rho = nodes[i].x;
    double f = 0.0;
    for (const auto& [s, w] : sw) f += w / (M_PI * s) * std::exp(-rho * rho / s);
    if (f <= 0.0) return 0.0;
    return -nodes[i].w * 2.0 * M_PI * rho * f * std::log(f);
  });
}

// Conditional entropy h(Y | X1 = x1) for the baseline pair: a noisy ring of
// radius |x1| about a*x1.
double baseline_ring_entropy(double r, double sigma2, const QuadConfig& cfg, int refine) {
  engine::RadialMixture mix;
  mix.sigma2 = sigma2;
  mix.c = {r};
  mix.logw = {0.0};
  return engine::radial_mixture_entropy(mix, cfg, refine);
}

double r1_base_generic(const ChannelParams& params, const QuadConfig& cfg, int refine) {
  const double hy = baseline_h_y(params, cfg, refine);
  const double hyx1 = rayleigh_expectation(params.P, 64, [&](double r) {
    return baseline_ring_entropy(r, params.sigma2, cfg, refine);
  });
  return hy - hyx1;
}

// The printed formula, evaluated verbatim: the kappa kernel inside the
// first term and the kappa-bar marginal inside the second carry their own
// normalizations which cancel between the two terms.
double r1_base_literal(const ChannelParams& params, const QuadConfig& cfg, int refine) {
  const double s2 = params.sigma2;
  auto log_kappa = [&](double rho, double r) {
    const double d = rho - r;
    return -d * d / s2 + std::log(i0_scaled(2.0 * rho * r / s2));
  };

  const double first = rayleigh_expectation(params.P, 64, [&](double r) {
    const RadialRule rule = engine::build_windowed_radial_rule({r}, std::sqrt(s2), cfg, refine);
    return rule.integrate([&](double rho) {
      const double lk = log_kappa(rho, r);
      return (2.0 * rho / s2) * std::exp(lk) * (lk + std::log(2.0 / s2));
    });
  });

  const auto sw = scale_mixture(params, cfg, refine);
  double s_min = sw.front().first;
  double s_max = sw.front().first;
  for (const auto& [s, w] : sw) {
    s_min = std::min(s_min, s);
    s_max = std::max(s_max, s);
  }
  const auto nodes = plain_rule(cfg.radial_cutoff_sigmas * std::sqrt(s_max),
                                3.0 * std::sqrt(s_min), 12 * refine);
  const double second = kernels::indexed_sum(nodes.size(), [&](std::size_t i) {
    const double rho = nodes[i].x;
    double kb = 0.0;
    for (const auto& [s, w] : sw) kb += 2.0 * w / s * std::exp(-rho * rho / s);
    if (kb <= 0.0) return 0.0;
    return nodes[i].w * rho * kb * std::log(kb);
  });

  return first - second;
}

}  // namespace

double c_sum(const ChannelParams& params) {
  params.check();
  const double g = 1.0 + std::abs(params.a);
  return std::log2(1.0 + params.P * g * g / params.sigma2);
}

double c_sum_paper_literal(const ChannelParams& params) {
  params.check();
  const double g = 1.0 + params.a;
  return std::log2(1.0 + params.P * g * g / params.sigma2);
}

double c1(const ChannelParams& params) { return c_sum(params); }

double r1_lower(const ChannelParams& params) {
  params.check();
  return std::log2(1.0 + params.P * params.a * params.a / (params.P + params.sigma2));
}

double r1_base(const ChannelParams& params, const QuadConfig& cfg) {
  params.check();
  cfg.check();
  const double coarse = r1_base_generic(params, cfg, 1);
  const double generic = r1_base_generic(params, cfg, 2);
  if (std::abs(generic - coarse) > cfg.rel_tol * std::max(1.0, std::abs(generic)))
    throw QuadratureDivergence("r1_base: refinement did not reach rel_tol");
  const double literal = r1_base_literal(params, cfg, 2);
  if (std::abs(generic - literal) > 5.0 * cfg.rel_tol * std::max(1.0, std::abs(generic)))
    throw FormulaMismatch("r1_base: entropy-difference and literal-formula paths disagree",
                          nats_to_bits(generic), nats_to_bits(literal));
  return nats_to_bits(generic);
}

double r2_base(const ChannelParams& params, const QuadConfig& cfg) {
  params.check();
  cfg.check();
  const double floor = gaussian_entropy_nats(params.sigma2);
  auto eval = [&](int refine) {
    return rayleigh_expectation(params.P, 64, [&](double r) {
      return baseline_ring_entropy(r, params.sigma2, cfg, refine) - floor;
    });
  };
  const double coarse = eval(1);
  const double fine = eval(2);
  if (std::abs(fine - coarse) > cfg.rel_tol * std::max(1.0, std::abs(fine)))
    throw QuadratureDivergence("r2_base: refinement did not reach rel_tol");
  return nats_to_bits(fine);
}

double r2_asym(const ChannelParams& params, const QuadConfig& cfg) {
  params.check();
  cfg.check();
  const double s2 = params.sigma2;
  const double nats = rayleigh_expectation(params.P, 64, [&](double r) {
    const double t = r * r / s2;
    const double lo = t;
    if (t <= 0.5) return lo;
    const double hi = 0.5 * std::log(4.0 * M_PI * r * r / (M_E * s2));
    if (t >= 2.0) return hi;
    const double w = (t - 0.5) / 1.5;
    return (1.0 - w) * lo + w * hi;
  });
  return nats_to_bits(nats);
}

BaselineReport baseline_report(const ChannelParams& params, const QuadConfig& cfg) {
  BaselineReport rep;
  rep.snr_db = 10.0 * std::log10(params.snr());
  rep.a = params.a;
  rep.c_sum = c_sum(params);
  rep.c1 = c1(params);
  rep.r1_lower = r1_lower(params);
  rep.r1_base = r1_base(params, cfg);
  rep.r2_base = r2_base(params, cfg);
  rep.r2_asym = r2_asym(params, cfg);
  rep.bd_max_ref = nats_to_bits(
      baseline_ring_entropy(std::sqrt(params.P), params.sigma2, cfg, 2) -
      gaussian_entropy_nats(params.sigma2));
  return rep;
}

}  // namespace ammac
