#include "ammac/quadrature.hpp"

#include <cmath>

namespace ammac {

std::vector<QuadNode> gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ConfigError("gauss_legendre needs n >= 1");
  std::vector<QuadNode> out(static_cast<std::size_t>(n));
  const int m = (n + 1) / 2;
  const double xm = 0.5 * (b + a);
  const double xl = 0.5 * (b - a);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    out[static_cast<std::size_t>(i)] = {xm - xl * z, 2.0 * xl / ((1.0 - z * z) * pp * pp)};
    out[static_cast<std::size_t>(n - 1 - i)] = {xm + xl * z, out[static_cast<std::size_t>(i)].w};
  }
  return out;
}

RadialRule build_radial_rule(const QuadConfig& cfg, double scale, double sigma, int refine) {
  cfg.check();
  if (!(scale >= 0.0) || !(sigma > 0.0) || refine < 1)
    throw ConfigError("build_radial_rule: scale >= 0, sigma > 0, refine >= 1 required");
  const double r_max = scale + cfg.radial_cutoff_sigmas * sigma;
  const long budget = static_cast<long>(cfg.radial_nodes) * refine;

  // Panels of roughly 3 noise deviations, limited by the node budget so a
  // deliberately coarse config is honoured (used as an error injection).
  long n_panels = static_cast<long>(std::ceil(r_max / (3.0 * sigma)));
  n_panels = std::min(std::max<long>(1, n_panels), std::max<long>(1, budget / 8));
  long ppp = std::max<long>(2, budget / n_panels);
  if (ppp > 24) {
    n_panels = std::max(n_panels, budget / 24);
    ppp = std::max<long>(2, std::min<long>(24, budget / n_panels));
  }

  RadialRule rule;
  rule.r_max = r_max;
  rule.points_per_panel = static_cast<int>(ppp);
  rule.nodes.reserve(static_cast<std::size_t>(n_panels * ppp));
  const double h = r_max / static_cast<double>(n_panels);
  for (long pnl = 0; pnl < n_panels; ++pnl) {
    auto part = gauss_legendre(static_cast<int>(ppp), pnl * h, (pnl + 1) * h);
    rule.nodes.insert(rule.nodes.end(), part.begin(), part.end());
  }
  return rule;
}

AngularRule build_angular_rule(const QuadConfig& cfg, int refine) {
  cfg.check();
  return build_angular_rule_n(cfg.angular_nodes * refine);
}

AngularRule build_angular_rule_n(int n) {
  if (n < 4) throw ConfigError("angular rule needs >= 4 nodes");
  AngularRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  const double h = 2.0 * M_PI / n;
  for (int i = 0; i < n; ++i) rule.nodes[static_cast<std::size_t>(i)] = {-M_PI + (i + 0.5) * h, h};
  return rule;
}

}  // namespace ammac
