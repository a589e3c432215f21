#ifndef AMMAC_QUADRATURE_HPP
#define AMMAC_QUADRATURE_HPP

#include <cmath>
#include <vector>

#include "ammac/types.hpp"

namespace ammac {

struct QuadNode {
  double x = 0.0;
  double w = 0.0;
};

// Composite Gauss-Legendre rule on [0, r_max] for radial integrals
// int_0^rmax g(rho) d rho. Panels are sized so each spans a few noise
// standard deviations; refining the node budget splits the same interval
// into a finer rule.
struct RadialRule {
  std::vector<QuadNode> nodes;
  double r_max = 0.0;
  int points_per_panel = 0;  // polynomial exactness degree is 2*ppp - 1

  template <class F>
  double integrate(F&& g) const {
    double s = 0.0;
    double c = 0.0;
    for (const auto& n : nodes) {
      const double v = n.w * g(n.x);
      const double t = s + v;
      if (std::abs(s) >= std::abs(v))
        c += (s - t) + v;
      else
        c += (v - t) + s;
      s = t;
    }
    return s + c;
  }
};

// Equispaced midpoint rule on [-pi, pi); spectrally accurate for smooth
// 2*pi-periodic integrands. Weights sum to 2*pi.
struct AngularRule {
  std::vector<QuadNode> nodes;

  template <class F>
  double average(F&& g) const {  // (1/2pi) * integral
    double s = 0.0;
    for (const auto& n : nodes) s += n.w * g(n.x);
    return s / (2.0 * M_PI);
  }
};

// Gauss-Legendre nodes/weights on [a, b] by Newton iteration on the
// Legendre recurrence.
std::vector<QuadNode> gauss_legendre(int n, double a, double b);

// scale: characteristic signal radius; the rule covers
// [0, scale + cfg.radial_cutoff_sigmas * sigma]. refine multiplies the node
// budget (used by the self-convergence check).
RadialRule build_radial_rule(const QuadConfig& cfg, double scale, double sigma, int refine = 1);

AngularRule build_angular_rule(const QuadConfig& cfg, int refine = 1);
AngularRule build_angular_rule_n(int n);

}  // namespace ammac

#endif
