#ifndef AMMAC_OPTIMIZER_HPP
#define AMMAC_OPTIMIZER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ammac/types.hpp"

namespace ammac {

struct OptimConfig {
  int max_points_r = 16;
  int max_points_x2 = 8;
  int restarts = 2;
  double step_init = 0.25;  // initial line-search step, in units of sqrt(P)
  double kkt_tol = 1e-3;    // nats, on the Lagrangian marginal functionals
  int grid_r_points = 400;  // verification grid on [0, grid_r_span * sqrt(P)]
  double grid_r_span = 3.0;
  int grid_x2_radii = 24;  // polar verification grid on the closed unit disk
  int grid_x2_angles = 48;
  int max_outer = 12;
  int max_inner = 40;
  double convergence_tol = 1e-9;  // inner-ascent objective change, nats
  std::uint64_t seed = 1234;

  void check() const;
};

struct KktReport {
  double level = 0.0;          // probability-weighted mean of the functional on the support
  double max_violation = 0.0;  // max over the grid of (functional - level)
  double violation_r = 0.0;    // argmax location (radial report)
  cplx violation_x2;           // argmax location (disk report)
  double on_support_spread = 0.0;
  std::string cluster_diagnostic;  // disk report: where violations concentrate
};

// Weighted-sum-rate solve of the boundary problem for mu2 >= mu1. For
// mu1 > mu2 the optimum collapses to the sum-rate corner and is returned
// analytically without a search; mu1 = 0 is solved over concentric circles.
BoundarySolution solve_weighted(const ChannelParams& params, const Weights& weights,
                                const QuadConfig& cfg, const OptimConfig& ocfg,
                                const BoundarySolution* warm_start = nullptr);

// BD-max point: PT fixed at the constant envelope sqrt(P), BD optimized over
// concentric circles. Independent of the direct-link gain.
BoundarySolution solve_bd_max(const ChannelParams& params, const QuadConfig& cfg,
                              const OptimConfig& ocfg);

// Theorem-2 verification: L(r) = omega1(r) + (mu2/mu1 - 1) h(Y|r) -
// (lambda/mu1) r^2 scanned over the radial grid. Requires mu1 > 0.
// use_kernel_entropy switches h(Y|r) to the phase-marginalized variant.
// grid_out, when given, receives (r, L(r)) rows.
KktReport kkt_check_r(const BoundarySolution& sol, const ChannelParams& params,
                      const QuadConfig& cfg, const OptimConfig& ocfg,
                      bool use_kernel_entropy = false,
                      std::vector<std::pair<double, double>>* grid_out = nullptr);

// T1-condition verification: omega2 scanned over the polar disk grid.
// Requires a point-mass BD distribution. grid_out rows are (x2, omega2).
KktReport kkt_check_x2(const BoundarySolution& sol, const ChannelParams& params,
                       const QuadConfig& cfg, const OptimConfig& ocfg,
                       std::vector<std::pair<cplx, double>>* grid_out = nullptr);

// Radius-scan verification for concentric-circle solutions at mu1 = 0:
// the marginal functional of a candidate ring scanned over [0, 1].
KktReport kkt_check_rings(const BoundarySolution& sol, const ChannelParams& params,
                          const QuadConfig& cfg, const OptimConfig& ocfg,
                          std::vector<std::pair<double, double>>* grid_out = nullptr);

struct BoundaryTrace {
  std::vector<BoundarySolution> points;  // one per schedule weight
  std::vector<RatePair> hull;            // Pareto upper-right hull, R1 nondecreasing
  double c1_bits = 0.0;
  double bd_max_bits = 0.0;
};

// Sweeps mu1 over the schedule (values in [0, 0.5]), warm-starting each
// solve from its neighbour, and closes the region with the analytic corner
// (C1, 0) and the BD-max anchor.
BoundaryTrace trace_boundary(const ChannelParams& params, const std::vector<double>& mu1_schedule,
                             const QuadConfig& cfg, const OptimConfig& ocfg);

std::vector<double> default_mu1_schedule(int n = 21);

// Upper-right convex hull of a rate-pair cloud: R1 strictly increasing,
// R2 nonincreasing.
std::vector<RatePair> pareto_hull(std::vector<RatePair> pts);

// True when `pt` lies weakly inside the region under the hull polyline.
bool hull_dominates(const std::vector<RatePair>& hull, const RatePair& pt, double tol = 1e-9);

}  // namespace ammac

#endif
