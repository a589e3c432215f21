#ifndef AMMAC_TYPES_HPP
#define AMMAC_TYPES_HPP

#include <complex>
#include <cstdint>
#include <variant>
#include <vector>

#include "ammac/errors.hpp"

namespace ammac {

using cplx = std::complex<double>;

inline constexpr double kProbSumTol = 1e-12;
inline constexpr double kPowerSlack = 1e-9;        // relative slack on E[r^2] <= P
inline constexpr double kDefaultMergeTol = 1e-4;   // amplitude units
inline constexpr double kProbPruneTol = 1e-10;

// Channel instance: Y = a*X1 + X1*X2 + Z with Z ~ CN(0, sigma2),
// E[|X1|^2] <= P and |X2| <= 1.
struct ChannelParams {
  double a = 1.0;       // direct-link gain, nonzero real
  double sigma2 = 1.0;  // noise variance, > 0
  double P = 1.0;       // PT average power budget, > 0

  double snr() const { return P / sigma2; }
  void check() const;  // throws ConstraintViolation on invalid fields
};

// PT input: X1 = r * exp(j*theta1), theta1 uniform on [-pi, pi) independent
// of the discrete amplitude r.
struct RadialPoint {
  double r = 0.0;
  double p = 0.0;
};

struct RadialPmf {
  std::vector<RadialPoint> points;

  double second_moment() const;
  double prob_sum() const;
};

// BD input, one of two support families.
struct BdPointMass {
  cplx x;
  double q = 0.0;
};

struct BdPointMasses {
  std::vector<BdPointMass> points;  // |x| <= 1
};

struct BdRing {
  double rho = 0.0;  // radius in [0, 1]
  double q = 0.0;
};

struct BdConcentricCircles {
  std::vector<BdRing> rings;  // X2 = rho * exp(j*theta2), theta2 uniform
};

struct BdDistribution {
  std::variant<BdPointMasses, BdConcentricCircles> value;

  bool is_points() const { return std::holds_alternative<BdPointMasses>(value); }
  const BdPointMasses& points() const { return std::get<BdPointMasses>(value); }
  const BdConcentricCircles& circles() const { return std::get<BdConcentricCircles>(value); }
  double prob_sum() const;
  std::size_t support_size() const;
};

// Weight vector on the Pareto sweep, mu1 + mu2 = 1.
struct Weights {
  double mu1 = 0.5;
  double mu2 = 0.5;

  void check() const;
};

// Achievable rate pair in bits per channel use.
struct RatePair {
  double R1 = 0.0;
  double R2 = 0.0;
};

// Quadrature / Monte Carlo resolution settings shared by every integral.
struct QuadConfig {
  int radial_nodes = 256;
  int angular_nodes = 96;
  double radial_cutoff_sigmas = 10.0;
  std::int64_t mc_samples = 200000;
  std::uint64_t mc_seed = 1;
  double rel_tol = 1e-6;

  void check() const;  // throws ConfigError
};

struct SolveDiagnostics {
  int outer_cycles = 0;
  int inner_iterations = 0;
  int restarts_used = 0;
  long objective_evals = 0;
};

// One optimized boundary point: distributions, rates, multiplier and the
// KKT residuals measured on the verification grids.
struct BoundarySolution {
  Weights weights;
  RadialPmf f_r;
  BdDistribution f_x2;
  RatePair rates;
  double objective_nats = 0.0;
  double lambda = 0.0;
  double kkt_residual_r = 0.0;
  double kkt_residual_x2 = 0.0;
  bool converged = false;
  SolveDiagnostics diagnostics;
};

// --- core operations ----------------------------------------------------

// Checks every type invariant plus the power budget of f_r against params.
// Throws ConstraintViolation / DegenerateDistribution.
void validate(const ChannelParams& params, const RadialPmf& f_r, const BdDistribution& f_x2);

void check_radial_pmf(const RadialPmf& f_r, double merge_tol = kDefaultMergeTol);
void check_bd_distribution(const BdDistribution& f_x2, double merge_tol = kDefaultMergeTol);

// Merges points closer than merge_tol (probability-weighted location), drops
// mass below the prune threshold and renormalizes. Idempotent.
RadialPmf normalize_and_merge(const RadialPmf& pmf, double merge_tol = kDefaultMergeTol);
BdDistribution normalize_and_merge(const BdDistribution& dist, double merge_tol = kDefaultMergeTol);

inline double nats_to_bits(double nats) { return nats / 0.6931471805599453; }
inline double bits_to_nats(double bits) { return bits * 0.6931471805599453; }

}  // namespace ammac

#endif
