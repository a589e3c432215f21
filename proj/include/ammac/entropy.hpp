#ifndef AMMAC_ENTROPY_HPP
#define AMMAC_ENTROPY_HPP

#include <cmath>
#include <vector>

#include "ammac/quadrature.hpp"
#include "ammac/types.hpp"

namespace ammac {

// --- shared low-level machinery -----------------------------------------
//
// With theta1 uniform (and theta2 uniform on BD rings) every output-side
// density is a mixture of noisy rings, circularly symmetric, so entropies
// reduce to 1-D radial integrals. Conditioning on the full X1 = (r, theta1)
// instead gives finite complex Gaussian mixtures handled by 2-D polar
// quadrature. Quadrature nodes are placed in windows around the mixture
// components so sparse high-SNR configurations stay resolved.

namespace engine {

// Discretized distribution of the composite gain |a + X2|.
struct GainMixture {
  std::vector<double> g;  // gains >= 0
  std::vector<double> u;  // weights, sum to 1
};

GainMixture gain_mixture(const ChannelParams& params, const BdDistribution& f_x2,
                         const QuadConfig& cfg, int refine = 1);

// Polar quadrature covering a disk of cutoff_sigmas noise deviations,
// shared by the Gaussian-window integrals.
struct PolarWindow {
  std::vector<QuadNode> radial;
  AngularRule angular;
};

PolarWindow build_polar_window(const QuadConfig& cfg, double sigma2, int refine = 1);

void append_gl_panel(std::vector<QuadNode>& nodes, int ppp, double a, double b);

// Circularly symmetric mixture of noisy rings; log_density_2d(rho) is the
// log of the two-dimensional density at |y| = rho.
struct RadialMixture {
  std::vector<double> c;     // ring center radii >= 0
  std::vector<double> logw;  // log mixture weights
  double sigma2 = 1.0;

  double log_density_2d(double rho) const;
  double c_max() const;
};

RadialMixture output_mixture(const RadialPmf& f_r, const GainMixture& gains, double sigma2);

// Union of per-component windows [c - cut*sigma, c + cut*sigma] clipped to
// rho >= 0, split into composite Gauss-Legendre panels.
RadialRule build_windowed_radial_rule(const std::vector<double>& centers, double sigma,
                                      const QuadConfig& cfg, int refine = 1);

// h of the 2-D circularly symmetric density with the given radial profile,
// in nats: -int 2 pi rho f(rho) ln f(rho) d rho.
double radial_mixture_entropy(const RadialMixture& mix, const QuadConfig& cfg, int refine = 1);

// Finite complex Gaussian mixture with common per-component variance.
struct GaussMixture2D {
  std::vector<cplx> z;
  std::vector<double> logq;
  double sigma2 = 1.0;

  double log_density(cplx y) const;
};

double gauss_mixture_entropy_2d(const GaussMixture2D& mix, const QuadConfig& cfg, int refine = 1);

GaussMixture2D conditional_mixture_given_r(double r, const ChannelParams& params,
                                           const BdPointMasses& pts);

// Dense table of log f_Y^{2D}(rho) with cubic interpolation; falls back to
// direct evaluation outside the tabulated range.
class LogFyTable {
 public:
  LogFyTable() = default;
  LogFyTable(RadialMixture mix, double rho_max, int n);
  double operator()(double rho) const;
  bool empty() const { return values_.empty(); }

 private:
  RadialMixture mix_;
  double rho_max_ = 0.0;
  double step_ = 0.0;
  std::vector<double> values_;
};

}  // namespace engine

// --- spec-level operations ------------------------------------------------

struct EntropyReport {
  double value_nats = 0.0;
  double est_abs_error = 0.0;
  int radial_nodes_used = 0;
  int angular_nodes_used = 0;
};

enum class EvalMode { fast, checked };

// Radial density of |mu + Z| at rho when |mu| = c and Z ~ CN(0, sigma2):
// (2 rho / sigma2) exp(-(rho^2 + c^2)/sigma2) I0(2 rho c / sigma2).
double ring_density(double rho, double c, double sigma2);

// Radial density of |Y| at rho for the validated model (log-domain mixture).
double output_radial_density(double rho, const RadialPmf& f_r, const BdDistribution& f_x2,
                             const ChannelParams& params, const QuadConfig& cfg);

// Phase-marginalized transition density K(rho | r), the kernel of the
// variational conditions.
double kernel_K_radial(double rho, double r, const BdDistribution& f_x2,
                       const ChannelParams& params, const QuadConfig& cfg);

EntropyReport h_Y(const RadialPmf& f_r, const BdDistribution& f_x2, const ChannelParams& params,
                  const QuadConfig& cfg, EvalMode mode = EvalMode::checked);

// Conditional entropy given the full X1 = (r, theta1); by rotation
// invariance it only depends on r, as a fixed-phase Gaussian-mixture
// entropy averaged over the amplitude pmf.
EntropyReport h_Y_given_X1(const RadialPmf& f_r, const BdDistribution& f_x2,
                           const ChannelParams& params, const QuadConfig& cfg,
                           EvalMode mode = EvalMode::checked);

// Fixed-phase conditional entropy for a single amplitude r.
double cond_entropy_given_r(double r, const BdDistribution& f_x2, const ChannelParams& params,
                            const QuadConfig& cfg, int refine = 1);

// Entropy of the kernel K(.|r) itself (conditioning on the amplitude only,
// with theta1 marginalized). Upper-bounds cond_entropy_given_r.
double kernel_conditional_entropy(double r, const BdDistribution& f_x2,
                                  const ChannelParams& params, const QuadConfig& cfg,
                                  int refine = 1);

// h(Y) evaluated with theta1 frozen at 0 instead of uniform (2-D mixture
// quadrature); used by the phase-dominance property tests.
double h_Y_fixed_phase(const RadialPmf& f_r, const BdDistribution& f_x2,
                       const ChannelParams& params, const QuadConfig& cfg, int refine = 1);

// Marginal-entropy contribution of amplitude r:
// omega1(r) = -int K(rho|r) ln f_Y^{2D}(rho) 2 pi rho ... collapsed to the
// radial form -int K(rho|r) [ln f_{|Y|}(rho) - ln(2 pi rho)] d rho.
double omega1(double r, const RadialPmf& f_r, const BdDistribution& f_x2,
              const ChannelParams& params, const QuadConfig& cfg);

// BD marginal functional omega2(x2); the theta1 average collapses by
// rotation covariance leaving one 2-D Gaussian-window integral per
// amplitude point.
double omega2(cplx x2, const RadialPmf& f_r, const BdDistribution& f_x2, const Weights& weights,
              const ChannelParams& params, const QuadConfig& cfg);

struct MutualInfos {
  double I_x1_y = 0.0;           // I(X1; Y)
  double I_x2_y_given_x1 = 0.0;  // I(X2; Y | X1)
  double I_joint = 0.0;          // I(X1, X2; Y)
  double I_x1_y_given_x2 = 0.0;  // I(X1; Y | X2)
};

MutualInfos mutual_infos(const RadialPmf& f_r, const BdDistribution& f_x2,
                         const ChannelParams& params, const QuadConfig& cfg,
                         EvalMode mode = EvalMode::checked);

// Weighted-sum-rate objective in nats: the SIC corner combination matching
// the sign of mu1 - mu2.
double objective(const Weights& weights, const RadialPmf& f_r, const BdDistribution& f_x2,
                 const ChannelParams& params, const QuadConfig& cfg,
                 EvalMode mode = EvalMode::checked);

inline double gaussian_entropy_nats(double sigma2) { return std::log(M_PI * M_E * sigma2); }

}  // namespace ammac

#endif
