#ifndef AMMAC_BASELINE_HPP
#define AMMAC_BASELINE_HPP

#include "ammac/types.hpp"

namespace ammac {

// Baseline signaling: X1 ~ CN(0, P) (Rayleigh amplitude, uniform phase) and
// X2 uniform on the unit circle. All rates in bits per channel use.
struct BaselineReport {
  double snr_db = 0.0;
  double a = 0.0;
  double r1_base = 0.0;
  double r1_lower = 0.0;
  double r2_base = 0.0;
  double r2_asym = 0.0;
  double c_sum = 0.0;
  double c1 = 0.0;
  double bd_max_ref = 0.0;  // single unit ring BD against a constant-envelope PT
};

// Sum-rate corner log2(1 + P (1+|a|)^2 / sigma2); the |a| form generalizes
// the positive-gain expression to negative a (the reflector sits at sign(a)).
double c_sum(const ChannelParams& params);

// Literal positive-gain expression log2(1 + P (1+a)^2 / sigma2); differs
// from c_sum only when a < 0.
double c_sum_paper_literal(const ChannelParams& params);

// PT point-to-point corner; identical closed form to c_sum.
double c1(const ChannelParams& params);

// PT rate treating the backscatter product as Gaussian interference:
// log2(1 + P a^2 / (P + sigma2)).
double r1_lower(const ChannelParams& params);

// I(X1; Y) for the baseline pair via the generic entropy difference, with
// the printed kappa/kappa-bar formula evaluated as an independent
// cross-check. Throws FormulaMismatch when the two disagree.
double r1_base(const ChannelParams& params, const QuadConfig& cfg);

// I(X2; Y | X1) for the baseline pair (exactly independent of a).
double r2_base(const ChannelParams& params, const QuadConfig& cfg);

// Two-regime asymptotic of r2_base with a linear blend across
// |x1|^2/sigma2 in [0.5, 2] to avoid a jump at the regime switch.
double r2_asym(const ChannelParams& params, const QuadConfig& cfg);

BaselineReport baseline_report(const ChannelParams& params, const QuadConfig& cfg);

}  // namespace ammac

#endif
