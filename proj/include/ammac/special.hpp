#ifndef AMMAC_SPECIAL_HPP
#define AMMAC_SPECIAL_HPP

#include <span>
#include <utility>
#include <vector>

namespace ammac {

// exp(-x) * I0(x) for x >= 0. Power series below the switch point,
// large-argument asymptotic expansion above it; relative error <= 1e-12
// on [0, 700] and monotone decreasing with values in (0, 1].
double i0_scaled(double x);

// ln I0(x) = x + ln(i0_scaled(x)); overflow-safe for any finite x >= 0.
double log_i0(double x);

// ln(sum_i w_i * exp(lv_i)) with max-subtraction. Weights must be >= 0 and
// at least one positive; throws EmptyMixture otherwise.
double log_sum_exp(std::span<const std::pair<double, double>> terms);
double log_sum_exp(std::span<const double> log_values, std::span<const double> weights);

// Neumaier-compensated ordered sum; deterministic for a fixed input order.
double compensated_sum(std::span<const double> values);

}  // namespace ammac

#endif
