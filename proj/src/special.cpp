#include "ammac/special.hpp"

#include <cmath>
#include <limits>

#include "ammac/errors.hpp"

namespace ammac {

namespace {

constexpr double kSeriesSwitch = 15.0;

// Power series sum_k ((x/2)^2)^k / (k!)^2, all terms positive so there is
// no cancellation; converges to machine precision for x < 15 within ~45 terms.
double i0_series(double x) {
  const double t = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 64; ++k) {
    term *= t / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Asymptotic expansion I0(x) ~ e^x / sqrt(2 pi x) * sum_k A_k / x^k with
// A_k = prod_{j<=k} (2j-1)^2 / (k! 8^k). Terms are added while they keep
// decreasing; the truncation error at x = 15 is ~1e-13 relative.
double i0_scaled_asymptotic(double x) {
  double term = 1.0;
  double sum = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 30; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= odd * odd / (8.0 * k * x);
    if (term >= prev) break;
    sum += term;
    prev = term;
    if (term < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2.0 * M_PI * x);
}

}  // namespace

double i0_scaled(double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("i0_scaled requires finite x >= 0");
  if (x < kSeriesSwitch) return std::exp(-x) * i0_series(x);
  return i0_scaled_asymptotic(x);
}

double log_i0(double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("log_i0 requires finite x >= 0");
  if (x < kSeriesSwitch) return std::log(i0_series(x));
  return x + std::log(i0_scaled_asymptotic(x));
}

double log_sum_exp(std::span<const std::pair<double, double>> terms) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& [lv, w] : terms) {
    if (w < 0.0) throw DomainError("log_sum_exp weights must be >= 0");
    if (w > 0.0 && lv > mx) mx = lv;
  }
  if (mx == -std::numeric_limits<double>::infinity()) {
    bool any = false;
    for (const auto& [lv, w] : terms) any = any || w > 0.0;
    if (!any) throw EmptyMixture("log_sum_exp: no positive weight");
    return mx;  // all active log-values are -inf
  }
  double s = 0.0;
  for (const auto& [lv, w] : terms)
    if (w > 0.0) s += w * std::exp(lv - mx);
  return mx + std::log(s);
}

double log_sum_exp(std::span<const double> log_values, std::span<const double> weights) {
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < log_values.size(); ++i) {
    if (weights[i] < 0.0) throw DomainError("log_sum_exp weights must be >= 0");
    if (weights[i] > 0.0) {
      any = true;
      if (log_values[i] > mx) mx = log_values[i];
    }
  }
  if (!any) throw EmptyMixture("log_sum_exp: no positive weight");
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < log_values.size(); ++i)
    if (weights[i] > 0.0) s += weights[i] * std::exp(log_values[i] - mx);
  return mx + std::log(s);
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace ammac
