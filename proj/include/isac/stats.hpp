#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "isac/errors.hpp"

namespace isac {

/// Regularized lower incomplete gamma P(a, x). Series expansion for
/// x < a + 1, Lentz continued fraction otherwise.
inline double lower_reg_gamma(double a, double x) {
  if (a <= 0.0) throw DomainError("lower_reg_gamma: shape must be positive");
  if (x <= 0.0) return 0.0;

  const double lgam = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lgam);
  }

  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lgam) * h;
  return 1.0 - q;
}

/// Quantile of the Gamma(shape, scale = 1) distribution by bracketed
/// bisection on P(shape, x) = p. Called a handful of times per run, so the
/// plain 200-step bisection is plenty.
inline double gamma_quantile(double shape, double p) {
  if (!(p >= 0.0 && p < 1.0))
    throw DomainError("gamma_quantile: probability must lie in [0, 1)");
  if (p == 0.0) return 0.0;

  double hi = shape + 10.0 * std::sqrt(shape) + 10.0;
  while (lower_reg_gamma(shape, hi) < p) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (lower_reg_gamma(shape, mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= hi * 1e-15) break;
  }
  return 0.5 * (lo + hi);
}

/// Wilson 95% score interval for a binomial proportion.
struct WilsonInterval {
  double estimate;
  double lo;
  double hi;
};

inline WilsonInterval wilson_interval(std::size_t successes, std::size_t n) {
  if (n == 0) throw DomainError("wilson_interval: zero trials");
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = phat + z2 / (2.0 * nn);
  const double spread = z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn));
  return {phat, (center - spread) / denom, (center + spread) / denom};
}

/// Percentile of a sorted sample by linear interpolation between closest
/// ranks. q in [0, 100]; q = 0 returns the minimum, q = 100 the maximum.
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DomainError("percentile: empty sample");
  if (q <= 0.0) return sorted.front();
  if (q >= 100.0) return sorted.back();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q / 100.0;
  const auto i = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace isac
