#include "hwall/rng.hpp"

#include <omp.h>

#include <boost/math/special_functions/erf.hpp>
#include <numbers>

#include "hwall/common.hpp"

namespace hwall {

void set_threads(int threads) {
  require(threads >= 1, "thread count must be >= 1");
  omp_set_num_threads(threads);
}

int threads() { return omp_get_max_threads(); }

double normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double truncated_standard_normal(double lower, CounterRng& rng) {
  if (std::isnan(lower) || lower == std::numeric_limits<double>::infinity()) {
    throw NumericalError("truncated normal: lower bound is not a finite number or -inf");
  }
  if (lower <= 4.0) {
    const double mass = (lower == -std::numeric_limits<double>::infinity())
                            ? 2.0
                            : std::erfc(lower / std::numbers::sqrt2);
    const double z = std::numbers::sqrt2 * boost::math::erfc_inv(rng.uniform() * mass);
    // erfc_inv rounding can land a hair below the bound.
    return z < lower ? lower : z;
  }
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double z = lower + rng.exponential() / rate;
    const double gap = z - rate;
    if (rng.uniform() <= std::exp(-0.5 * gap * gap)) return z;
  }
  throw NumericalError("truncated normal: exponential rejection did not accept in 10000 "
                       "attempts (lower = " + std::to_string(lower) + ")");
}

TruncatedMoments truncated_normal_moments(double lower) {
  const double tail = normal_upper_tail(lower);
  const double density = std::exp(-0.5 * lower * lower) / std::sqrt(2.0 * std::numbers::pi);
  const double mean = density / tail;
  return {mean, 1.0 + lower * mean - mean * mean};
}

}  // namespace hwall
