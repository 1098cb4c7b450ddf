#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

namespace afmtj {

/// One-sided Clopper-Pearson upper bound on a binomial rate.
inline double cp_upper_bound(std::uint64_t n, std::uint64_t failures, double confidence = 0.95) {
  if (n == 0 || failures >= n) return 1.0;
  const boost::math::beta_distribution<double> b(static_cast<double>(failures) + 1.0,
                                                 static_cast<double>(n - failures));
  return boost::math::quantile(b, confidence);
}

/// One-sided Clopper-Pearson lower bound.
inline double cp_lower_bound(std::uint64_t n, std::uint64_t failures, double confidence = 0.95) {
  if (n == 0 || failures == 0) return 0.0;
  const boost::math::beta_distribution<double> b(static_cast<double>(failures),
                                                 static_cast<double>(n - failures) + 1.0);
  return boost::math::quantile(b, 1.0 - confidence);
}

/// Two-sided Clopper-Pearson interval with total coverage `confidence`.
inline std::pair<double, double> cp_interval(std::uint64_t n, std::uint64_t failures, double confidence = 0.95) {
  const double tail = 0.5 * (1.0 - confidence);
  return {cp_lower_bound(n, failures, 1.0 - tail), cp_upper_bound(n, failures, 1.0 - tail)};
}

struct RateEstimate {
  std::uint64_t n_trials = 0;
  std::uint64_t n_failures = 0;
  double point = 0.0;
  double cp_lower_95 = 0.0;
  double cp_upper_95 = 1.0;
};

inline RateEstimate make_estimate(std::uint64_t n, std::uint64_t failures) {
  RateEstimate r;
  r.n_trials = n;
  r.n_failures = failures;
  r.point = n ? static_cast<double>(failures) / static_cast<double>(n) : 0.0;
  r.cp_lower_95 = cp_lower_bound(n, failures, 0.95);
  r.cp_upper_95 = cp_upper_bound(n, failures, 0.95);
  return r;
}

/// Upper-tail probability of the standard normal, P(Z > z).
inline double normal_tail(double z) { return boost::math::cdf(boost::math::complement(boost::math::normal(), z)); }

/// z such that P(Z > z) = p.
inline double normal_tail_quantile(double p) {
  return boost::math::quantile(boost::math::complement(boost::math::normal(), p));
}

// ---------------------------------------------------------------------------
// Counter-based random streams

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform random bit generator whose output is a pure function of
/// (seed, stream, trial, parameter, draw index). Draws for one trial never
/// depend on how other trials were scheduled.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial, std::uint64_t param)
      : key_(splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ trial) ^ param)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  /// Uniform on the open interval (0, 1).
  double uniform01() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by inversion of one uniform draw.
  double standard_normal() { return boost::math::quantile(boost::math::normal(), uniform01()); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace afmtj
