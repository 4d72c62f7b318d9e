#pragma once

#include "cde/estimator_core.hpp"

#include <functional>
#include <span>
#include <vector>

namespace cde {

/// x -> F_cmc(x) = sum_i F(x | G_i) / sum_i w_i over stored realizations (the
/// plain average when every weight is 1), and the matching density average.
class CdfAverage {
 public:
  explicit CdfAverage(std::span<const ConditionalDensity> densities);

  double cdf(double x) const;
  double density(double x) const;
  std::size_t size() const { return d_.size(); }
  std::span<const ConditionalDensity> realizations() const { return d_; }

 private:
  std::span<const ConditionalDensity> d_;
  double total_weight_;
};

/// inf{x : F(x) >= q} for a non-decreasing F, by bisection after expanding
/// [lo, hi] until it brackets q. Tolerance 1e-10 (hi - lo) of the initial
/// bracket. Throws when q is outside the attained range.
double quantile_from_cdf(const std::function<double(double)>& cdf, double q, double lo, double hi);
double quantile_from_cdf(const CdfAverage& avg, double q, double lo, double hi);

struct QuantileEstimate {
  double xi = 0.0;
  double density = 0.0;   // f at xi
  double var_plain = 0.0; // q (1 - q) / f^2
  double var_cmc = 0.0;   // Var_i F(xi | G_i) / f^2
  double lo = 0.0;        // xi -/+ z sigma_cmc / sqrt(n)
  double hi = 0.0;
  double plain_lo = 0.0;  // same with the plain variance
  double plain_hi = 0.0;
};

/// CLT interval at confidence `level` around the CMC quantile.
QuantileEstimate quantile_ci(const CdfAverage& avg, double q, double level, double lo, double hi);

/// Pooled quantile over RQMC replicates; the variance comes from batching the
/// per-replicate quantiles.
struct PooledQuantile {
  double xi = 0.0;
  double stderr_ = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> per_replicate;
};
PooledQuantile quantile_pooled(const std::vector<std::vector<ConditionalDensity>>& reps, double q,
                               double level, double lo, double hi);

struct ShortfallEstimate {
  double xi = 0.0;  // X_(ceil(n q))
  double c = 0.0;   // xi - (1/(n q)) sum (xi - X_i)^+
  double stderr_ = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Empirical shortfall with a CLT interval from Var[(xi - X)^+] / q^2.
ShortfallEstimate expected_shortfall(std::span<const double> samples, double q, double level = 0.95);

}  // namespace cde
