#include "cde/quantile.hpp"

#include "cde/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cde {

namespace {

void check_q(double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile: q must lie in (0, 1)");
}

double z_of(double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("quantile: level must lie in (0, 1)");
  return normal_inv(0.5 + 0.5 * level);
}

}  // namespace

CdfAverage::CdfAverage(std::span<const ConditionalDensity> densities) : d_(densities), total_weight_(0.0) {
  if (d_.empty()) throw std::invalid_argument("CdfAverage: no realizations");
  for (const auto& d : d_) total_weight_ += d.weight();
  if (!(total_weight_ > 0.0)) throw std::invalid_argument("CdfAverage: total weight must be positive");
}

double CdfAverage::cdf(double x) const {
  double s = 0.0;
  for (const auto& d : d_) s += d.cdf(x);
  return s / total_weight_;
}

double CdfAverage::density(double x) const {
  double s = 0.0;
  for (const auto& d : d_) s += d.density(x);
  return s / total_weight_;
}

double quantile_from_cdf(const std::function<double(double)>& cdf, double q, double lo, double hi) {
  check_q(q);
  if (!(lo < hi)) throw std::invalid_argument("quantile: need lo < hi");
  const double tol = 1e-10 * (hi - lo);
  double step = hi - lo;
  for (int k = 0; cdf(lo) >= q; ++k) {
    if (k == 64) throw std::domain_error("quantile: q is below the attained range of the cdf");
    lo -= step;
    step *= 2.0;
  }
  step = hi - lo;
  for (int k = 0; cdf(hi) < q; ++k) {
    if (k == 64) throw std::domain_error("quantile: q is above the attained range of the cdf");
    hi += step;
    step *= 2.0;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cdf(mid) >= q) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double quantile_from_cdf(const CdfAverage& avg, double q, double lo, double hi) {
  return quantile_from_cdf([&avg](double x) { return avg.cdf(x); }, q, lo, hi);
}

QuantileEstimate quantile_ci(const CdfAverage& avg, double q, double level, double lo, double hi) {
  const double z = z_of(level);
  QuantileEstimate e;
  e.xi = quantile_from_cdf(avg, q, lo, hi);
  e.density = avg.density(e.xi);
  if (!(e.density > 0.0)) throw std::domain_error("quantile: density estimate at the quantile is not positive");
  const auto ds = avg.realizations();
  const double n = static_cast<double>(ds.size());
  double mean = 0.0;
  for (const auto& d : ds) mean += d.cdf(e.xi);
  mean /= n;
  double ss = 0.0;
  for (const auto& d : ds) ss += (d.cdf(e.xi) - mean) * (d.cdf(e.xi) - mean);
  const double var_f = ds.size() > 1 ? ss / (n - 1.0) : 0.0;
  const double f2 = e.density * e.density;
  e.var_plain = q * (1.0 - q) / f2;
  e.var_cmc = var_f / f2;
  const double half = z * std::sqrt(e.var_cmc / n);
  const double half_plain = z * std::sqrt(e.var_plain / n);
  e.lo = e.xi - half;
  e.hi = e.xi + half;
  e.plain_lo = e.xi - half_plain;
  e.plain_hi = e.xi + half_plain;
  return e;
}

PooledQuantile quantile_pooled(const std::vector<std::vector<ConditionalDensity>>& reps, double q,
                               double level, double lo, double hi) {
  if (reps.size() < 2) throw std::invalid_argument("quantile: batching needs at least two replicates");
  const double z = z_of(level);
  std::vector<ConditionalDensity> pooled;
  PooledQuantile out;
  for (const auto& r : reps) {
    out.per_replicate.push_back(quantile_from_cdf(CdfAverage(r), q, lo, hi));
    pooled.insert(pooled.end(), r.begin(), r.end());
  }
  out.xi = quantile_from_cdf(CdfAverage(pooled), q, lo, hi);
  const double m = static_cast<double>(reps.size());
  double mean = 0.0;
  for (double v : out.per_replicate) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double v : out.per_replicate) ss += (v - mean) * (v - mean);
  out.stderr_ = std::sqrt(ss / (m - 1.0) / m);
  out.lo = out.xi - z * out.stderr_;
  out.hi = out.xi + z * out.stderr_;
  return out;
}

ShortfallEstimate expected_shortfall(std::span<const double> samples, double q, double level) {
  check_q(q);
  if (samples.size() < 2) throw std::invalid_argument("expected_shortfall: need at least two samples");
  const double z = z_of(level);
  std::vector<double> x(samples.begin(), samples.end());
  const std::size_t n = x.size();
  const auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * q));
  const std::size_t k = std::clamp<std::size_t>(rank, 1, n) - 1;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), x.end());
  ShortfallEstimate e;
  e.xi = x[k];
  double sum = 0.0, sum2 = 0.0;
  for (double v : samples) {
    const double d = std::max(0.0, e.xi - v);
    sum += d;
    sum2 += d * d;
  }
  const double nn = static_cast<double>(n);
  e.c = e.xi - sum / (nn * q);
  const double mean = sum / nn;
  const double var = std::max(0.0, (sum2 - nn * mean * mean) / (nn - 1.0));
  e.stderr_ = std::sqrt(var / (q * q) / nn);
  e.lo = e.c - z * e.stderr_;
  e.hi = e.c + z * e.stderr_;
  return e;
}

}  // namespace cde
