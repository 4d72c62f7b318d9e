#pragma once

#include <span>
#include <vector>

namespace cde {

enum class HypoexpMethod { automatic, product, uniformization };

/// Relative rate gap below which the automatic method switches to
/// uniformization.
inline constexpr double kHypoexpTieGap = 1e-8;

/// Law of A_1 + ... + A_c with independent A_j ~ Exp(rates[j]).
///
/// The product formula uses p_j = prod_{k != j} L_k / (L_k - L_j). The
/// uniformization path evaluates the pure-birth chain with Poisson weights
/// (computed in log space) and truncates the series once the remaining
/// Poisson mass is below 1e-12.
class Hypoexponential {
 public:
  explicit Hypoexponential(std::vector<double> rates,
                           HypoexpMethod method = HypoexpMethod::automatic);

  double density(double x) const;
  double cdf(double x) const;

  bool uses_uniformization() const { return uniform_; }
  const std::vector<double>& rates() const { return rates_; }
  const std::vector<double>& weights() const { return p_; }

 private:
  /// Probability of each transient state at time x (uniformization).
  std::vector<double> transient(double x) const;

  std::vector<double> rates_;
  std::vector<double> p_;
  bool uniform_ = false;
};

double hypoexp_density(std::span<const double> rates, double x,
                       HypoexpMethod method = HypoexpMethod::automatic);
double hypoexp_cdf(std::span<const double> rates, double x,
                   HypoexpMethod method = HypoexpMethod::automatic);

/// Smallest relative gap |L_k - L_j| / max(L_k, L_j) over pairs; +inf for c = 1.
double hypoexp_min_relative_gap(std::span<const double> rates);

}  // namespace cde
