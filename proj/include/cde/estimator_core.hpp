#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cde {

/// One realization of a conditional law: x -> f(x|G) and x -> F(x|G).
///
/// `weight` is the number of observations the realization stands for. It is
/// 1 for models producing one output per simulation; for the queue it is the
/// number of customers N, and density/cdf are then sums over customers.
class ConditionalDensity {
 public:
  using Fn = std::function<double(double)>;
  using GridFn = std::function<void(std::span<const double>, std::span<double>)>;

  ConditionalDensity() = default;
  ConditionalDensity(Fn density, Fn cdf, double weight = 1.0, GridFn grid = {});

  double density(double x) const { return density_(x); }
  double cdf(double x) const { return cdf_(x); }
  double weight() const { return weight_; }

  /// out[j] += density(xs[j]); xs must be sorted ascending.
  void add_density_on_grid(std::span<const double> xs, std::span<double> out) const;

 private:
  Fn density_;
  Fn cdf_;
  double weight_ = 1.0;
  GridFn grid_;
};

/// Mean of density(x) over the realizations.
double cde_average(std::span<const ConditionalDensity> densities, double x);
/// Mean of cdf(x) over the realizations.
double cdf_average(std::span<const ConditionalDensity> densities, double x);

/// Largest increment of cdf between neighbours of an m-cell uniform grid on
/// [a, b]. Tends to 0 with m for a continuous cdf and to the jump size
/// otherwise.
double max_cdf_jump(const ConditionalDensity& d, double a, double b, std::size_t m);

struct KdeSpec {
  double h;
};

/// Normal-kernel density estimate (1/(n h)) sum phi((x - X_i)/h).
double kde_estimate(std::span<const double> samples, const KdeSpec& spec, double x);
/// Normal-reference bandwidth 1.06 * sd * n^(-1/5). The interval is accepted
/// for interface symmetry with interval-aware selectors and is not used.
double kde_bandwidth(std::span<const double> samples, double a, double b);
/// KDE at every sorted grid point; kernels beyond 9 bandwidths are skipped.
/// `samples` is sorted in place.
void kde_on_grid(std::vector<double>& samples, double h, std::span<const double> xs,
                 std::span<double> out);

struct GlrTerm {
  double threshold;  // realized X
  double psi;
};

/// A simulation's GLR contribution L(x) = sum_t 1[X_t <= x] psi_t, with the
/// same observation weight convention as ConditionalDensity.
struct GlrSample {
  std::vector<GlrTerm> terms;
  double weight = 1.0;

  double value(double x) const;
  /// out[j] += value(xs[j]) for sorted xs.
  void add_on_grid(std::span<const double> xs, std::span<double> out) const;
};

/// Mean over terms of 1[X_i <= x] psi_i.
double glrde_estimate(std::span<const GlrTerm> terms, double x);

struct ComboWeights {
  std::vector<double> beta;  // sums to 1
  bool singular = false;     // covariance was singular; beta = (1, 0, ...)
};

/// Control-variate combination weights. estimates[l] is an n_r x n_e matrix
/// (row-major, one row per replication) for estimator l. The covariance
/// integrals are grid sums times `cell_width`.
ComboWeights fit_combo_weights(const std::vector<std::vector<double>>& estimates, std::size_t n_r,
                               std::size_t n_e, double cell_width);

/// Per-replication numerator rows D_j(.) and denominators N_j for a ratio
/// (renewal-reward) density estimator.
class RatioAccumulator {
 public:
  explicit RatioAccumulator(std::size_t n_points) : n_points_(n_points) {}

  void add(std::vector<double> numerators, double denominator);

  std::size_t replications() const { return den_.size(); }
  std::size_t points() const { return n_points_; }
  double numerator(std::size_t rep, std::size_t point) const { return num_[rep][point]; }
  double denominator(std::size_t rep) const { return den_[rep]; }

 private:
  std::size_t n_points_;
  std::vector<std::vector<double>> num_;
  std::vector<double> den_;
};

struct RatioEstimate {
  double estimate;
  /// Variance of `estimate` (already divided by the replication count).
  double variance;
};

/// Grand-sum ratio sum_j D_j / sum_j N_j with the delta-method variance.
/// When `known_mean_denominator` > 0 the denominator is not estimated and the
/// result is the plain mean of D_j / E[N].
RatioEstimate ratio_density(const RatioAccumulator& acc, std::size_t point,
                            double known_mean_denominator = 0.0);

}  // namespace cde
