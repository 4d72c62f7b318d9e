#pragma once

#include "cde/models/model.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace cde {

/// Average X = (S_1 + ... + S_s)/s of S_j = S0 exp(Y_j), where Y is a random
/// walk with N(mu_j, sigma_j^2) increments.
struct AsianParams {
  double s0 = 100.0;
  std::vector<double> mu = std::vector<double>(12, 0.00771966);
  std::vector<double> sigma = std::vector<double>(12, 0.035033);
  double strike = 101.0;
  double upper = 128.13;

  std::size_t steps() const { return mu.size(); }
  void validate() const;
};

/// Brownian bridge sampling order over indices 1..s: s first, then interval
/// midpoints floor((l+r)/2) breadth first.
std::vector<std::size_t> bridge_order(std::size_t s);

/// Sequential CDE with Z_s hidden; y[0..s-2] hold Y_1..Y_{s-1}.
double asian_sequential_cde(const AsianParams& p, const std::vector<double>& y, double x);
double asian_sequential_cdf(const AsianParams& p, const std::vector<double>& y, double x);

/// gamma(z) = (S0/s) sum_j exp(Y0_j + z c_j): the average as a function of the
/// hidden bridge normal Z_s, with the other normals fixed.
class AsianGamma {
 public:
  AsianGamma(double s0, std::vector<double> y0, std::vector<double> c);

  /// Builds the evaluator from the s-1 retained bridge normals (bridge order,
  /// excluding the first index s).
  static AsianGamma from_normals(const AsianParams& p, const std::vector<double>& z);

  double value(double z) const;
  /// (gamma(z), gamma'(z)).
  std::pair<double, double> eval(double z) const;

  /// gamma^{-1}(x) by safeguarded Newton from z0; throws std::out_of_range
  /// when x lies outside gamma([-12, 12]).
  double inverse(double x, double z0 = 0.0) const;
  /// phi(z)/gamma'(z) at z = gamma^{-1}(x); 0 outside the working range.
  double density(double x) const;
  double cdf(double x) const;
  /// out[j] += density(xs[j]) with Newton warm starts along the sorted grid.
  void add_density_on_grid(std::span<const double> xs, std::span<double> out) const;

  const std::vector<double>& y0() const { return y0_; }
  const std::vector<double>& slopes() const { return c_; }

 private:
  double s0_;
  std::vector<double> y0_;
  std::vector<double> c_;
};

struct NewtonResult {
  double z;
  double residual;  // gamma(z) - x
  double slope;     // gamma'(z)
  int iterations;
};

inline constexpr double kGammaBracket = 12.0;

/// Root of g(z) = x for increasing g given as z -> (g(z), g'(z)). Newton
/// steps that leave the current bracket are replaced by bisection.
/// Converges to |g(z) - x| <= 1e-12 max(1, |x|) or a bracket of width 1e-15.
NewtonResult gamma_inverse_newton(const std::function<std::pair<double, double>(double)>& g, double x,
                                  double z0, double lo = -kGammaBracket, double hi = kGammaBracket);

/// Variants "seq" and "bridge" hide Z_s; both use s-1 uniforms. Interval
/// [K, upper].
class AsianModel final : public Model {
 public:
  explicit AsianModel(AsianParams p);
  static std::unique_ptr<Model> from_json(const nlohmann::json& j);

  std::size_t cde_dimension(std::size_t) const override { return p_.steps() - 1; }
  ConditionalDensity conditional(std::size_t variant, PointCursor& u) const override;
  std::size_t sample_dimension() const override { return p_.steps(); }
  double sample(PointCursor& u) const override;
  std::size_t joint_dimension() const override { return p_.steps(); }
  std::vector<ConditionalDensity> joint(std::span<const std::size_t> variants,
                                        PointCursor& u) const override;
  nlohmann::json describe() const override;

  const AsianParams& params() const { return p_; }

 private:
  ConditionalDensity sequential(std::vector<double> y) const;
  ConditionalDensity bridge(const std::vector<double>& z) const;
  AsianParams p_;
  std::shared_ptr<const AsianParams> shared_;  // kept alive by sequential densities
  std::vector<std::size_t> order_;
};

}  // namespace cde
