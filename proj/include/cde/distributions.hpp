#pragma once

#include "json.hpp"

#include <string>

namespace cde {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal density.
double normal_pdf(double z);
/// Standard normal cdf.
double normal_cdf(double z);
/// Standard normal inverse cdf; arguments are clamped away from {0, 1}.
double normal_inv(double u);

/// Clamp a uniform into the open interval (0,1) so that inversion stays finite.
double open_unit(double u);

struct LognormalParams {
  double mu;
  double sigma;
};

/// Exact moment matching: sigma^2 = ln(1 + cv^2), mu = ln(mean) - sigma^2 / 2.
LognormalParams lognormal_from_mean_cv(double mean, double cv);

/// A univariate continuous law usable by the simulation models. Supports
/// density, cdf and inversion sampling.
class Distribution {
 public:
  enum class Kind { normal, truncated_normal, lognormal, exponential };

  static Distribution normal(double mean, double sd);
  /// Normal(mean, sd) conditioned on being >= 0.
  static Distribution truncated_normal(double mean, double sd);
  static Distribution lognormal(double mu, double sigma);
  static Distribution exponential(double rate);

  /// Parses a descriptor such as {"type":"normal","mean":13,"sd":3.25}.
  /// "normal" accepts an optional "truncated" flag; "lognormal" accepts either
  /// {mu, sigma} or {mean, cv}; "expon" takes {rate} or {mean}.
  static Distribution from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  Kind kind() const { return kind_; }
  double pdf(double y) const;
  double cdf(double y) const;
  double quantile(double u) const;
  /// Smallest point of the support.
  double support_min() const;
  double mean() const;

  double p1() const { return p1_; }
  double p2() const { return p2_; }

 private:
  Distribution(Kind k, double p1, double p2);
  Kind kind_;
  double p1_;
  double p2_;
  double mass_below_zero_ = 0.0;  // truncated normal only
};

}  // namespace cde
