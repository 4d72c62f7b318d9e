#include "cde/distributions.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cde {

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double open_unit(double u) {
  constexpr double tiny = 0x1p-60;
  return std::clamp(u, tiny, 1.0 - 0x1p-53);
}

double normal_inv(double u) {
  u = open_unit(u);
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

LognormalParams lognormal_from_mean_cv(double mean, double cv) {
  if (!(mean > 0.0) || !(cv > 0.0)) {
    throw std::invalid_argument("lognormal: mean and cv must be positive");
  }
  const double s2 = std::log1p(cv * cv);
  return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
}

Distribution::Distribution(Kind k, double p1, double p2) : kind_(k), p1_(p1), p2_(p2) {}

Distribution Distribution::normal(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("normal: sd must be positive");
  return {Kind::normal, mean, sd};
}

Distribution Distribution::truncated_normal(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("normal: sd must be positive");
  Distribution d{Kind::truncated_normal, mean, sd};
  d.mass_below_zero_ = normal_cdf(-mean / sd);
  if (d.mass_below_zero_ > 1.0 - 1e-12) {
    throw std::invalid_argument("truncated normal: no mass above zero");
  }
  return d;
}

Distribution Distribution::lognormal(double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("lognormal: sigma must be positive");
  return {Kind::lognormal, mu, sigma};
}

Distribution Distribution::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("expon: rate must be positive");
  return {Kind::exponential, rate, 0.0};
}

Distribution Distribution::from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "normal") {
    const double mean = j.at("mean").get<double>();
    const double sd = j.at("sd").get<double>();
    return j.value("truncated", false) ? truncated_normal(mean, sd) : normal(mean, sd);
  }
  if (type == "lognormal") {
    if (j.contains("cv")) {
      const auto p = lognormal_from_mean_cv(j.at("mean").get<double>(), j.at("cv").get<double>());
      return lognormal(p.mu, p.sigma);
    }
    return lognormal(j.at("mu").get<double>(), j.at("sigma").get<double>());
  }
  if (type == "expon") {
    if (j.contains("mean")) return exponential(1.0 / j.at("mean").get<double>());
    return exponential(j.at("rate").get<double>());
  }
  throw std::invalid_argument("unknown distribution type '" + type +
                              "' (expected normal, lognormal or expon)");
}

nlohmann::json Distribution::to_json() const {
  switch (kind_) {
    case Kind::normal:
      return {{"type", "normal"}, {"mean", p1_}, {"sd", p2_}};
    case Kind::truncated_normal:
      return {{"type", "normal"}, {"mean", p1_}, {"sd", p2_}, {"truncated", true}};
    case Kind::lognormal:
      return {{"type", "lognormal"}, {"mu", p1_}, {"sigma", p2_}};
    case Kind::exponential:
      return {{"type", "expon"}, {"rate", p1_}};
  }
  return {};
}

double Distribution::pdf(double y) const {
  switch (kind_) {
    case Kind::normal:
      return normal_pdf((y - p1_) / p2_) / p2_;
    case Kind::truncated_normal:
      if (y < 0.0) return 0.0;
      return normal_pdf((y - p1_) / p2_) / (p2_ * (1.0 - mass_below_zero_));
    case Kind::lognormal: {
      if (y <= 0.0) return 0.0;
      const double z = (std::log(y) - p1_) / p2_;
      return normal_pdf(z) / (y * p2_);
    }
    case Kind::exponential:
      return y < 0.0 ? 0.0 : p1_ * std::exp(-p1_ * y);
  }
  return 0.0;
}

double Distribution::cdf(double y) const {
  switch (kind_) {
    case Kind::normal:
      return normal_cdf((y - p1_) / p2_);
    case Kind::truncated_normal:
      if (y <= 0.0) return 0.0;
      return (normal_cdf((y - p1_) / p2_) - mass_below_zero_) / (1.0 - mass_below_zero_);
    case Kind::lognormal:
      return y <= 0.0 ? 0.0 : normal_cdf((std::log(y) - p1_) / p2_);
    case Kind::exponential:
      return y <= 0.0 ? 0.0 : -std::expm1(-p1_ * y);
  }
  return 0.0;
}

double Distribution::quantile(double u) const {
  u = open_unit(u);
  switch (kind_) {
    case Kind::normal:
      return p1_ + p2_ * normal_inv(u);
    case Kind::truncated_normal:
      return std::max(0.0, p1_ + p2_ * normal_inv(mass_below_zero_ + u * (1.0 - mass_below_zero_)));
    case Kind::lognormal:
      return std::exp(p1_ + p2_ * normal_inv(u));
    case Kind::exponential:
      return -std::log1p(-u) / p1_;
  }
  return 0.0;
}

double Distribution::support_min() const {
  switch (kind_) {
    case Kind::normal:
      return -std::numeric_limits<double>::infinity();
    default:
      return 0.0;
  }
}

double Distribution::mean() const {
  switch (kind_) {
    case Kind::normal:
      return p1_;
    case Kind::truncated_normal: {
      const double alpha = -p1_ / p2_;
      return p1_ + p2_ * normal_pdf(alpha) / (1.0 - mass_below_zero_);
    }
    case Kind::lognormal:
      return std::exp(p1_ + 0.5 * p2_ * p2_);
    case Kind::exponential:
      return 1.0 / p1_;
  }
  return 0.0;
}

}  // namespace cde
