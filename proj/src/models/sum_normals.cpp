#include "cde/distributions.hpp"
#include "cde/models/simple.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cde {

double SumNormalsParams::sigma() const {
  return std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
}

namespace {

// Standardized argument t with X <= x  <=>  a_k Z_k <= x sigma - S.
double hidden_arg(const SumNormalsParams& p, std::size_t k, std::span<const double> z_other,
                  double x, double sigma) {
  double s = 0.0;
  std::size_t i = 0;
  for (std::size_t j = 0; j < p.a.size(); ++j) {
    if (j != k) s += p.a[j] * z_other[i++];
  }
  return (x * sigma - s) / p.a[k];
}

void check_params(const SumNormalsParams& p) {
  if (p.a.empty()) throw std::invalid_argument("sum-normals: empty coefficient vector");
  for (double aj : p.a) {
    if (aj == 0.0 || !std::isfinite(aj)) throw std::invalid_argument("sum-normals: coefficients must be nonzero");
  }
}

}  // namespace

double sum_normals_cde(const SumNormalsParams& p, std::size_t k, std::span<const double> z_other,
                       double x) {
  const double sigma = p.sigma();
  return normal_pdf(hidden_arg(p, k, z_other, x, sigma)) * sigma / std::abs(p.a[k]);
}

double sum_normals_cdf(const SumNormalsParams& p, std::size_t k, std::span<const double> z_other,
                       double x) {
  const double t = hidden_arg(p, k, z_other, x, p.sigma());
  return p.a[k] > 0.0 ? normal_cdf(t) : normal_cdf(-t);
}

double sum_normals_exact_var(const SumNormalsParams& p, std::size_t k, double x) {
  const double s2 = std::abs(p.a.at(k)) / p.sigma();
  if (s2 == 0.0) throw std::invalid_argument("sum-normals: zero hidden weight");
  const double s1sq = std::max(0.0, 1.0 - s2 * s2);
  const double first = normal_pdf(std::sqrt(2.0) * x / std::sqrt(1.0 + s1sq)) /
                       (s2 * std::sqrt(2.0 * kPi * (1.0 + s1sq)));
  const double phi = normal_pdf(x);
  return first - phi * phi;
}

SumNormalsModel::SumNormalsModel(SumNormalsParams p) : p_(std::move(p)) {
  check_params(p_);
  sigma_ = p_.sigma();
  spec_.name = "sum-normals";
  spec_.a = -2.0;
  spec_.b = 2.0;
  for (std::size_t k = 1; k <= p_.a.size(); ++k) {
    spec_.variants.push_back("hide-" + std::to_string(k));
    spec_.glr_variants.push_back("psi-" + std::to_string(k));
  }
  spec_.kde_sample = true;
  spec_.exact_density = true;
  spec_.exact_variance = true;
  spec_.joint = true;
}

std::unique_ptr<Model> SumNormalsModel::from_json(const nlohmann::json& j) {
  SumNormalsParams p;
  if (j.contains("a")) p.a = j.at("a").get<std::vector<double>>();
  return std::make_unique<SumNormalsModel>(p);
}

std::size_t SumNormalsModel::cde_dimension(std::size_t) const { return p_.a.size() - 1; }

ConditionalDensity SumNormalsModel::make(std::size_t k, const std::vector<double>& z) const {
  double s = 0.0;
  for (std::size_t j = 0; j < p_.a.size(); ++j) {
    if (j != k) s += p_.a[j] * z[j];
  }
  const double ak = p_.a[k];
  const double sigma = sigma_;
  const double scale = sigma / std::abs(ak);
  return ConditionalDensity(
      [=](double x) { return normal_pdf((x * sigma - s) / ak) * scale; },
      [=](double x) {
        const double t = (x * sigma - s) / ak;
        return ak > 0.0 ? normal_cdf(t) : normal_cdf(-t);
      });
}

ConditionalDensity SumNormalsModel::conditional(std::size_t variant, PointCursor& u) const {
  std::vector<double> z(p_.a.size(), 0.0);
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (j != variant) z[j] = normal_inv(u.next());
  }
  return make(variant, z);
}

std::size_t SumNormalsModel::glr_dimension(std::size_t) const { return p_.a.size(); }

GlrSample SumNormalsModel::glr(std::size_t variant, PointCursor& u) const {
  double s = 0.0, zk = 0.0;
  for (std::size_t j = 0; j < p_.a.size(); ++j) {
    const double z = normal_inv(u.next());
    s += p_.a[j] * z;
    if (j == variant) zk = z;
  }
  return GlrSample{{GlrTerm{s / sigma_, -zk * sigma_ / p_.a[variant]}}, 1.0};
}

std::size_t SumNormalsModel::sample_dimension() const { return p_.a.size(); }

double SumNormalsModel::sample(PointCursor& u) const {
  double s = 0.0;
  for (double aj : p_.a) s += aj * normal_inv(u.next());
  return s / sigma_;
}

std::size_t SumNormalsModel::joint_dimension() const { return p_.a.size(); }

std::vector<ConditionalDensity> SumNormalsModel::joint(std::span<const std::size_t> variants,
                                                       PointCursor& u) const {
  std::vector<double> z(p_.a.size());
  for (auto& zj : z) zj = normal_inv(u.next());
  std::vector<ConditionalDensity> out;
  out.reserve(variants.size());
  for (auto k : variants) out.push_back(make(k, z));
  return out;
}

double SumNormalsModel::exact_density(double x) const { return normal_pdf(x); }

double SumNormalsModel::exact_variance(std::size_t variant, double x) const {
  return sum_normals_exact_var(p_, variant, x);
}

nlohmann::json SumNormalsModel::describe() const { return {{"a", p_.a}}; }

}  // namespace cde
