#include "cde/models/simple.hpp"

#include <algorithm>
#include <stdexcept>

namespace cde {

namespace {

void check_hide(int hide) {
  if (hide != 1 && hide != 2) throw std::invalid_argument("sum-uniforms: hide must be 1 or 2");
}

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("sum-uniforms: eps must lie in (0,1)");
}

}  // namespace

double sum_uniforms_cde(const SumUniformsParams& p, int hide, double y_other, double x) {
  check_hide(hide);
  if (hide == 1) return (y_other <= x && x <= 1.0 + y_other) ? 1.0 : 0.0;
  return (y_other <= x && x <= y_other + p.eps) ? 1.0 / p.eps : 0.0;
}

double sum_uniforms_cdf(const SumUniformsParams& p, int hide, double y_other, double x) {
  check_hide(hide);
  const double width = hide == 1 ? 1.0 : p.eps;
  return std::clamp((x - y_other) / width, 0.0, 1.0);
}

double sum_uniforms_exact_iv(const SumUniformsParams& p, int hide) {
  check_eps(p.eps);
  check_hide(hide);
  return hide == 1 ? p.eps / 3.0 : 1.0 / p.eps - 1.0 + p.eps / 3.0;
}

double sum_uniforms_density(const SumUniformsParams& p, double x) {
  const double e = p.eps;
  if (x <= 0.0 || x >= 1.0 + e) return 0.0;
  if (x < e) return x / e;
  if (x <= 1.0) return 1.0;
  return (1.0 + e - x) / e;
}

SumUniformsModel::SumUniformsModel(SumUniformsParams p) : p_(p) {
  check_eps(p_.eps);
  spec_.name = "sum-uniforms";
  spec_.a = 0.0;
  spec_.b = 1.0 + p_.eps;
  spec_.variants = {"hide-1", "hide-2"};
  spec_.kde_sample = true;
  spec_.exact_density = true;
  spec_.exact_variance = true;
  spec_.joint = true;
}

std::unique_ptr<Model> SumUniformsModel::from_json(const nlohmann::json& j) {
  SumUniformsParams p;
  p.eps = j.value("eps", p.eps);
  return std::make_unique<SumUniformsModel>(p);
}

ConditionalDensity SumUniformsModel::make(int hide, double y_other) const {
  const SumUniformsParams p = p_;
  return ConditionalDensity([=](double x) { return sum_uniforms_cde(p, hide, y_other, x); },
                            [=](double x) { return sum_uniforms_cdf(p, hide, y_other, x); });
}

ConditionalDensity SumUniformsModel::conditional(std::size_t variant, PointCursor& u) const {
  const double v = u.next();
  return variant == 0 ? make(1, p_.eps * v) : make(2, v);
}

double SumUniformsModel::sample(PointCursor& u) const {
  const double y1 = u.next();
  return y1 + p_.eps * u.next();
}

std::vector<ConditionalDensity> SumUniformsModel::joint(std::span<const std::size_t> variants,
                                                        PointCursor& u) const {
  const double y1 = u.next();
  const double y2 = p_.eps * u.next();
  std::vector<ConditionalDensity> out;
  for (auto v : variants) out.push_back(v == 0 ? make(1, y2) : make(2, y1));
  return out;
}

double SumUniformsModel::exact_density(double x) const { return sum_uniforms_density(p_, x); }

double SumUniformsModel::exact_variance(std::size_t variant, double x) const {
  const double f = sum_uniforms_density(p_, x);
  return variant == 0 ? f - f * f : f / p_.eps - f * f;
}

nlohmann::json SumUniformsModel::describe() const { return {{"eps", p_.eps}}; }

}  // namespace cde
