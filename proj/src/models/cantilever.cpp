#include "cde/models/cantilever.hpp"

#include "cde/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace cde {

namespace {

double pow4(double v) { return v * v * v * v; }

}  // namespace

double cantilever_h(const CantileverParams& p, const CantileverInputs& y) {
  const double s = y[1] * y[1] / pow4(p.w) + y[2] * y[2] / pow4(p.t);
  return p.kappa() / y[0] * std::sqrt(s);
}

double cantilever_cde(const CantileverParams& p, int k, const CantileverInputs& y, double x) {
  if (!(x > 0.0)) return 0.0;
  const double kappa = p.kappa();
  const double w4 = pow4(p.w), t4 = pow4(p.t);
  if (k == 1) {
    const double w1 = kappa / x * std::sqrt(y[1] * y[1] / w4 + y[2] * y[2] / t4);
    return normal_pdf((w1 - p.mu[0]) / p.sd[0]) * w1 / (x * p.sd[0]);
  }
  if (k != 2 && k != 3) throw std::invalid_argument("cantilever: k must be 1, 2 or 3");
  // Hidden Y_k satisfies Y_k^2 <= c^4 ((x Y1/kappa)^2 - other) =: r^2.
  const double c4 = k == 2 ? w4 : t4;
  const double other = k == 2 ? y[2] * y[2] / t4 : y[1] * y[1] / w4;
  const double q = x * y[0] / kappa;
  const double wk = c4 * (q * q - other);
  if (wk <= 0.0) return 0.0;
  const double r = std::sqrt(wk);
  const double mu = p.mu[k - 1], sd = p.sd[k - 1];
  const double dens = normal_pdf((r - mu) / sd) + normal_pdf((r + mu) / sd);
  return dens / sd * c4 * x * (y[0] / kappa) * (y[0] / kappa) / r;
}

double cantilever_cdf(const CantileverParams& p, int k, const CantileverInputs& y, double x) {
  if (!(x > 0.0)) return 0.0;
  const double kappa = p.kappa();
  const double w4 = pow4(p.w), t4 = pow4(p.t);
  if (k == 1) {
    const double w1 = kappa / x * std::sqrt(y[1] * y[1] / w4 + y[2] * y[2] / t4);
    return normal_cdf(-(w1 - p.mu[0]) / p.sd[0]);
  }
  if (k != 2 && k != 3) throw std::invalid_argument("cantilever: k must be 1, 2 or 3");
  const double c4 = k == 2 ? w4 : t4;
  const double other = k == 2 ? y[2] * y[2] / t4 : y[1] * y[1] / w4;
  const double q = x * y[0] / kappa;
  const double wk = c4 * (q * q - other);
  if (wk <= 0.0) return 0.0;
  const double r = std::sqrt(wk);
  const double mu = p.mu[k - 1], sd = p.sd[k - 1];
  return normal_cdf((r - mu) / sd) - normal_cdf(-(r + mu) / sd);
}

double cantilever_psi(const CantileverParams& p, int j, const CantileverInputs& y) {
  const double w4 = pow4(p.w), t4 = pow4(p.t);
  const double h = cantilever_h(p, y);
  const double s = y[1] * y[1] / w4 + y[2] * y[2] / t4;
  auto z = [&](int i) { return (y[i] - p.mu[i]) / (p.sd[i] * p.sd[i]); };
  switch (j) {
    case 1:
      return (y[0] * z(0) - 2.0) / h;
    case 2:
      return -(y[1] * z(1) * s + y[2] * y[2] / t4) / (h * y[1] * y[1] / w4);
    case 3:
      return -(y[2] * z(2) * s + y[1] * y[1] / w4) / (h * y[2] * y[2] / t4);
    default:
      throw std::invalid_argument("cantilever: psi index must be 1, 2 or 3");
  }
}

CantileverModel::CantileverModel(CantileverParams p) : p_(p) {
  for (double s : p_.sd) {
    if (!(s > 0.0)) throw std::invalid_argument("cantilever: standard deviations must be positive");
  }
  spec_.name = "cantilever";
  spec_.a = 3.1707;
  spec_.b = 5.6675;
  spec_.variants = {"g-1", "g-2", "g-3"};
  spec_.glr_variants = {"psi-1", "psi-2", "psi-3"};
  spec_.kde_sample = true;
  spec_.joint = true;
}

std::unique_ptr<Model> CantileverModel::from_json(const nlohmann::json& j) {
  CantileverParams p;
  p.l = j.value("l", p.l);
  p.w = j.value("w", p.w);
  p.t = j.value("t", p.t);
  if (j.contains("mu")) p.mu = j.at("mu").get<std::array<double, 3>>();
  if (j.contains("sd")) p.sd = j.at("sd").get<std::array<double, 3>>();
  return std::make_unique<CantileverModel>(p);
}

double CantileverModel::draw(int j, PointCursor& u) const {
  return p_.mu[j] + p_.sd[j] * normal_inv(u.next());
}

ConditionalDensity CantileverModel::make(int k, const CantileverInputs& y) const {
  const CantileverParams p = p_;
  return ConditionalDensity([=](double x) { return cantilever_cde(p, k, y, x); },
                            [=](double x) { return cantilever_cdf(p, k, y, x); });
}

ConditionalDensity CantileverModel::conditional(std::size_t variant, PointCursor& u) const {
  const int k = static_cast<int>(variant) + 1;
  CantileverInputs y{0.0, 0.0, 0.0};
  for (int j = 0; j < 3; ++j) {
    if (j != k - 1) y[j] = draw(j, u);
  }
  return make(k, y);
}

GlrSample CantileverModel::glr(std::size_t variant, PointCursor& u) const {
  CantileverInputs y;
  for (int j = 0; j < 3; ++j) y[j] = draw(j, u);
  const int k = static_cast<int>(variant) + 1;
  if (y[0] <= 0.0 || (k > 1 && y[k - 1] == 0.0)) {
    count_rejection();
    return GlrSample{{}, 1.0};
  }
  return GlrSample{{GlrTerm{cantilever_h(p_, y), cantilever_psi(p_, k, y)}}, 1.0};
}

double CantileverModel::sample(PointCursor& u) const {
  CantileverInputs y;
  for (int j = 0; j < 3; ++j) y[j] = draw(j, u);
  return cantilever_h(p_, y);
}

std::vector<ConditionalDensity> CantileverModel::joint(std::span<const std::size_t> variants,
                                                       PointCursor& u) const {
  CantileverInputs y;
  for (int j = 0; j < 3; ++j) y[j] = draw(j, u);
  std::vector<ConditionalDensity> out;
  for (auto v : variants) out.push_back(make(static_cast<int>(v) + 1, y));
  return out;
}

nlohmann::json CantileverModel::describe() const {
  return {{"l", p_.l}, {"w", p_.w}, {"t", p_.t}, {"mu", p_.mu}, {"sd", p_.sd}};
}

}  // namespace cde
