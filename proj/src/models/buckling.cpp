#include "cde/models/buckling.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cde {

namespace {

// Threshold t on the hidden input (X <= x iff Y_k >= t) and dt/dx.
struct Threshold {
  double t;
  double slope;
};

Threshold threshold(int k, const BucklingInputs& y, double x) {
  const auto v = buckling_terms(y);
  if (k == 5) {
    const double c = v.v1 * v.v2;
    const double scale = 4.0 * v.lambda / 3.0;
    return {(1.0 - x / c) * scale, scale / c};
  }
  if (k != 6) throw std::invalid_argument("buckling: k must be 5 or 6");
  const double c = v.v1 * v.v3;
  const double scale = y[0] / (2.0 * y[1]);
  return {(1.0 - x / c) * scale, scale / c};
}

}  // namespace

BucklingTerms buckling_terms(const BucklingInputs& y) {
  const double lambda = y[0] / y[1] * std::sqrt(y[2] / y[3]);
  return {lambda, 2.1 / lambda - 0.9 / (lambda * lambda), 1.0 - 2.0 * y[5] * y[1] / y[0],
          1.0 - 3.0 * y[4] / (4.0 * lambda)};
}

double buckling_h(const BucklingInputs& y) {
  const auto v = buckling_terms(y);
  return v.v1 * v.v2 * v.v3;
}

double buckling_cde(const BucklingParams& p, int k, const BucklingInputs& y, double x) {
  const auto th = threshold(k, y, x);
  return p.y[k - 1].pdf(th.t) * th.slope;
}

double buckling_cdf(const BucklingParams& p, int k, const BucklingInputs& y, double x) {
  return 1.0 - p.y[k - 1].cdf(threshold(k, y, x).t);
}

double buckling_psi6(const BucklingParams& p, const BucklingInputs& y) {
  const auto& d6 = p.y[5];
  if (d6.kind() != Distribution::Kind::normal) {
    throw std::invalid_argument("buckling: psi-6 needs a normal Y6");
  }
  const auto v = buckling_terms(y);
  const double c = v.v1 * v.v3;
  return y[0] * (y[5] - d6.p1()) / (2.0 * c * y[1] * d6.p2() * d6.p2());
}

BucklingModel::BucklingModel(BucklingParams p) : p_(std::move(p)) {
  spec_.name = "buckling";
  spec_.a = 0.5169;
  spec_.b = 0.6511;
  spec_.variants = {"g-5", "g-6"};
  if (p_.y[5].kind() == Distribution::Kind::normal) spec_.glr_variants = {"psi-6"};
  spec_.kde_sample = true;
  spec_.joint = true;
}

std::unique_ptr<Model> BucklingModel::from_json(const nlohmann::json& j) {
  BucklingParams p;
  if (j.contains("inputs")) {
    const auto& in = j.at("inputs");
    if (!in.is_array() || in.size() != 6) throw std::invalid_argument("buckling: 'inputs' needs 6 entries");
    for (std::size_t i = 0; i < 6; ++i) p.y[i] = Distribution::from_json(in[i]);
  }
  return std::make_unique<BucklingModel>(p);
}

bool BucklingModel::admissible(int k, const BucklingInputs& y) {
  if (!(y[0] > 0.0 && y[1] > 0.0 && y[3] > 0.0)) return false;
  const auto v = buckling_terms(y);
  if (!(v.lambda > 0.0 && v.v1 > 0.0)) return false;
  if (k == 5) return v.v2 > 0.0;
  if (k == 6) return v.v3 > 0.0;
  return v.v2 > 0.0 && v.v3 > 0.0;
}

ConditionalDensity BucklingModel::make(int k, const BucklingInputs& y) const {
  if (!admissible(k, y)) {
    count_rejection();
    return zero_density();
  }
  const BucklingParams p = p_;
  return ConditionalDensity([p, k, y](double x) { return buckling_cde(p, k, y, x); },
                            [p, k, y](double x) { return buckling_cdf(p, k, y, x); });
}

ConditionalDensity BucklingModel::conditional(std::size_t variant, PointCursor& u) const {
  const int k = variant == 0 ? 5 : 6;
  BucklingInputs y{};
  for (int j = 0; j < 6; ++j) {
    if (j != k - 1) y[j] = p_.y[j].quantile(u.next());
  }
  y[k - 1] = p_.y[k - 1].mean();
  return make(k, y);
}

GlrSample BucklingModel::glr(std::size_t, PointCursor& u) const {
  BucklingInputs y;
  for (int j = 0; j < 6; ++j) y[j] = p_.y[j].quantile(u.next());
  if (!admissible(0, y)) {
    count_rejection();
    return GlrSample{{}, 1.0};
  }
  return GlrSample{{GlrTerm{buckling_h(y), buckling_psi6(p_, y)}}, 1.0};
}

double BucklingModel::sample(PointCursor& u) const {
  BucklingInputs y;
  for (int j = 0; j < 6; ++j) y[j] = p_.y[j].quantile(u.next());
  if (!admissible(0, y)) {
    count_rejection();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return buckling_h(y);
}

std::vector<ConditionalDensity> BucklingModel::joint(std::span<const std::size_t> variants,
                                                     PointCursor& u) const {
  BucklingInputs y;
  for (int j = 0; j < 6; ++j) y[j] = p_.y[j].quantile(u.next());
  std::vector<ConditionalDensity> out;
  for (auto v : variants) out.push_back(make(v == 0 ? 5 : 6, y));
  return out;
}

nlohmann::json BucklingModel::describe() const {
  nlohmann::json in = nlohmann::json::array();
  for (const auto& d : p_.y) in.push_back(d.to_json());
  return {{"inputs", in}};
}

}  // namespace cde
