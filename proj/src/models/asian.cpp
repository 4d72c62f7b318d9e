#include "cde/models/asian.hpp"

#include "cde/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace cde {

namespace {

struct BridgeStep {
  std::size_t j, l, r;  // Y_j sampled given Y_l and Y_r; index 0 is Y_0 = 0
};

std::vector<BridgeStep> bridge_plan(std::size_t s) {
  std::vector<BridgeStep> plan{{s, 0, 0}};
  std::deque<std::pair<std::size_t, std::size_t>> queue{{0, s}};
  while (!queue.empty()) {
    const auto [l, r] = queue.front();
    queue.pop_front();
    if (r - l < 2) continue;
    const std::size_t m = (l + r) / 2;
    plan.push_back({m, l, r});
    queue.emplace_back(l, m);
    queue.emplace_back(m, r);
  }
  return plan;
}

std::vector<double> cumulative(const std::vector<double>& v, bool squared) {
  std::vector<double> c(v.size() + 1, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) c[i + 1] = c[i] + (squared ? v[i] * v[i] : v[i]);
  return c;
}

}  // namespace

void AsianParams::validate() const {
  if (mu.empty() || mu.size() != sigma.size()) {
    throw std::invalid_argument("asian: mu and sigma need the same positive length");
  }
  for (double v : sigma) {
    if (!(v > 0.0)) throw std::invalid_argument("asian: sigma_j must be positive");
  }
  if (!(s0 > 0.0)) throw std::invalid_argument("asian: s0 must be positive");
  if (!(strike < upper)) throw std::invalid_argument("asian: strike must be below upper");
}

std::vector<std::size_t> bridge_order(std::size_t s) {
  std::vector<std::size_t> order;
  for (const auto& st : bridge_plan(s)) order.push_back(st.j);
  return order;
}

double asian_sequential_cde(const AsianParams& p, const std::vector<double>& y, double x) {
  const std::size_t s = p.steps();
  double partial = 0.0;
  for (std::size_t j = 0; j + 1 < s; ++j) partial += p.s0 * std::exp(y[j]);
  const double r = static_cast<double>(s) * x - partial;
  if (!(r > 0.0)) return 0.0;
  const double ylast = s >= 2 ? y[s - 2] : 0.0;
  const double sd = p.sigma[s - 1];
  const double w = (std::log(r) - std::log(p.s0) - ylast - p.mu[s - 1]) / sd;
  return normal_pdf(w) * static_cast<double>(s) / (r * sd);
}

double asian_sequential_cdf(const AsianParams& p, const std::vector<double>& y, double x) {
  const std::size_t s = p.steps();
  double partial = 0.0;
  for (std::size_t j = 0; j + 1 < s; ++j) partial += p.s0 * std::exp(y[j]);
  const double r = static_cast<double>(s) * x - partial;
  if (!(r > 0.0)) return 0.0;
  const double ylast = s >= 2 ? y[s - 2] : 0.0;
  return normal_cdf((std::log(r) - std::log(p.s0) - ylast - p.mu[s - 1]) / p.sigma[s - 1]);
}

AsianGamma::AsianGamma(double s0, std::vector<double> y0, std::vector<double> c)
    : s0_(s0), y0_(std::move(y0)), c_(std::move(c)) {
  if (y0_.empty() || y0_.size() != c_.size()) throw std::invalid_argument("asian: bad gamma terms");
}

AsianGamma AsianGamma::from_normals(const AsianParams& p, const std::vector<double>& z) {
  const std::size_t s = p.steps();
  if (z.size() + 1 != s) throw std::invalid_argument("asian: bridge needs s-1 normals");
  const auto m = cumulative(p.mu, false);
  const auto v = cumulative(p.sigma, true);
  std::vector<double> y(s + 1, 0.0), c(s + 1, 0.0);
  const auto plan = bridge_plan(s);
  y[s] = m[s];
  c[s] = std::sqrt(v[s]);
  for (std::size_t k = 1; k < plan.size(); ++k) {
    const auto [j, l, r] = plan[k];
    const double span = v[r] - v[l];
    const double wgt = (v[j] - v[l]) / span;
    const double sd = std::sqrt((v[j] - v[l]) * (v[r] - v[j]) / span);
    y[j] = y[l] + (m[j] - m[l]) + wgt * (y[r] - y[l] - (m[r] - m[l])) + sd * z[k - 1];
    c[j] = c[l] + wgt * (c[r] - c[l]);
  }
  return AsianGamma(p.s0, std::vector<double>(y.begin() + 1, y.end()),
                    std::vector<double>(c.begin() + 1, c.end()));
}

double AsianGamma::value(double z) const {
  double sum = 0.0;
  for (std::size_t j = 0; j < y0_.size(); ++j) sum += std::exp(y0_[j] + z * c_[j]);
  return s0_ / static_cast<double>(y0_.size()) * sum;
}

std::pair<double, double> AsianGamma::eval(double z) const {
  double sum = 0.0, dsum = 0.0;
  for (std::size_t j = 0; j < y0_.size(); ++j) {
    const double e = std::exp(y0_[j] + z * c_[j]);
    sum += e;
    dsum += e * c_[j];
  }
  const double k = s0_ / static_cast<double>(y0_.size());
  return {k * sum, k * dsum};
}

NewtonResult gamma_inverse_newton(const std::function<std::pair<double, double>(double)>& g, double x,
                                  double z0, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("gamma_inverse_newton: empty bracket");
  const double lo0 = lo, hi0 = hi;
  const double tol = 1e-12 * std::max(1.0, std::abs(x));
  double z = std::clamp(z0, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const auto [v, d] = g(z);
    const double r = v - x;
    if (std::abs(r) <= tol) return {z, r, d, it};
    if (r < 0.0) {
      lo = z;
    } else {
      hi = z;
    }
    if (hi - lo <= 1e-15 * (1.0 + std::abs(z))) {
      if (lo == lo0 || hi == hi0) break;
      return {z, r, d, it};
    }
    double zn = d > 0.0 ? z - r / d : lo - 1.0;
    if (!(zn > lo && zn < hi)) zn = 0.5 * (lo + hi);
    z = zn;
  }
  throw std::out_of_range("gamma_inverse_newton: " + std::to_string(x) +
                          " is outside the range of gamma on the bracket");
}

double AsianGamma::inverse(double x, double z0) const {
  return gamma_inverse_newton([this](double z) { return eval(z); }, x, z0).z;
}

double AsianGamma::density(double x) const {
  if (!(x > value(-kGammaBracket) && x < value(kGammaBracket))) return 0.0;
  const auto r = gamma_inverse_newton([this](double z) { return eval(z); }, x, 0.0);
  return normal_pdf(r.z) / r.slope;
}

double AsianGamma::cdf(double x) const {
  if (!(x > value(-kGammaBracket))) return 0.0;
  if (!(x < value(kGammaBracket))) return 1.0;
  return normal_cdf(inverse(x));
}

void AsianGamma::add_density_on_grid(std::span<const double> xs, std::span<double> out) const {
  const auto g = [this](double z) { return eval(z); };
  const double lo_val = value(-kGammaBracket), hi_val = value(kGammaBracket);
  const double mid = value(0.0);
  const std::size_t start =
      static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), mid) - xs.begin());
  double z = 0.0;
  double z_start = 0.0;
  for (std::size_t j = start; j < xs.size(); ++j) {
    if (!(xs[j] < hi_val)) break;
    const auto r = gamma_inverse_newton(g, xs[j], z);
    z = r.z;
    if (j == start) z_start = z;
    out[j] += normal_pdf(z) / r.slope;
  }
  z = z_start;
  for (std::size_t j = start; j-- > 0;) {
    if (!(xs[j] > lo_val)) break;
    const auto r = gamma_inverse_newton(g, xs[j], z);
    z = r.z;
    out[j] += normal_pdf(z) / r.slope;
  }
}

AsianModel::AsianModel(AsianParams p) : p_(std::move(p)) {
  p_.validate();
  if (p_.steps() < 2) throw std::invalid_argument("asian: the model needs s >= 2");
  order_ = bridge_order(p_.steps());
  shared_ = std::make_shared<const AsianParams>(p_);
  spec_.name = "asian";
  spec_.a = p_.strike;
  spec_.b = p_.upper;
  spec_.variants = {"seq", "bridge"};
  spec_.kde_sample = true;
  spec_.joint = true;
}

std::unique_ptr<Model> AsianModel::from_json(const nlohmann::json& j) {
  AsianParams p;
  p.s0 = j.value("s0", p.s0);
  const std::size_t s = j.value("s", p.steps());
  auto per_step = [&](const char* key, double fallback) {
    if (!j.contains(key)) return std::vector<double>(s, fallback);
    const auto& v = j.at(key);
    if (v.is_number()) return std::vector<double>(s, v.get<double>());
    auto vec = v.get<std::vector<double>>();
    if (vec.size() != s) throw std::invalid_argument(std::string("asian: '") + key + "' needs s entries");
    return vec;
  };
  p.mu = per_step("mu", p.mu[0]);
  p.sigma = per_step("sigma", p.sigma[0]);
  p.strike = j.value("strike", p.strike);
  p.upper = j.value("upper", p.upper);
  return std::make_unique<AsianModel>(p);
}

ConditionalDensity AsianModel::sequential(std::vector<double> y) const {
  auto p = shared_;
  auto yy = std::make_shared<const std::vector<double>>(std::move(y));
  return ConditionalDensity([p, yy](double x) { return asian_sequential_cde(*p, *yy, x); },
                            [p, yy](double x) { return asian_sequential_cdf(*p, *yy, x); });
}

ConditionalDensity AsianModel::bridge(const std::vector<double>& z) const {
  auto g = std::make_shared<const AsianGamma>(AsianGamma::from_normals(p_, z));
  return ConditionalDensity([g](double x) { return g->density(x); }, [g](double x) { return g->cdf(x); },
                            1.0, [g](std::span<const double> xs, std::span<double> out) {
                              g->add_density_on_grid(xs, out);
                            });
}

ConditionalDensity AsianModel::conditional(std::size_t variant, PointCursor& u) const {
  const std::size_t s = p_.steps();
  if (variant == 0) {
    std::vector<double> y(s - 1);
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < s; ++j) {
      acc += p_.mu[j] + p_.sigma[j] * normal_inv(u.next());
      y[j] = acc;
    }
    return sequential(std::move(y));
  }
  std::vector<double> z(s - 1);
  for (auto& v : z) v = normal_inv(u.next());
  return bridge(z);
}

double AsianModel::sample(PointCursor& u) const {
  double acc = 0.0, sum = 0.0;
  for (std::size_t j = 0; j < p_.steps(); ++j) {
    acc += p_.mu[j] + p_.sigma[j] * normal_inv(u.next());
    sum += std::exp(acc);
  }
  return p_.s0 * sum / static_cast<double>(p_.steps());
}

std::vector<ConditionalDensity> AsianModel::joint(std::span<const std::size_t> variants,
                                                  PointCursor& u) const {
  // Bridge layout: Z_s first, then the other normals in bridge order.
  const double zs = normal_inv(u.next());
  std::vector<double> z(p_.steps() - 1);
  for (auto& v : z) v = normal_inv(u.next());
  std::vector<ConditionalDensity> out;
  for (auto v : variants) {
    if (v == 1) {
      out.push_back(bridge(z));
      continue;
    }
    const auto g = AsianGamma::from_normals(p_, z);
    std::vector<double> y(p_.steps() - 1);
    for (std::size_t j = 0; j + 1 < p_.steps(); ++j) y[j] = g.y0()[j] + zs * g.slopes()[j];
    out.push_back(sequential(std::move(y)));
  }
  return out;
}

nlohmann::json AsianModel::describe() const {
  return {{"s0", p_.s0}, {"s", p_.steps()}, {"mu", p_.mu}, {"sigma", p_.sigma},
          {"strike", p_.strike}, {"upper", p_.upper}};
}

}  // namespace cde
