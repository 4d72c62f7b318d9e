#include "cde/estimator_core.hpp"

#include "cde/distributions.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cde {

ConditionalDensity::ConditionalDensity(Fn density, Fn cdf, double weight, GridFn grid)
    : density_(std::move(density)), cdf_(std::move(cdf)), weight_(weight), grid_(std::move(grid)) {}

void ConditionalDensity::add_density_on_grid(std::span<const double> xs,
                                             std::span<double> out) const {
  if (grid_) {
    grid_(xs, out);
    return;
  }
  for (std::size_t j = 0; j < xs.size(); ++j) out[j] += density_(xs[j]);
}

double cde_average(std::span<const ConditionalDensity> densities, double x) {
  if (densities.empty()) throw std::invalid_argument("cde_average: no densities");
  double s = 0.0;
  for (const auto& d : densities) s += d.density(x);
  return s / static_cast<double>(densities.size());
}

double cdf_average(std::span<const ConditionalDensity> densities, double x) {
  if (densities.empty()) throw std::invalid_argument("cdf_average: no densities");
  double s = 0.0;
  for (const auto& d : densities) s += d.cdf(x);
  return s / static_cast<double>(densities.size());
}

double max_cdf_jump(const ConditionalDensity& d, double a, double b, std::size_t m) {
  if (!(a < b) || m == 0) throw std::invalid_argument("max_cdf_jump: need a < b and m >= 1");
  double prev = d.cdf(a), jump = 0.0;
  for (std::size_t i = 1; i <= m; ++i) {
    const double cur = d.cdf(a + (b - a) * static_cast<double>(i) / static_cast<double>(m));
    jump = std::max(jump, std::abs(cur - prev));
    prev = cur;
  }
  return jump;
}

double kde_estimate(std::span<const double> samples, const KdeSpec& spec, double x) {
  if (samples.empty()) throw std::invalid_argument("kde_estimate: no samples");
  if (!(spec.h > 0.0)) throw std::invalid_argument("kde_estimate: bandwidth must be positive");
  double s = 0.0;
  for (double xi : samples) s += normal_pdf((x - xi) / spec.h);
  return s / (static_cast<double>(samples.size()) * spec.h);
}

double kde_bandwidth(std::span<const double> samples, double /*a*/, double /*b*/) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("kde_bandwidth: need at least 2 samples");
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw std::invalid_argument("kde_bandwidth: samples have zero variance");
  return 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
}

void kde_on_grid(std::vector<double>& samples, double h, std::span<const double> xs,
                 std::span<double> out) {
  if (samples.empty()) throw std::invalid_argument("kde_on_grid: no samples");
  if (!(h > 0.0)) throw std::invalid_argument("kde_on_grid: bandwidth must be positive");
  std::sort(samples.begin(), samples.end());
  constexpr double cutoff = 9.0;  // phi(9) ~ 1e-18
  const double scale = 1.0 / (static_cast<double>(samples.size()) * h);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const auto lo = std::lower_bound(samples.begin(), samples.end(), xs[j] - cutoff * h);
    const auto hi = std::upper_bound(lo, samples.end(), xs[j] + cutoff * h);
    double s = 0.0;
    for (auto it = lo; it != hi; ++it) s += normal_pdf((xs[j] - *it) / h);
    out[j] += s * scale;
  }
}

double GlrSample::value(double x) const {
  double s = 0.0;
  for (const auto& t : terms) {
    if (t.threshold <= x) s += t.psi;
  }
  return s;
}

void GlrSample::add_on_grid(std::span<const double> xs, std::span<double> out) const {
  for (const auto& t : terms) {
    // First grid index with xs[j] >= threshold; the term is live from there on.
    const auto first = std::lower_bound(xs.begin(), xs.end(), t.threshold) - xs.begin();
    for (std::size_t j = static_cast<std::size_t>(first); j < xs.size(); ++j) out[j] += t.psi;
  }
}

double glrde_estimate(std::span<const GlrTerm> terms, double x) {
  if (terms.empty()) throw std::invalid_argument("glrde_estimate: no terms");
  double s = 0.0;
  for (const auto& t : terms) {
    if (t.threshold <= x) s += t.psi;
  }
  return s / static_cast<double>(terms.size());
}

ComboWeights fit_combo_weights(const std::vector<std::vector<double>>& estimates, std::size_t n_r,
                               std::size_t n_e, double cell_width) {
  const std::size_t q1 = estimates.size();
  if (q1 < 2) throw std::invalid_argument("fit_combo_weights: need at least two estimators");
  if (n_r < 2) throw std::invalid_argument("fit_combo_weights: need at least two replications");
  for (const auto& m : estimates) {
    if (m.size() != n_r * n_e) throw std::invalid_argument("fit_combo_weights: matrix shape mismatch");
  }
  const std::size_t q = q1 - 1;
  // Centered control variates C_l = f0 - f_l and centered f0, per grid point.
  Eigen::MatrixXd cc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
  Eigen::VectorXd cf = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q));
  std::vector<double> c(q * n_r), f0(n_r);
  for (std::size_t j = 0; j < n_e; ++j) {
    double f0_mean = 0.0;
    for (std::size_t r = 0; r < n_r; ++r) f0_mean += estimates[0][r * n_e + j];
    f0_mean /= static_cast<double>(n_r);
    for (std::size_t r = 0; r < n_r; ++r) f0[r] = estimates[0][r * n_e + j] - f0_mean;
    for (std::size_t l = 0; l < q; ++l) {
      double m = 0.0;
      for (std::size_t r = 0; r < n_r; ++r) {
        c[l * n_r + r] = estimates[0][r * n_e + j] - estimates[l + 1][r * n_e + j];
        m += c[l * n_r + r];
      }
      m /= static_cast<double>(n_r);
      for (std::size_t r = 0; r < n_r; ++r) c[l * n_r + r] -= m;
    }
    for (std::size_t l = 0; l < q; ++l) {
      for (std::size_t k = 0; k <= l; ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < n_r; ++r) s += c[l * n_r + r] * c[k * n_r + r];
        cc(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) += s;
      }
      double s = 0.0;
      for (std::size_t r = 0; r < n_r; ++r) s += c[l * n_r + r] * f0[r];
      cf(static_cast<Eigen::Index>(l)) += s;
    }
  }
  const double norm = cell_width / static_cast<double>(n_r - 1);
  cc = cc.selfadjointView<Eigen::Lower>();
  cc *= norm;
  cf *= norm;

  ComboWeights w;
  w.beta.assign(q1, 0.0);
  w.beta[0] = 1.0;
  const double scale = cc.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) {
    w.singular = true;
    return w;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cc);
  const auto d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-12 * scale) {
    w.singular = true;
    return w;
  }
  const Eigen::VectorXd b = ldlt.solve(cf);
  double sum = 0.0;
  for (std::size_t l = 0; l < q; ++l) {
    w.beta[l + 1] = b(static_cast<Eigen::Index>(l));
    sum += w.beta[l + 1];
  }
  w.beta[0] = 1.0 - sum;
  return w;
}

void RatioAccumulator::add(std::vector<double> numerators, double denominator) {
  if (numerators.size() != n_points_) throw std::invalid_argument("RatioAccumulator: row size mismatch");
  num_.push_back(std::move(numerators));
  den_.push_back(denominator);
}

RatioEstimate ratio_density(const RatioAccumulator& acc, std::size_t point,
                            double known_mean_denominator) {
  const std::size_t m = acc.replications();
  if (m == 0) throw std::invalid_argument("ratio_density: no replications");
  double sd = 0.0, sn = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    sd += acc.numerator(r, point);
    sn += acc.denominator(r);
  }
  const double mean_d = sd / static_cast<double>(m);
  const double mean_n = sn / static_cast<double>(m);
  const bool known = known_mean_denominator > 0.0;
  if (!known && !(sn > 0.0)) throw std::invalid_argument("ratio_density: zero denominator");
  const double denom = known ? known_mean_denominator : mean_n;
  RatioEstimate out{mean_d / denom, std::numeric_limits<double>::quiet_NaN()};
  if (m < 2) return out;
  double vd = 0.0, vn = 0.0, cov = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double dd = acc.numerator(r, point) - mean_d;
    const double dn = acc.denominator(r) - mean_n;
    vd += dd * dd;
    vn += dn * dn;
    cov += dd * dn;
  }
  const double k = 1.0 / static_cast<double>(m - 1);
  vd *= k;
  vn *= k;
  cov *= k;
  const double f = out.estimate;
  const double v = known ? vd : vd + vn * f * f - 2.0 * cov * f;
  out.variance = std::max(0.0, v) / (static_cast<double>(m) * denom * denom);
  return out;
}

}  // namespace cde
