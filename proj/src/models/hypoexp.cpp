#include "cde/models/hypoexp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cde {

double hypoexp_min_relative_gap(std::span<const double> rates) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < rates.size(); ++j) {
    for (std::size_t k = j + 1; k < rates.size(); ++k) {
      gap = std::min(gap, std::abs(rates[k] - rates[j]) / std::max(rates[k], rates[j]));
    }
  }
  return gap;
}

Hypoexponential::Hypoexponential(std::vector<double> rates, HypoexpMethod method)
    : rates_(std::move(rates)) {
  if (rates_.empty()) throw std::invalid_argument("hypoexponential: no rates");
  for (double r : rates_) {
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("hypoexponential: rates must be positive");
  }
  const double gap = hypoexp_min_relative_gap(rates_);
  switch (method) {
    case HypoexpMethod::automatic:
      uniform_ = gap < kHypoexpTieGap;
      break;
    case HypoexpMethod::product:
      if (gap == 0.0) throw std::invalid_argument("hypoexponential: product formula needs distinct rates");
      uniform_ = false;
      break;
    case HypoexpMethod::uniformization:
      uniform_ = true;
      break;
  }
  if (uniform_) return;
  const std::size_t c = rates_.size();
  p_.assign(c, 1.0);
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t k = 0; k < c; ++k) {
      if (k != j) p_[j] *= rates_[k] / (rates_[k] - rates_[j]);
    }
  }
}

std::vector<double> Hypoexponential::transient(double x) const {
  const std::size_t c = rates_.size();
  const double q = *std::max_element(rates_.begin(), rates_.end());
  const double qx = q * x;
  // DTMC with P = I + Q/q on states 0..c-1 (state c absorbing, dropped).
  std::vector<double> v(c, 0.0), next(c), out(c, 0.0);
  v[0] = 1.0;
  double mass = 0.0;
  const double log_qx = std::log(qx);
  for (std::size_t k = 0;; ++k) {
    const double logw = -qx + static_cast<double>(k) * log_qx - std::lgamma(static_cast<double>(k) + 1.0);
    const double w = std::exp(logw);
    mass += w;
    for (std::size_t i = 0; i < c; ++i) out[i] += w * v[i];
    if (static_cast<double>(k) > qx && 1.0 - mass < 1e-12) break;
    if (k > 100000 + static_cast<std::size_t>(10.0 * qx)) {
      throw std::runtime_error("hypoexponential: uniformization did not converge");
    }
    for (std::size_t i = 0; i < c; ++i) {
      const double stay = 1.0 - rates_[i] / q;
      next[i] = v[i] * stay + (i > 0 ? v[i - 1] * rates_[i - 1] / q : 0.0);
    }
    std::swap(v, next);
  }
  return out;
}

double Hypoexponential::density(double x) const {
  if (x < 0.0) return 0.0;
  const std::size_t c = rates_.size();
  if (x == 0.0) return c == 1 ? rates_[0] : 0.0;
  if (uniform_) return std::max(0.0, rates_.back() * transient(x).back());
  double f = 0.0;
  for (std::size_t j = 0; j < c; ++j) f += rates_[j] * p_[j] * std::exp(-rates_[j] * x);
  return std::max(0.0, f);
}

double Hypoexponential::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  double tail = 0.0;
  if (uniform_) {
    for (double v : transient(x)) tail += v;
  } else {
    for (std::size_t j = 0; j < rates_.size(); ++j) tail += p_[j] * std::exp(-rates_[j] * x);
  }
  return std::clamp(1.0 - tail, 0.0, 1.0);
}

double hypoexp_density(std::span<const double> rates, double x, HypoexpMethod method) {
  return Hypoexponential({rates.begin(), rates.end()}, method).density(x);
}

double hypoexp_cdf(std::span<const double> rates, double x, HypoexpMethod method) {
  return Hypoexponential({rates.begin(), rates.end()}, method).cdf(x);
}

}  // namespace cde
