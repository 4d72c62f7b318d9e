#include "cde/models/failure.hpp"
#include "cde/models/hypoexp.hpp"
#include "cde/rng_points.hpp"

#include "doctest.h"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace cde;

namespace {

std::vector<std::size_t> shuffled(std::size_t d, UniformStream& st) {
  std::vector<std::size_t> pi(d);
  std::iota(pi.begin(), pi.end(), 0);
  for (std::size_t i = d; i > 1; --i) std::swap(pi[i - 1], pi[static_cast<std::size_t>(st.next() * i)]);
  return pi;
}

}  // namespace

TEST_CASE("critical numbers of simple structures") {
  auto st = rng_stream(100, 0);
  const FailureSpec series(Structure::series(5), std::vector<double>(5, 1.0));
  const FailureSpec parallel(Structure::parallel(5), std::vector<double>(5, 1.0));
  for (int r = 0; r < 20; ++r) {
    const auto pi = shuffled(5, st);
    CHECK(series.critical_forward(pi) == 1);
    CHECK(series.critical_reverse(pi) == 1);
    CHECK(parallel.critical_forward(pi) == 5);
    CHECK(parallel.critical_reverse(pi) == 5);
  }
  // Two parallel pairs in series: 0->1 via arcs 0 or 1, then 1->2 via 2 or 3.
  const FailureSpec bridge(Structure::graph(3, {{0, 1}, {0, 1}, {1, 2}, {1, 2}}, 0, 2), {1.0, 2.0, 3.0, 4.0});
  CHECK(bridge.critical_forward({0, 2, 1, 3}) == 3);
  CHECK(bridge.critical_forward({0, 1, 2, 3}) == 2);
  CHECK(bridge.critical_reverse({0, 2, 1, 3}) == 3);
  CHECK(bridge.stage_rates({0, 2, 1, 3}, 3) == std::vector<double>{10.0, 9.0, 6.0});
}

TEST_CASE("activity network connectivity with unit rates") {
  const FailureSpec spec(Structure::san_standard(), std::vector<double>(13, 1.0));
  auto st = rng_stream(101, 0);
  const auto pts = mc_points(500, 13, st);
  for (std::size_t i = 0; i < 500; ++i) {
    auto c = pts.cursor(i);
    const auto d = failure_simulate(spec, c);
    REQUIRE(d.critical >= 1);
    REQUIRE(d.critical <= 13);
    CHECK(spec.critical_reverse(d.pi) == d.critical);
    for (std::size_t j = 0; j < d.critical; ++j) CHECK(d.stage_rates[j] == doctest::Approx(13.0 - j));
    CHECK(std::is_sorted(d.pi.begin(), d.pi.end(), [&](auto a, auto b) { return d.lifetimes[a] < d.lifetimes[b]; }));
  }
}

TEST_CASE("invalid structures are rejected") {
  CHECK_THROWS(FailureSpec(Structure::series(3), {1.0, 1.0}));
  CHECK_THROWS(FailureSpec(Structure::series(2), {1.0, -1.0}));
  // Sink unreachable even with every arc up.
  CHECK_THROWS(FailureSpec(Structure::graph(3, {{0, 1}}, 0, 2), {1.0}));
}

TEST_CASE("hypoexponential closed forms") {
  const std::vector<double> one{13.0};
  CHECK(hypoexp_density(one, 0.0) == doctest::Approx(13.0));
  CHECK(hypoexp_density(one, 0.2) == doctest::Approx(13.0 * std::exp(-2.6)));
  CHECK(hypoexp_cdf(one, 0.2) == doctest::Approx(1.0 - std::exp(-2.6)));

  const Hypoexponential two({2.0, 1.0});
  CHECK(two.weights()[0] == doctest::Approx(-1.0));
  CHECK(two.weights()[1] == doctest::Approx(2.0));
  CHECK(std::abs(two.density(0.0)) < 1e-12);
  for (double x : {0.01, 0.3, 1.0, 2.5, 7.0}) {
    CHECK(std::abs(two.density(x) - 2.0 * (std::exp(-x) - std::exp(-2.0 * x))) < 1e-12);
    CHECK(std::abs(two.cdf(x) - (1.0 - 2.0 * std::exp(-x) + std::exp(-2.0 * x))) < 1e-12);
  }

  const Hypoexponential five({13.0, 12.0, 11.0, 10.0, 9.0});
  CHECK_FALSE(five.uses_uniformization());
  boost::math::quadrature::exp_sinh<double> integrator;
  const double mass = integrator.integrate([&](double x) { return five.density(x); });
  CHECK(std::abs(mass - 1.0) < 1e-8);
  CHECK(five.cdf(50.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(five.cdf(0.0) == 0.0);
}

TEST_CASE("near ties") {
  CHECK(hypoexp_min_relative_gap(std::vector<double>{4.0, 2.0, 1.0}) == doctest::Approx(0.5));
  // Relative gap 1e-6: the product formula is still well conditioned enough to
  // serve as the reference for the uniformization path.
  const std::vector<double> close{3.0, 3.0 * (1.0 - 1e-6), 2.0, 1.0};
  for (double x : {0.05, 0.4, 1.0, 3.0}) {
    const double prod = hypoexp_density(close, x, HypoexpMethod::product);
    const double unif = hypoexp_density(close, x, HypoexpMethod::uniformization);
    CHECK(std::abs(unif - prod) <= 1e-6 * prod);
    // 1 - sum p_j e^{-L_j x} cancels weights of size 1e6, so the product cdf
    // carries about 1e-10 of absolute rounding near x = 0.
    const double cp = hypoexp_cdf(close, x, HypoexpMethod::product);
    CHECK(std::abs(hypoexp_cdf(close, x, HypoexpMethod::uniformization) - cp) <= 1e-6 * cp + 1e-9);
  }
  // Exact tie: automatic selection falls back and matches the Erlang law.
  const Hypoexponential tie({2.0, 2.0});
  CHECK(tie.uses_uniformization());
  for (double x : {0.1, 0.8, 2.0}) {
    CHECK(tie.density(x) == doctest::Approx(4.0 * x * std::exp(-2.0 * x)).epsilon(1e-10));
    CHECK(tie.cdf(x) == doctest::Approx(1.0 - std::exp(-2.0 * x) * (1.0 + 2.0 * x)).epsilon(1e-10));
  }
  CHECK(Hypoexponential({2.0, 2.0 * (1.0 - 1e-9)}).uses_uniformization());
  CHECK_FALSE(Hypoexponential({2.0, 2.0 * (1.0 - 1e-6)}).uses_uniformization());
}

TEST_CASE("failure-time model") {
  FailureModel m(FailureSpec(Structure::san_standard(), std::vector<double>(13, 1.0)));
  CHECK(m.spec().a >= 0.0);
  CHECK(m.spec().b == doctest::Approx(1.829));
  // Grand mean of the conditional densities against a histogram of plain samples.
  const std::size_t n = 100000;
  const std::vector<double> xs{0.1, 0.25, 0.4, 0.7, 1.2};
  auto st = rng_stream(102, 0);
  const auto pts = mc_points(n, 13, st);
  std::vector<double> s(xs.size(), 0.0), s2(xs.size(), 0.0), row(xs.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto c = pts.cursor(i);
    std::fill(row.begin(), row.end(), 0.0);
    m.conditional(0, c).add_density_on_grid(xs, row);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      s[j] += row[j];
      s2[j] += row[j] * row[j];
    }
  }
  const std::size_t plain = 2000000;
  auto st2 = rng_stream(103, 0);
  const auto pp = mc_points(plain, 13, st2);
  const double h = 0.01;
  std::vector<double> hits(xs.size(), 0.0);
  for (std::size_t i = 0; i < plain; ++i) {
    auto c = pp.cursor(i);
    const double x = m.sample(c);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (std::abs(x - xs[j]) < 0.5 * h) hits[j] += 1.0;
    }
  }
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double mean = s[j] / n, se = std::sqrt((s2[j] / n - mean * mean) / n);
    const double hist = hits[j] / (plain * h);
    const double hist_se = std::sqrt(hits[j]) / (plain * h);
    CHECK(std::abs(mean - hist) < 4.0 * std::hypot(se, hist_se));
  }
}
