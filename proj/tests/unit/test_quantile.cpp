#include "cde/distributions.hpp"
#include "cde/models/simple.hpp"
#include "cde/quantile.hpp"
#include "cde/rng_points.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

using namespace cde;

namespace {

std::vector<ConditionalDensity> degenerate_normal(std::size_t n) {
  return std::vector<ConditionalDensity>(n, ConditionalDensity(normal_pdf, normal_cdf));
}

std::vector<ConditionalDensity> sum_normals_sample(const SumNormalsModel& m, std::size_t n, std::uint64_t seed) {
  auto st = rng_stream(seed, 0);
  const auto pts = mc_points(n, m.cde_dimension(0), st);
  std::vector<ConditionalDensity> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = pts.cursor(i);
    out.push_back(m.conditional(1, c));
  }
  return out;
}

}  // namespace

TEST_CASE("quantile of an exact cdf") {
  const auto ds = degenerate_normal(3);
  const CdfAverage avg(ds);
  CHECK(std::abs(quantile_from_cdf(avg, 0.5, -1.0, 1.0)) < 1e-9);
  CHECK(quantile_from_cdf(avg, 0.975, -1.0, 1.0) == doctest::Approx(1.959964).epsilon(1e-6));
  const double x = quantile_from_cdf(avg, 0.3, -4.0, 4.0);
  CHECK(std::abs(normal_cdf(x) - 0.3) < 1e-9);
  double prev = -1e300;
  for (double q = 0.01; q < 1.0; q += 0.01) {
    const double xi = quantile_from_cdf(avg, q, -4.0, 4.0);
    CHECK(xi >= prev);
    prev = xi;
  }
  CHECK_THROWS(quantile_from_cdf(avg, 0.0, -1.0, 1.0));
  CHECK_THROWS(quantile_from_cdf(avg, 1.0, -1.0, 1.0));
  CHECK_THROWS(quantile_from_cdf([](double) { return 0.2; }, 0.5, 0.0, 1.0));
}

TEST_CASE("plain and conditional variance constants") {
  const auto ds = degenerate_normal(100);
  const auto e = quantile_ci(CdfAverage(ds), 0.5, 0.95, -2.0, 2.0);
  // q(1-q)/phi(0)^2 = 0.25 * 2 pi = pi / 2.
  CHECK(e.var_plain == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-8));
  CHECK(e.density == doctest::Approx(normal_pdf(0.0)).epsilon(1e-8));
  CHECK(e.var_cmc == 0.0);
  CHECK(e.lo == e.xi);
  CHECK(e.hi == e.xi);
  CHECK(e.plain_hi - e.plain_lo == doctest::Approx(2.0 * 1.959964 * std::sqrt(std::numbers::pi / 2.0 / 100.0)).epsilon(1e-5));

  const SumNormalsModel m(SumNormalsParams{{1.0, 1.0}});
  const auto s = sum_normals_sample(m, 10000, 40);
  for (double q : {0.5, 0.95}) {
    const auto r = quantile_ci(CdfAverage(s), q, 0.95, -2.0, 2.0);
    CHECK(r.var_cmc < r.var_plain);
    CHECK(r.density > 0.0);
  }
  const std::vector<ConditionalDensity> flat(4, ConditionalDensity([](double) { return 0.0; },
                                                                    [](double x) { return x < 0.0 ? 0.0 : 1.0; }));
  CHECK_THROWS(quantile_ci(CdfAverage(flat), 0.5, 0.95, -1.0, 1.0));
}

TEST_CASE("coverage on the sum of normals") {
  const SumNormalsModel m(SumNormalsParams{{1.0, 1.0}});
  for (double q : {0.5, 0.95}) {
    const double truth = normal_inv(q);
    int covered = 0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
      const auto s = sum_normals_sample(m, 4096, 1000 + t);
      const auto r = quantile_ci(CdfAverage(s), q, 0.95, -2.0, 2.0);
      covered += (r.lo <= truth && truth <= r.hi) ? 1 : 0;
      CHECK(r.var_cmc <= r.var_plain);
    }
    CHECK(covered >= 34);
  }
}

TEST_CASE("pooled quantile over replicates") {
  std::vector<std::vector<ConditionalDensity>> same(5, degenerate_normal(8));
  const auto p = quantile_pooled(same, 0.975, 0.95, -1.0, 1.0);
  CHECK(p.xi == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(p.stderr_ == doctest::Approx(0.0).scale(1.0));
  CHECK(p.per_replicate.size() == 5);

  const SumNormalsModel m(SumNormalsParams{{1.0, 1.0}});
  std::vector<std::vector<ConditionalDensity>> reps;
  for (std::uint64_t r = 0; r < 10; ++r) reps.push_back(sum_normals_sample(m, 1024, 60 + r));
  const auto q = quantile_pooled(reps, 0.95, 0.95, -2.0, 2.0);
  CHECK(q.stderr_ > 0.0);
  CHECK(q.lo < q.xi);
  CHECK(q.xi < q.hi);
  CHECK(std::abs(q.xi - normal_inv(0.95)) < 4.0 * q.stderr_);
  CHECK_THROWS(quantile_pooled({degenerate_normal(4)}, 0.5, 0.95, -1.0, 1.0));
}

TEST_CASE("expected shortfall") {
  const std::vector<double> v(7, 2.5);
  CHECK(expected_shortfall(v, 0.3).c == 2.5);

  // X_(ceil(nq)) with n = 2, q = 0.5 picks the smaller sample, so c = 0.
  const std::vector<double> two{10.0, 0.0};
  const auto s2 = expected_shortfall(two, 0.5);
  CHECK(s2.xi == 0.0);
  CHECK(s2.c == 0.0);

  // The displayed estimator is the lower-tail mean E[X | X <= xi_q].
  const std::size_t n = 1000000;
  auto st = rng_stream(50, 0);
  std::vector<double> xs(n);
  for (auto& x : xs) x = normal_inv(open_unit(st.next()));
  const auto s = expected_shortfall(xs, 0.5);
  CHECK(std::abs(s.c + std::sqrt(2.0 / std::numbers::pi)) < 4.0 * s.stderr_);
  CHECK(s.lo < s.c);
  CHECK(s.c < s.hi);

  CHECK_THROWS(expected_shortfall(std::vector<double>{}, 0.5));
  CHECK_THROWS(expected_shortfall(std::vector<double>{1.0}, 0.5));
}
