#include "cde/distributions.hpp"
#include "cde/models/buckling.hpp"
#include "cde/rng_points.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace cde;

namespace {

BucklingInputs means(const BucklingParams& p) {
  BucklingInputs y{};
  for (int j = 0; j < 6; ++j) y[j] = p.y[j].mean();
  return y;
}

struct Grand {
  std::vector<double> mean, se;
};

template <class Draw>
Grand grand(std::size_t n, std::size_t dim, std::uint64_t seed, const std::vector<double>& xs, Draw draw) {
  auto st = rng_stream(seed, 0);
  const auto pts = mc_points(n, dim, st);
  std::vector<double> s(xs.size(), 0.0), s2(xs.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = pts.cursor(i);
    const auto row = draw(c);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      s[j] += row[j];
      s2[j] += row[j] * row[j];
    }
  }
  Grand g;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double m = s[j] / n;
    g.mean.push_back(m);
    g.se.push_back(std::sqrt((s2[j] / n - m * m) / n));
  }
  return g;
}

}  // namespace

TEST_CASE("lognormal inputs from mean and cv") {
  const auto y2 = lognormal_from_mean_cv(0.525, 0.044);
  CHECK(y2.sigma * y2.sigma == doctest::Approx(0.0019341).epsilon(1e-4));
  CHECK(y2.mu == doctest::Approx(-0.645324).epsilon(1e-5));
  const BucklingParams p;
  CHECK(p.y[1].mean() == doctest::Approx(0.525).epsilon(1e-12));
  CHECK(p.y[2].mean() == doctest::Approx(44.2).epsilon(1e-12));
}

TEST_CASE("strength formula") {
  const BucklingParams p;
  const auto y = means(p);
  const double lam = y[0] / y[1] * std::sqrt(y[2] / y[3]);
  const auto t = buckling_terms(y);
  CHECK(t.lambda == doctest::Approx(lam));
  CHECK(t.v1 == doctest::Approx(2.1 / lam - 0.9 / (lam * lam)));
  CHECK(t.v2 == doctest::Approx(1.0 - 2.0 * y[5] * y[1] / y[0]));
  CHECK(t.v3 == doctest::Approx(1.0 - 3.0 * y[4] / (4.0 * lam)));
  CHECK(buckling_h(y) == doctest::Approx(t.v1 * t.v2 * t.v3));
  CHECK(buckling_h(y) > 0.5169);
  CHECK(buckling_h(y) < 0.6511);
}

TEST_CASE("conditional densities") {
  const BucklingParams p;
  auto y = means(p);
  y[0] *= 1.02;
  y[3] *= 0.95;
  const auto t = buckling_terms(y);
  for (double x : {0.55, 0.58, 0.61, 0.64}) {
    // Hiding Y5: V3 = x / (V1 V2) pins Y5 = (1 - x/(V1 V2)) 4 Lambda / 3.
    const double c12 = t.v1 * t.v2;
    const double y5 = (1.0 - x / c12) * 4.0 * t.lambda / 3.0;
    CHECK(buckling_cde(p, 5, y, x) == doctest::Approx(p.y[4].pdf(y5) * 4.0 * t.lambda / (3.0 * c12)).epsilon(1e-10));
    // Hiding Y6: V2 = x / (V1 V3) pins Y6 = (1 - x/(V1 V3)) Y1 / (2 Y2).
    const double c13 = t.v1 * t.v3;
    const double y6 = (1.0 - x / c13) * y[0] / (2.0 * y[1]);
    CHECK(buckling_cde(p, 6, y, x) == doctest::Approx(p.y[5].pdf(y6) * y[0] / (2.0 * y[1] * c13)).epsilon(1e-10));
    for (int k : {5, 6}) {
      const double h = 1e-6;
      const double fd = (buckling_cdf(p, k, y, x + h) - buckling_cdf(p, k, y, x - h)) / (2.0 * h);
      CHECK(fd == doctest::Approx(buckling_cde(p, k, y, x)).epsilon(1e-5));
    }
  }
}

TEST_CASE("hiding Y6 integrates to one per realization") {
  BucklingModel m{BucklingParams{}};
  auto st = rng_stream(90, 0);
  const auto pts = mc_points(20, 5, st);
  for (std::size_t i = 0; i < 20; ++i) {
    auto c = pts.cursor(i);
    const auto d = m.conditional(1, c);
    const double lo = 0.0, hi = 1.2;
    const int cells = 120000;
    double mass = 0.0;
    for (int k = 0; k <= cells; ++k) mass += ((k == 0 || k == cells) ? 0.5 : 1.0) * d.density(lo + (hi - lo) * k / cells);
    mass *= (hi - lo) / cells;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("both conditionings and the GLR agree on average") {
  BucklingModel m{BucklingParams{}};
  CHECK(m.spec().glr_variants.size() == 1);
  const std::vector<double> xs{0.53, 0.56, 0.585, 0.61, 0.64};
  const std::size_t n = 100000;
  std::vector<double> row(xs.size());
  auto cde = [&](std::size_t v) {
    return [&, v](PointCursor& c) {
      std::fill(row.begin(), row.end(), 0.0);
      m.conditional(v, c).add_density_on_grid(xs, row);
      return row;
    };
  };
  const auto g5 = grand(n, 5, 91, xs, cde(0));
  const auto g6 = grand(n, 5, 92, xs, cde(1));
  const auto gl = grand(n, 6, 93, xs, [&](PointCursor& c) {
    const auto g = m.glr(0, c);
    for (std::size_t j = 0; j < xs.size(); ++j) row[j] = g.value(xs[j]);
    return row;
  });
  for (std::size_t j = 0; j < xs.size(); ++j) {
    CHECK(g5.mean[j] > 0.0);
    CHECK(std::abs(g5.mean[j] - g6.mean[j]) < 4.0 * std::hypot(g5.se[j], g6.se[j]));
    CHECK(std::abs(gl.mean[j] - g6.mean[j]) < 4.0 * std::hypot(gl.se[j], g6.se[j]));
  }
  CHECK(m.rejected() == 0);
}

TEST_CASE("GLR weight") {
  const BucklingParams p;
  auto y = means(p);
  y[5] = 5.25 + 0.2;
  const auto t = buckling_terms(y);
  const double sd6 = 5.25 * 0.07;
  CHECK(buckling_psi6(p, y) == doctest::Approx(y[0] * 0.2 / (2.0 * t.v1 * t.v3 * y[1] * sd6 * sd6)));
  y[5] = 5.25;
  CHECK(buckling_psi6(p, y) == doctest::Approx(0.0).scale(1.0));
}
