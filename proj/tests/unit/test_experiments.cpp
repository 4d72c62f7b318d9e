#include "cde/distributions.hpp"
#include "cde/experiments.hpp"
#include "cde/models/simple.hpp"
#include "cde/results_io.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

using namespace cde;

namespace {

std::string error_of(const auto& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

ExperimentConfig normals_config(std::vector<std::size_t> ns, std::size_t n_r) {
  ExperimentConfig c;
  c.model = "sum-normals";
  c.params = {{"a", {1.0, 1.0}}};
  c.variant = "hide-2";
  c.estimator = EstimatorKind::cde;
  c.pointset = PointSetKind::mc;
  c.ns = std::move(ns);
  c.n_r = n_r;
  c.n_e = 32;
  c.seed = 12;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "cde_test_experiments";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("stratified grid") {
  auto st = rng_stream(1, 0);
  const auto g = build_grid(0.0, 1.0, 4, st);
  REQUIRE(g.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(g.points[j] >= j / 4.0);
    CHECK(g.points[j] < (j + 1) / 4.0);
  }
  CHECK(g.cell_width() == 0.25);
  const auto one = build_grid(0.0, 1.0, 1, st);
  CHECK(one.points[0] >= 0.0);
  CHECK(one.points[0] < 1.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto s = rng_stream(seed, 3);
    const auto big = build_grid(-2.0, 5.0, 128, s);
    for (std::size_t j = 1; j < 128; ++j) CHECK(big.points[j - 1] < big.points[j]);
  }
  CHECK_THROWS(build_grid(1.0, 1.0, 4, st));
}

TEST_CASE("integrated variance and MISE") {
  const std::vector<double> flat{1.0, 1.0};
  CHECK(estimate_iv(flat, 2, 1, 1.0).value == 0.0);
  const std::vector<double> two{1.0, 3.0};
  CHECK(estimate_iv(two, 2, 1, 1.0).value == doctest::Approx(2.0));
  CHECK_THROWS(estimate_iv(std::vector<double>{1.0}, 1, 1, 1.0));

  const std::size_t n_r = 100, n_e = 128;
  auto st = rng_stream(2, 0);
  std::vector<double> rows(n_r * n_e);
  for (auto& v : rows) v = 2.0 * normal_inv(open_unit(st.next()));
  const auto iv = estimate_iv(rows, n_r, n_e, 1.0);
  CHECK(iv.stderr_ > 0.0);
  CHECK(std::abs(iv.value - 4.0) < 3.0 * iv.stderr_);
  CHECK(iv.per_point.size() == n_e);

  const std::vector<double> zero_ref(n_e, 0.0);
  const auto mise = estimate_mise(rows, n_r, n_e, 1.0, zero_ref);
  CHECK(std::abs(mise.value - iv.value) < 3.0 * mise.stderr_);

  const std::vector<double> ref{0.5, 0.7};
  const std::vector<double> exact{0.5, 0.7, 0.5, 0.7};
  CHECK(estimate_mise(exact, 2, 2, 3.0, ref).value == 0.0);
  const std::vector<double> shifted{0.6, 0.8, 0.6, 0.8};
  CHECK(estimate_mise(shifted, 2, 2, 3.0, ref).value == doctest::Approx(3.0 * 0.01));
  CHECK_THROWS(estimate_mise(shifted, 2, 2, 3.0, std::vector<double>{0.5}));
}

TEST_CASE("rate fitting") {
  const std::vector<double> n{16384, 32768, 65536};
  const std::vector<double> v{std::ldexp(1.0, -10), std::ldexp(1.0, -12), std::ldexp(1.0, -14)};
  const auto f = fit_rate(n, v);
  CHECK(f.nu == doctest::Approx(2.0));
  CHECK(f.e19 == doctest::Approx(20.0));
  CHECK_FALSE(f.e19_measured);

  const std::vector<double> c{0.3, 0.3, 0.3};
  CHECK(fit_rate(n, c).nu == doctest::Approx(0.0).scale(1.0));

  const std::vector<double> with19{65536, 524288};
  const auto m = fit_rate(with19, std::vector<double>{0.25, std::ldexp(1.0, -23)});
  CHECK(m.e19_measured);
  CHECK(m.e19 == doctest::Approx(23.0));

  CHECK_THROWS(fit_rate(std::vector<double>{1024}, std::vector<double>{0.1}));
  CHECK_THROWS(fit_rate(std::vector<double>{1024, 1024}, std::vector<double>{0.1, 0.2}));

  auto st = rng_stream(3, 0);
  std::vector<double> ns, vs(6);
  for (int e = 10; e <= 15; ++e) ns.push_back(std::ldexp(1.0, e));
  for (int t = 0; t < 100; ++t) {
    for (std::size_t i = 0; i < ns.size(); ++i) vs[i] = 5.0 * std::pow(ns[i], -1.3) * std::exp(0.05 * normal_inv(open_unit(st.next())));
    CHECK(std::abs(fit_rate(ns, vs).nu - 1.3) < 0.1);
  }
}

TEST_CASE("CDE integrated variance against the closed form") {
  const auto c = normals_config({2048, 4096}, 100);
  SumNormalsModel model(SumNormalsParams{{1.0, 1.0}});
  const auto r = run_experiment(c, model);
  REQUIRE(r.rows.size() == 2);
  const std::size_t v = model.spec().variant_index("hide-2");
  for (const auto& row : r.rows) {
    double exact = 0.0;
    for (double x : r.grid.points) exact += model.exact_variance(v, x);
    exact *= r.grid.cell_width() / static_cast<double>(row.n);
    CHECK(std::abs(row.iv - exact) < 3.0 * row.iv_stderr);
  }
  const double ratio = r.rows[0].iv / r.rows[1].iv;
  const double se = ratio * std::hypot(r.rows[0].iv_stderr / r.rows[0].iv, r.rows[1].iv_stderr / r.rows[1].iv);
  CHECK(std::abs(ratio - 2.0) < 3.0 * se);
  CHECK(r.density.size() == c.n_e);
  CHECK(r.last_rows.size() == c.n_r * c.n_e);
}

TEST_CASE("incompatible point sets") {
  auto st = rng_stream(4, 0);
  CHECK_THROWS(replication_points(PointSetKind::sobol_lms_shift, 1024, kUnboundedDim, st, LatticeSearchConfig{}));
  ExperimentConfig c;
  c.model = "queue";
  c.pointset = PointSetKind::sobol_lms_shift;
  c.ns = {1024};
  c.n_r = 2;
  CHECK_THROWS(run_experiment(c));
  c.pointset = PointSetKind::mc;
  c.estimator = EstimatorKind::kde;
  CHECK_THROWS(run_experiment(c));
}

TEST_CASE("results round trip") {
  const auto r = run_experiment(normals_config({1024, 2048}, 4), SumNormalsModel(SumNormalsParams{{1.0, 1.0}}));
  const auto path = scratch("results.csv");
  write_results(r, path.string());
  const auto back = read_results(path.string());
  CHECK(back == result_records(r));
  CHECK(back[0].e19_kind == "extrapolated");
  CHECK(read_text_file(path.string()).rfind("model,variant,estimator,pointset,n,n_r,n_e,a,b,iv,iv_stderr,nu_hat,k_hat,e19,seed", 0) == 0);

  const auto dpath = scratch("density.csv");
  write_density(r, dpath.string());
  const auto dens = read_density(dpath.string());
  REQUIRE(dens.size() == r.density.size());
  for (std::size_t j = 0; j < dens.size(); ++j) {
    CHECK(dens[j].x == r.density[j].x);
    CHECK(dens[j].fhat == r.density[j].fhat);
    CHECK(dens[j].stderr_ == r.density[j].stderr_);
  }
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK_THROWS(parse_results_csv("model,variant\nx,y\n"));
}

TEST_CASE("config errors") {
  CHECK(error_of([] { ExperimentConfig::from_json({{"estimator", "cde"}, {"pointset", "mc"}}); }).find("'model'") !=
        std::string::npos);
  const auto bad = error_of([] { ExperimentConfig::from_json({{"model", "queue"}, {"estimator", "hist"}, {"pointset", "mc"}}); });
  CHECK(bad.find("hist") != std::string::npos);
  CHECK(bad.find("glrde") != std::string::npos);
  CHECK(bad.find("cde-combo") != std::string::npos);
  CHECK_THROWS(ExperimentConfig::from_json({{"model", "queue"}, {"estimator", "cde"}, {"pointset", "mc"}, {"n_r", 1}}));
  CHECK_THROWS(ExperimentConfig::from_json({{"model", "queue"}, {"estimator", "cde"}, {"pointset", "mc"}, {"n", {1000}}}));
  CHECK_THROWS(ExperimentConfig::from_json({{"model", "queue"}, {"estimator", "cde"}, {"pointset", "lat"}}));

  const auto path = scratch("broken.json");
  write_text_file(path.string(), "{\n  \"model\": \"queue\",\n  \"estimator\": cde\n}\n");
  const auto msg = error_of([&] { read_config(path.string()); });
  CHECK(msg.find("line 3") != std::string::npos);

  const auto c = normals_config({1024}, 3);
  const auto round = ExperimentConfig::from_json(c.to_json());
  CHECK(round.to_json() == c.to_json());
}

TEST_CASE("determinism across thread counts") {
  auto c = normals_config({1024, 2048}, 6);
  c.pointset = PointSetKind::lattice_shift;
  const auto a = results_csv(result_records(run_experiment(c)));
  c.threads = 3;
  const auto b = results_csv(result_records(run_experiment(c)));
  CHECK(a == b);
  c.seed = 13;
  CHECK(results_csv(result_records(run_experiment(c))) != a);
}
