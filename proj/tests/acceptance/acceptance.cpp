// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "cde/distributions.hpp"
#include "cde/experiments.hpp"
#include "cde/models/asian.hpp"
#include "cde/models/hypoexp.hpp"
#include "cde/models/model.hpp"
#include "cde/models/queue.hpp"
#include "cde/models/simple.hpp"
#include "cde/quantile.hpp"
#include "cde/results_io.hpp"
#include "cde/rng_points.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

using namespace cde;

namespace {

namespace tol {
// 1: exact per-sample variance
constexpr double c1_sigmas = 3.0;
constexpr double c1_seconds = 10.0;
// 2: one-sample IV relative error
constexpr double c2_rel = 0.03;
// 3: MC rates
constexpr double c3_cde_lo = 0.95, c3_cde_hi = 1.05;
constexpr double c3_kde_lo = 0.65, c3_kde_hi = 0.90;
constexpr double c3_seconds = 300.0;
// 4: lattice gain
constexpr double c4_nu = 1.6;
constexpr double c4_ratio = 100.0;
// 5: Asian bridge
constexpr double c5_residual = 1e-9;
constexpr double c5_nu = 1.3;
constexpr double c5_ratio = 50.0;
// 6: queue
constexpr double c6_sigmas = 3.0;
constexpr double c6_mass_lo = 0.99, c6_mass_hi = 1.01;
constexpr double c6_ratio = 100.0;
// 7: unbiasedness
constexpr double c7_sigmas = 4.0;
constexpr double c7_seconds = 300.0;
// 8: hypoexponential
constexpr double c8_conv = 1e-12;
constexpr double c8_mass = 1e-8;
constexpr double c8_tie_rel = 1e-6;
// 9: quantile coverage
constexpr int c9_trials = 100;
constexpr int c9_min_covered = 90;
}  // namespace tol

int failures = 0;

void report(int id, bool ok, const std::string& what) {
  std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void detail(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::size_t> powers(int lo, int hi) {
  std::vector<std::size_t> ns;
  for (int e = lo; e <= hi; ++e) ns.push_back(std::size_t{1} << e);
  return ns;
}

ExperimentConfig make_config(const std::string& model, const std::string& variant, EstimatorKind est,
                             PointSetKind ps, std::vector<std::size_t> ns, std::size_t n_r) {
  ExperimentConfig c;
  c.model = model;
  c.variant = variant;
  c.estimator = est;
  c.pointset = ps;
  c.ns = std::move(ns);
  c.n_r = n_r;
  c.seed = 1;
  return c;
}

struct Grand {
  std::vector<double> mean, se;
};

Grand grand_mean(std::size_t n, std::size_t dim, std::uint64_t seed, std::uint64_t id, const std::vector<double>& xs,
                 const std::function<void(PointCursor&, std::vector<double>&)>& draw) {
  auto st = rng_stream(seed, id);
  const auto pts = mc_points(n, dim, st);
  std::vector<double> s(xs.size(), 0.0), s2(xs.size(), 0.0), row(xs.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto c = pts.cursor(i);
    std::fill(row.begin(), row.end(), 0.0);
    draw(c, row);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      s[j] += row[j];
      s2[j] += row[j] * row[j];
    }
  }
  Grand g;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double m = s[j] / static_cast<double>(n);
    g.mean.push_back(m);
    g.se.push_back(std::sqrt(std::max(0.0, s2[j] / static_cast<double>(n) - m * m) / static_cast<double>(n)));
  }
  return g;
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const SumNormalsModel m(SumNormalsParams{{1.0, 1.0}});
  const std::size_t v = m.spec().variant_index("hide-2");
  const std::vector<double> xs{-1.0, 0.0, 1.0};
  const std::size_t n = std::size_t{1} << 14, n_r = 100;
  // Var f(x | Z_1) = exp(-2x^2/3) / (pi sqrt 3) - phi(x)^2 for X = (Z_1 + Z_2)/sqrt 2.
  auto oracle = [](double x) {
    return std::exp(-2.0 * x * x / 3.0) / (std::numbers::pi * std::sqrt(3.0)) - normal_pdf(x) * normal_pdf(x);
  };
  // The quoted 0.024620 truncates 0.0246214.
  bool ok = std::abs(oracle(0.0) - 0.024620) < 2e-6;
  // Raw moments of single draws pooled over the n_r replications of size n.
  std::vector<std::array<double, 4>> mom(xs.size(), {0.0, 0.0, 0.0, 0.0});
  std::vector<double> row(xs.size());
  for (std::size_t r = 0; r < n_r; ++r) {
    auto st = rng_stream(101, r);
    const auto pts = mc_points(n, m.cde_dimension(v), st);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = pts.cursor(i);
      std::fill(row.begin(), row.end(), 0.0);
      m.conditional(v, c).add_density_on_grid(xs, row);
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const double f = row[j];
        mom[j][0] += f;
        mom[j][1] += f * f;
        mom[j][2] += f * f * f;
        mom[j][3] += f * f * f * f;
      }
    }
  }
  const double total = static_cast<double>(n * n_r);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double m1 = mom[j][0] / total, m2 = mom[j][1] / total, m3 = mom[j][2] / total, m4 = mom[j][3] / total;
    const double var = m2 - m1 * m1;
    const double c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 * m1 * m1 * m1;
    const double se = std::sqrt(std::max(0.0, c4 - var * var) / total);
    const double exact = oracle(xs[j]);
    const bool hit = std::abs(var - exact) < tol::c1_sigmas * se && std::abs(m.exact_variance(v, xs[j]) - exact) < 1e-12;
    detail("x=%+.0f per-sample var %.6f (se %.6f) closed form %.6f", xs[j], var, se, exact);
    ok = ok && hit;
  }
  const double secs = seconds_since(t0);
  detail("runtime %.1f s", secs);
  report(1, ok && secs < tol::c1_seconds, "sum-of-normals per-sample CDE variance matches the closed form");
}

void criterion2() {
  auto one_sample_iv = [](double eps, const std::string& variant, std::size_t n_r) {
    SumUniformsModel m(SumUniformsParams{eps});
    auto c = make_config("sum-uniforms", variant, EstimatorKind::cde, PointSetKind::mc, {1}, n_r);
    c.n_e = 64;
    return run_experiment(c, m).rows.front();
  };
  bool ok = true;
  const double eps = 0.75;
  const double exact1 = eps / 3.0, exact2 = 1.0 / eps - 1.0 + eps / 3.0;
  const auto r1 = one_sample_iv(eps, "hide-1", 65536);
  const auto r2 = one_sample_iv(eps, "hide-2", 65536);
  const double e1 = std::abs(r1.iv / exact1 - 1.0), e2 = std::abs(r2.iv / exact2 - 1.0);
  detail("eps=0.75 hide Y1: IV %.5f (exact %.5f, rel err %.4f)", r1.iv, exact1, e1);
  detail("eps=0.75 hide Y2: IV %.5f (exact %.5f, rel err %.4f)", r2.iv, exact2, e2);
  ok = ok && e1 < tol::c2_rel && e2 < tol::c2_rel && r1.iv < r2.iv;
  const auto s1 = one_sample_iv(1.0 / 16.0, "hide-1", 4096);
  const auto s2 = one_sample_iv(1.0 / 16.0, "hide-2", 4096);
  detail("eps=1/16: IV(hide Y1) %.5f < IV(hide Y2) %.4f", s1.iv, s2.iv);
  ok = ok && s1.iv < s2.iv;
  report(2, ok, "sum-of-uniforms one-sample IVs and their ordering");
}

// Least-squares standard error of the fitted log-log slope.
double slope_stderr(const ExperimentResult& r) {
  const double k = static_cast<double>(r.rows.size());
  if (k < 3) return std::nan("");
  double mx = 0.0, my = 0.0;
  for (const auto& row : r.rows) {
    mx += std::log2(static_cast<double>(row.n)) / k;
    my += std::log2(row.iv) / k;
  }
  double sxx = 0.0, sxy = 0.0;
  for (const auto& row : r.rows) {
    const double dx = std::log2(static_cast<double>(row.n)) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log2(row.iv) - my);
  }
  const double slope = sxy / sxx;
  double sse = 0.0;
  for (const auto& row : r.rows) {
    const double e = std::log2(row.iv) - my - slope * (std::log2(static_cast<double>(row.n)) - mx);
    sse += e * e;
  }
  return std::sqrt(sse / (k - 2.0) / sxx);
}

// Shared with criterion 4: the MC curve for g-3.
ExperimentResult cantilever_mc_g3;

void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = make_model("cantilever");
  bool ok = true;
  auto curve = [&](const std::string& variant, EstimatorKind est, double lo, double hi) {
    const auto c = make_config("cantilever", variant, est, PointSetKind::mc, powers(10, 15), 50);
    auto r = run_experiment(c, *model);
    const bool in = r.fit.nu >= lo && r.fit.nu <= hi;
    detail("%-5s %-6s nu_hat %.3f (se %.3f) in [%.2f, %.2f]: %s", variant.empty() ? "-" : variant.c_str(),
           std::string(to_string(est)).c_str(), r.fit.nu, slope_stderr(r), lo, hi, in ? "yes" : "no");
    ok = ok && in;
    return r;
  };
  for (const auto& v : model->spec().variants) {
    auto r = curve(v, EstimatorKind::cde, tol::c3_cde_lo, tol::c3_cde_hi);
    if (v == "g-3") cantilever_mc_g3 = std::move(r);
  }
  for (const auto& v : model->spec().glr_variants) curve(v, EstimatorKind::glrde, tol::c3_cde_lo, tol::c3_cde_hi);
  curve("", EstimatorKind::kde, tol::c3_kde_lo, tol::c3_kde_hi);
  const double secs = seconds_since(t0);
  detail("runtime %.1f s", secs);
  report(3, ok && secs < tol::c3_seconds, "cantilever MC convergence rates (n = 2^10..2^15, n_r = 50)");
}

void criterion4() {
  const auto lat = run_experiment(make_config("cantilever", "g-3", EstimatorKind::cde, PointSetKind::lattice_shift,
                                              powers(10, 15), 50));
  auto at = [](const ExperimentResult& r, std::size_t n) {
    for (const auto& row : r.rows) {
      if (row.n == n) return row.iv;
    }
    return std::nan("");
  };
  const std::size_t n = std::size_t{1} << 14;
  if (cantilever_mc_g3.rows.empty()) {
    cantilever_mc_g3 = run_experiment(make_config("cantilever", "g-3", EstimatorKind::cde, PointSetKind::mc, {n}, 50));
  }
  const double ratio = at(cantilever_mc_g3, n) / at(lat, n);
  detail("lat-s nu_hat %.3f, IV(mc)/IV(lat-s) at 2^14 = %.1f", lat.fit.nu, ratio);
  report(4, lat.fit.nu >= tol::c4_nu && ratio >= tol::c4_ratio, "cantilever g-3 lattice rate and variance gain");
}

void criterion5() {
  const AsianParams p;
  auto st = rng_stream(501, 0);
  const auto pts = mc_points(100, 11, st);
  double worst = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    auto c = pts.cursor(i);
    std::vector<double> z(11);
    for (auto& v : z) v = normal_inv(c.next());
    const auto g = AsianGamma::from_normals(p, z);
    double z0 = 0.0;
    for (int k = 0; k < 128; ++k) {
      const double x = p.strike + (p.upper - p.strike) * (k + 0.5) / 128.0;
      const auto r = gamma_inverse_newton([&](double y) { return g.eval(y); }, x, z0);
      worst = std::max(worst, std::abs(r.residual));
      z0 = r.z;
    }
  }
  const auto sob = run_experiment(make_config("asian", "bridge", EstimatorKind::cde, PointSetKind::sobol_lms_shift,
                                              powers(8, 13), 50));
  const std::size_t n = std::size_t{1} << 13;
  const auto bridge = run_experiment(make_config("asian", "bridge", EstimatorKind::cde, PointSetKind::mc, {n}, 50));
  const auto seq = run_experiment(make_config("asian", "seq", EstimatorKind::cde, PointSetKind::mc, {n}, 50));
  const double ratio = seq.rows[0].iv / bridge.rows[0].iv;
  detail("worst Newton residual %.3g", worst);
  detail("bridge sobol-lms nu_hat %.3f", sob.fit.nu);
  detail("MC at 2^13: IV(seq) %.4g, IV(bridge) %.4g, ratio %.1f", seq.rows[0].iv, bridge.rows[0].iv, ratio);
  report(5, worst < tol::c5_residual && sob.fit.nu >= tol::c5_nu && ratio >= tol::c5_ratio,
         "Asian bridge inversion, RQMC rate and variance reduction");
}

void criterion6() {
  QueueModel m{QueueParams{}};
  const std::size_t days = 10000, dense_days = 2000;
  auto st = rng_stream(601, 0);
  const auto pts = mc_points(days, kUnboundedDim, st);
  double s = 0.0, s2 = 0.0, mass0 = 0.0;
  const double top = 15.0;
  const int cells = 600;
  std::vector<double> xs(cells + 1), dens(cells + 1, 0.0);
  for (int k = 0; k <= cells; ++k) xs[k] = top * k / cells;
  for (std::size_t i = 0; i < days; ++i) {
    auto c = pts.cursor(i);
    const auto d = m.conditional(0, c);
    s += d.weight();
    s2 += d.weight() * d.weight();
    if (i < dense_days) {
      mass0 += d.cdf(0.0);
      d.add_density_on_grid(xs, dens);
    }
  }
  const double mean_n = s / days, se_n = std::sqrt((s2 / days - mean_n * mean_n) / days);
  double integral = 0.0;
  for (int k = 0; k < cells; ++k) integral += 0.5 * (dens[k] + dens[k + 1]) * top / cells;
  const double p0 = mass0 / (60.0 * dense_days), total = p0 + integral / (60.0 * dense_days);
  const bool ok_n = std::abs(mean_n - 60.0) < tol::c6_sigmas * se_n;
  const bool ok_mass = total >= tol::c6_mass_lo && total <= tol::c6_mass_hi;
  detail("E[N] estimate %.3f (se %.3f)", mean_n, se_n);
  detail("p0 %.4f + integral = %.5f", p0, total);

  const std::size_t n = std::size_t{1} << 14;
  const auto cde = run_experiment(make_config("queue", "cde", EstimatorKind::cde, PointSetKind::mc, {n}, 20), m);
  const auto glr = run_experiment(make_config("queue", "glr", EstimatorKind::glrde, PointSetKind::mc, {n}, 20), m);
  const double ratio = glr.rows[0].iv / cde.rows[0].iv;
  const bool ok_ratio = ratio >= tol::c6_ratio;
  detail("IV(cde) %.4g, IV(glr) %.4g, ratio %.1f (need >= %.0f)", cde.rows[0].iv, glr.rows[0].iv, ratio, tol::c6_ratio);
  report(6, ok_n && ok_mass && ok_ratio, "queue arrivals, normalization and CDE vs GLR variance");
}

void criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = 100000;
  bool ok = true;
  std::uint64_t id = 0;
  for (const auto& name : model_names()) {
    const auto m = make_model(name);
    const auto& spec = m->spec();
    const std::size_t estimators = spec.variants.size() + spec.glr_variants.size();
    if (estimators < 2 && !spec.exact_density) {
      detail("%-12s skipped (single conditioning, no closed-form density)", name.c_str());
      continue;
    }
    std::vector<double> xs;
    for (int k = 0; k < 5; ++k) xs.push_back(spec.a + (spec.b - spec.a) * (k + 0.5) / 5.0);
    std::vector<std::pair<std::string, Grand>> means;
    for (std::size_t v = 0; v < spec.variants.size(); ++v) {
      means.emplace_back(spec.variants[v], grand_mean(n, m->cde_dimension(v), 701, id++, xs, [&](PointCursor& c, std::vector<double>& row) {
                           m->conditional(v, c).add_density_on_grid(xs, row);
                         }));
    }
    for (std::size_t v = 0; v < spec.glr_variants.size(); ++v) {
      means.emplace_back(spec.glr_variants[v], grand_mean(n, m->glr_dimension(v), 701, id++, xs, [&](PointCursor& c, std::vector<double>& row) {
                           const auto g = m->glr(v, c);
                           for (std::size_t j = 0; j < xs.size(); ++j) row[j] = g.value(xs[j]);
                         }));
    }
    double worst = 0.0;
    for (std::size_t e = 0; e < means.size(); ++e) {
      for (std::size_t j = 0; j < xs.size(); ++j) {
        double z;
        if (spec.exact_density) {
          z = std::abs(means[e].second.mean[j] - m->exact_density(xs[j])) / means[e].second.se[j];
        } else {
          if (e == 0) continue;
          const auto& ref = means[0].second;
          z = std::abs(means[e].second.mean[j] - ref.mean[j]) / std::hypot(means[e].second.se[j], ref.se[j]);
        }
        if (std::isnan(z)) z = 0.0;  // zero spread and zero deviation
        worst = std::max(worst, z);
      }
    }
    detail("%-12s %zu estimators, largest deviation %.2f se", name.c_str(), means.size(), worst);
    ok = ok && worst < tol::c7_sigmas;
  }
  const double secs = seconds_since(t0);
  detail("runtime %.1f s", secs);
  report(7, ok && secs < tol::c7_seconds, "grand means agree across conditionings and with closed forms");
}

void criterion8() {
  double conv = 0.0;
  const std::vector<double> two{2.0, 1.0};
  for (double x = 0.0; x <= 10.0; x += 0.05) {
    conv = std::max(conv, std::abs(hypoexp_density(two, x) - 2.0 * (std::exp(-x) - std::exp(-2.0 * x))));
  }
  const Hypoexponential five({13.0, 12.0, 11.0, 10.0, 9.0});
  boost::math::quadrature::exp_sinh<double> integrator;
  const double mass = integrator.integrate([&](double x) { return five.density(x); });
  const std::vector<double> close{3.0, 3.0 * (1.0 - 1e-6), 2.0, 1.0};
  double tie = 0.0;
  for (double x = 0.05; x <= 5.0; x += 0.05) {
    const double prod = hypoexp_density(close, x, HypoexpMethod::product);
    tie = std::max(tie, std::abs(hypoexp_density(close, x, HypoexpMethod::uniformization) - prod) / prod);
  }
  detail("c=2 max error %.3g, c=5 mass error %.3g, near-tie relative gap %.3g", conv, std::abs(mass - 1.0), tie);
  report(8, conv < tol::c8_conv && std::abs(mass - 1.0) < tol::c8_mass && tie < tol::c8_tie_rel,
         "hypoexponential closed form, normalization and near-tie fallback");
}

void criterion9() {
  const SumNormalsModel m(SumNormalsParams{{1.0, 1.0}});
  const std::size_t v = m.spec().variant_index("hide-2");
  const std::size_t n = std::size_t{1} << 12;
  bool ok = true;
  for (double q : {0.5, 0.95}) {
    const double truth = normal_inv(q);
    int covered = 0, dominated = 0;
    for (int t = 0; t < tol::c9_trials; ++t) {
      auto st = rng_stream(901, static_cast<std::uint64_t>(t));
      const auto pts = mc_points(n, m.cde_dimension(v), st);
      std::vector<ConditionalDensity> ds;
      ds.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto c = pts.cursor(i);
        ds.push_back(m.conditional(v, c));
      }
      const auto e = quantile_ci(CdfAverage(ds), q, 0.95, m.spec().a, m.spec().b);
      covered += (e.lo <= truth && truth <= e.hi) ? 1 : 0;
      dominated += e.var_cmc <= e.var_plain ? 1 : 0;
    }
    detail("q=%.2f: covered %d/%d, var_cmc <= var_plain in %d", q, covered, tol::c9_trials, dominated);
    ok = ok && covered >= tol::c9_min_covered && dominated == tol::c9_trials;
  }
  report(9, ok, "quantile confidence interval coverage");
}

void criterion10() {
  bool ok = true;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(CDE_CONFIG_DIR)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  const auto dir = std::filesystem::temp_directory_path() / "cde_acceptance";
  std::filesystem::create_directories(dir);
  for (const auto& f : files) {
    auto c = read_config(f.string());
    c.ns = {1024, 2048};
    c.n_r = 3;
    std::string bytes[2];
    for (int k = 0; k < 2; ++k) {
      c.threads = k + 1;
      const auto path = (dir / ("results-" + std::to_string(k) + ".csv")).string();
      write_results(run_experiment(c), path);
      bytes[k] = read_text_file(path);
    }
    const bool same = bytes[0] == bytes[1] && !bytes[0].empty();
    detail("%-22s %s", f.filename().string().c_str(), same ? "identical" : "DIFFERENT");
    ok = ok && same;
  }
  report(10, ok && files.size() >= 9, "re-runs with the same seed give byte-identical results.csv");
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                    criterion6, criterion7, criterion8, criterion9, criterion10};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, std::string("error: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
