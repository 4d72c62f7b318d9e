#include "cde/experiments.hpp"
#include "cde/models/model.hpp"
#include "cde/quantile.hpp"
#include "cde/results_io.hpp"
#include "cde/rng_points.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace {

using nlohmann::json;

constexpr std::uint64_t kQuantileStream = 0x51;

int cmd_run(const std::string& config_path, bool full, const std::string& out_dir, std::optional<unsigned> threads,
            std::optional<double> bandwidth) {
  auto cfg = cde::read_config(config_path);
  if (full) {
    cfg.ns = cde::ExperimentConfig::default_ns(true);
    cfg.n_r = 100;
  }
  if (threads) cfg.threads = *threads;
  if (bandwidth) cfg.bandwidth = *bandwidth;
  cfg.validate();
  const auto model = cde::make_model(cfg.model, cfg.params);
  const auto result = cde::run_experiment(cfg, *model);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  cde::write_results(result, (dir / "results.csv").string());
  cde::write_density(result, (dir / "density.csv").string());
  cde::write_text_file((dir / "meta.json").string(), cde::result_metadata(result, model->describe()).dump(2) + "\n");
  std::cout << cde::results_csv(cde::result_records(result));
  return 0;
}

int cmd_rate(const std::string& path) {
  const auto records = cde::read_results(path);
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.model, r.variant, r.estimator, r.pointset}];
    g.first.push_back(static_cast<double>(r.n));
    g.second.push_back(r.iv);
  }
  json out = json::array();
  for (const auto& [key, g] : groups) {
    const auto fit = cde::fit_rate(g.first, g.second);
    out.push_back({{"model", std::get<0>(key)},
                   {"variant", std::get<1>(key)},
                   {"estimator", std::get<2>(key)},
                   {"pointset", std::get<3>(key)},
                   {"nu_hat", fit.nu},
                   {"k_hat", fit.k},
                   {"e19", fit.e19},
                   {"e19_kind", fit.e19_measured ? "measured" : "extrapolated"}});
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_density(const std::string& path) {
  const auto pts = cde::read_density(path);
  if (pts.empty()) throw std::runtime_error("density: '" + path + "' has no rows");
  double integral = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    integral += 0.5 * (pts[i].fhat + pts[i - 1].fhat) * (pts[i].x - pts[i - 1].x);
  }
  const auto peak = std::max_element(pts.begin(), pts.end(),
                                     [](const auto& l, const auto& r) { return l.fhat < r.fhat; });
  double max_se = 0.0;
  for (const auto& p : pts) max_se = std::max(max_se, p.stderr_);
  std::cout << json{{"points", pts.size()},
                    {"x_min", pts.front().x},
                    {"x_max", pts.back().x},
                    {"trapezoid_integral", integral},
                    {"mode_x", peak->x},
                    {"mode_fhat", peak->fhat},
                    {"max_stderr", max_se}}
                   .dump(2)
            << "\n";
  return 0;
}

std::vector<cde::ConditionalDensity> draw_conditionals(const cde::Model& model, std::size_t variant,
                                                       const cde::RandomizedPointSet& pts) {
  std::vector<cde::ConditionalDensity> out;
  out.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto cur = pts.cursor(i);
    out.push_back(model.conditional(variant, cur));
  }
  return out;
}

int cmd_quantile(const std::string& config_path, double q, double level, std::optional<std::size_t> n_opt) {
  const auto cfg = cde::read_config(config_path);
  const auto model = cde::make_model(cfg.model, cfg.params);
  if (cfg.interval) model->set_interval(cfg.interval->first, cfg.interval->second);
  const auto& spec = model->spec();
  if (spec.variants.empty()) throw std::invalid_argument("model '" + spec.name + "' has no CDE variants");
  const std::size_t v = cfg.variant.empty() ? 0 : spec.variant_index(cfg.variant);
  const std::size_t n = n_opt ? *n_opt : *std::max_element(cfg.ns.begin(), cfg.ns.end());
  if (cfg.pointset != cde::PointSetKind::mc && !cde::is_power_of_two(n)) {
    throw std::invalid_argument("quantile: n must be a power of 2 for RQMC point sets");
  }
  const std::size_t dim = model->cde_dimension(v);
  json out{{"model", spec.name},
           {"variant", spec.variants[v]},
           {"pointset", std::string(cde::to_string(cfg.pointset))},
           {"q", q},
           {"level", level},
           {"n", n}};
  if (cfg.pointset == cde::PointSetKind::mc) {
    auto stream = cde::rng_stream(cfg.seed, kQuantileStream);
    const auto pts = cde::replication_points(cfg.pointset, n, dim, stream, cfg.lattice);
    const auto ds = draw_conditionals(*model, v, pts);
    const auto e = cde::quantile_ci(cde::CdfAverage(ds), q, level, spec.a, spec.b);
    out["xi_hat"] = e.xi;
    out["ci"] = {e.lo, e.hi};
    out["f_hat"] = e.density;
    out["var_cmc"] = e.var_cmc;
    out["var_plain"] = e.var_plain;
    out["ci_plain"] = {e.plain_lo, e.plain_hi};
    out["variance_method"] = "clt";
  } else {
    std::vector<std::vector<cde::ConditionalDensity>> reps;
    for (std::size_t r = 0; r < cfg.n_r; ++r) {
      auto stream = cde::rng_stream(cfg.seed, (kQuantileStream << 32) ^ r);
      reps.push_back(draw_conditionals(*model, v, cde::replication_points(cfg.pointset, n, dim, stream, cfg.lattice)));
    }
    const auto e = cde::quantile_pooled(reps, q, level, spec.a, spec.b);
    std::vector<cde::ConditionalDensity> pooled;
    for (const auto& r : reps) pooled.insert(pooled.end(), r.begin(), r.end());
    out["xi_hat"] = e.xi;
    out["ci"] = {e.lo, e.hi};
    out["f_hat"] = cde::CdfAverage(pooled).density(e.xi);
    out["n_r"] = cfg.n_r;
    out["variance_method"] = "batching";
  }
  if (spec.kde_sample) {
    auto stream = cde::rng_stream(cfg.seed, kQuantileStream + 1);
    const auto pts = cde::replication_points(cde::PointSetKind::mc, n, model->sample_dimension(), stream, cfg.lattice);
    std::vector<double> xs;
    xs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto cur = pts.cursor(i);
      const double x = model->sample(cur);
      if (std::isfinite(x)) xs.push_back(x);
    }
    const auto s = cde::expected_shortfall(xs, q, level);
    out["c_hat"] = s.c;
    out["c_ci"] = {s.lo, s.hi};
  } else {
    out["c_hat"] = nullptr;
    out["c_ci"] = nullptr;
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_points(const std::string& kind_name, std::size_t n, std::size_t dim, std::uint64_t seed,
               const std::string& gen) {
  const auto kind = cde::parse_point_set_kind(kind_name);
  if (dim == 0) throw std::invalid_argument("points: --dim must be positive");
  if (kind != cde::PointSetKind::mc && !cde::is_power_of_two(n)) {
    throw std::invalid_argument("points: --n must be a power of 2 for " + kind_name);
  }
  auto stream = cde::rng_stream(seed, 0);
  cde::RandomizedPointSet pts = [&] {
    const bool lattice = kind == cde::PointSetKind::lattice || kind == cde::PointSetKind::lattice_shift ||
                         kind == cde::PointSetKind::lattice_shift_baker;
    if (!lattice) {
      if (!gen.empty()) throw std::invalid_argument("points: --gen applies to lattice kinds only");
      return cde::replication_points(kind, n, dim, stream, {});
    }
    cde::RandomizedPointSet base = [&] {
      if (gen.empty()) return cde::korobov_lattice(n, cde::korobov_multiplier(n, dim, {}), dim);
      if (std::all_of(gen.begin(), gen.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return cde::korobov_lattice(n, std::stoull(gen), dim);
      }
      const auto j = json::parse(cde::read_text_file(gen));
      if (j.at("n").get<std::size_t>() != n) throw std::invalid_argument("points: generator file is for a different n");
      auto z = j.at("z").get<std::vector<std::uint64_t>>();
      if (z.size() < dim) throw std::invalid_argument("points: generator file has fewer than --dim entries");
      z.resize(dim);
      return cde::rank1_lattice(n, std::move(z));
    }();
    if (kind == cde::PointSetKind::lattice) return base;
    auto shifted = cde::random_shift(base, stream);
    return kind == cde::PointSetKind::lattice_shift ? shifted : cde::baker_transform(shifted);
  }();
  std::string line;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < dim; ++j) {
      if (j) line += ',';
      line += cde::format_double(pts.coord(i, j));
    }
    line += '\n';
    std::fputs(line.c_str(), stdout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional density estimation experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment and write results.csv, density.csv and meta.json");
  std::string config, out_dir;
  bool full = false;
  std::optional<unsigned> threads;
  std::optional<double> bandwidth;
  run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_flag("--full", full, "Sample sizes 2^14..2^19 with n_r = 100");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--threads", threads, "Worker threads");
  run->add_option("--bandwidth", bandwidth, "KDE bandwidth override");

  auto* rate = app.add_subcommand("rate", "Fit IV ~ K n^-nu per curve in a results file");
  std::string in_path;
  rate->add_option("--in", in_path, "results.csv")->required()->check(CLI::ExistingFile);

  auto* density = app.add_subcommand("density", "Summarize a density dump");
  density->add_option("--in", in_path, "density.csv")->required()->check(CLI::ExistingFile);

  auto* quantile = app.add_subcommand("quantile", "Quantile and expected shortfall with confidence intervals");
  double q = 0.95, level = 0.95;
  std::optional<std::size_t> qn;
  quantile->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  quantile->add_option("--q", q, "Probability level")->check(CLI::Range(0.0, 1.0));
  quantile->add_option("--level", level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  quantile->add_option("--n", qn, "Sample size (default: largest n in the config)");

  auto* points = app.add_subcommand("points", "Write a point set as CSV");
  std::string kind = "mc", gen;
  std::size_t n = 0, dim = 0;
  std::uint64_t seed = 1;
  points->add_option("--kind", kind, "mc, lat, lat-s, lat-s-b, sobol or sobol-lms");
  points->add_option("--n", n, "Number of points")->required();
  points->add_option("--dim", dim, "Dimension")->required();
  points->add_option("--seed", seed, "Seed");
  points->add_option("--gen", gen, "Korobov multiplier a, or a JSON file {\"n\":..., \"z\":[...]}");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config, full, out_dir, threads, bandwidth);
    if (rate->parsed()) return cmd_rate(in_path);
    if (density->parsed()) return cmd_density(in_path);
    if (quantile->parsed()) return cmd_quantile(config, q, level, qn);
    if (points->parsed()) return cmd_points(kind, n, dim, seed, gen);
  } catch (const std::exception& e) {
    std::cerr << "cdetool: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
