#include "cde/experiments.hpp"

#include "cde/estimator_core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace cde {

namespace {

constexpr std::uint64_t kGridStream = 0x67726964;  // "grid"
constexpr std::uint64_t kRepTag = 1;
constexpr std::uint64_t kReferenceTag = 2;

std::uint64_t rep_stream_id(std::uint64_t tag, std::size_t n, std::size_t rep) {
  return (tag << 60) ^ (static_cast<std::uint64_t>(n) << 20) ^ static_cast<std::uint64_t>(rep);
}

// Resolved estimator setup for a model.
struct Plan {
  EstimatorKind estimator;
  std::vector<std::size_t> members;  // variant indices (CDE/GLR) or combo members
  std::size_t dim;
  std::optional<double> expected_weight;
  std::optional<double> bandwidth = std::nullopt;
};

Plan make_plan(const ExperimentConfig& cfg, const Model& model) {
  const auto& spec = model.spec();
  Plan plan{cfg.estimator, {}, 0, spec.expected_weight};
  switch (cfg.estimator) {
    case EstimatorKind::cde: {
      const auto v = cfg.variant.empty() ? std::size_t{0} : spec.variant_index(cfg.variant);
      if (spec.variants.empty()) throw std::invalid_argument("model '" + spec.name + "' has no CDE variants");
      plan.members = {v};
      plan.dim = model.cde_dimension(v);
      break;
    }
    case EstimatorKind::glrde: {
      if (spec.glr_variants.empty()) {
        throw std::invalid_argument("model '" + spec.name + "' does not support GLR estimation");
      }
      const auto v = cfg.variant.empty() ? std::size_t{0} : spec.glr_index(cfg.variant);
      plan.members = {v};
      plan.dim = model.glr_dimension(v);
      break;
    }
    case EstimatorKind::kde:
      if (!spec.kde_sample) throw std::invalid_argument("model '" + spec.name + "' does not support plain sampling");
      plan.dim = model.sample_dimension();
      plan.expected_weight = 1.0;
      plan.bandwidth = cfg.bandwidth;
      break;
    case EstimatorKind::cde_combo: {
      if (!spec.joint) {
        throw std::invalid_argument("model '" + spec.name + "' does not support combined conditionings");
      }
      if (cfg.variants.empty()) {
        for (std::size_t v = 0; v < spec.variants.size(); ++v) plan.members.push_back(v);
      } else {
        for (const auto& v : cfg.variants) plan.members.push_back(spec.variant_index(v));
      }
      if (plan.members.size() < 2) throw std::invalid_argument("cde-combo needs at least two variants");
      plan.dim = model.joint_dimension();
      break;
    }
  }
  return plan;
}

// Estimates on the grid from one point set: one row per member, plus the
// total observation weight (for ratio estimators).
struct RepOutput {
  std::vector<std::vector<double>> rows;
  double weight = 0.0;
};

RepOutput replicate(const Model& model, const Plan& plan, const RandomizedPointSet& pts,
                    std::span<const double> xs, double a, double b) {
  const std::size_t n = pts.size();
  const std::size_t members = std::max<std::size_t>(1, plan.members.size());
  RepOutput out;
  out.rows.assign(plan.estimator == EstimatorKind::cde_combo ? members : 1,
                  std::vector<double>(xs.size(), 0.0));
  switch (plan.estimator) {
    case EstimatorKind::cde:
      for (std::size_t i = 0; i < n; ++i) {
        auto cur = pts.cursor(i);
        const auto cd = model.conditional(plan.members[0], cur);
        cd.add_density_on_grid(xs, out.rows[0]);
        out.weight += cd.weight();
      }
      break;
    case EstimatorKind::glrde:
      for (std::size_t i = 0; i < n; ++i) {
        auto cur = pts.cursor(i);
        const auto g = model.glr(plan.members[0], cur);
        g.add_on_grid(xs, out.rows[0]);
        out.weight += g.weight;
      }
      break;
    case EstimatorKind::cde_combo:
      for (std::size_t i = 0; i < n; ++i) {
        auto cur = pts.cursor(i);
        const auto cds = model.joint(plan.members, cur);
        for (std::size_t l = 0; l < cds.size(); ++l) cds[l].add_density_on_grid(xs, out.rows[l]);
        out.weight += cds[0].weight();
      }
      break;
    case EstimatorKind::kde: {
      std::vector<double> samples;
      samples.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto cur = pts.cursor(i);
        const double x = model.sample(cur);
        if (std::isfinite(x)) samples.push_back(x);
      }
      if (samples.size() < 2) throw std::runtime_error("kde: fewer than two usable samples");
      const double h = plan.bandwidth ? *plan.bandwidth : kde_bandwidth(samples, a, b);
      kde_on_grid(samples, h, xs, out.rows[0]);
      // kde_on_grid already normalizes by the sample count.
      out.weight = static_cast<double>(n);
      return out;
    }
  }
  // Per-replication estimate: divide by n E[N] when known, else by the
  // realized total weight.
  const double denom = plan.expected_weight ? static_cast<double>(n) * *plan.expected_weight : out.weight;
  for (auto& row : out.rows) {
    for (auto& v : row) v = denom > 0.0 ? v / denom : 0.0;
  }
  return out;
}

template <typename F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const unsigned t = std::min<unsigned>(threads, static_cast<unsigned>(count));
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::cde:
      return "cde";
    case EstimatorKind::kde:
      return "kde";
    case EstimatorKind::glrde:
      return "glrde";
    case EstimatorKind::cde_combo:
      return "cde-combo";
  }
  return "?";
}

EstimatorKind parse_estimator(std::string_view name) {
  for (auto k : {EstimatorKind::cde, EstimatorKind::kde, EstimatorKind::glrde, EstimatorKind::cde_combo}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown estimator '" + std::string(name) +
                              "' (expected one of: cde, kde, glrde, cde-combo)");
}

EvaluationGrid build_grid(double a, double b, std::size_t n_e, UniformStream& stream) {
  if (!(a < b)) throw std::invalid_argument("build_grid: need a < b");
  if (n_e == 0) throw std::invalid_argument("build_grid: need n_e >= 1");
  EvaluationGrid g{a, b, std::vector<double>(n_e)};
  const double w = (b - a) / static_cast<double>(n_e);
  for (std::size_t j = 0; j < n_e; ++j) {
    const double lo = a + static_cast<double>(j) * w;
    // Rounding can land on the next stratum's left end; stay inside.
    g.points[j] = std::min(lo + w * stream.next(), std::nextafter(lo + w, lo));
  }
  return g;
}

IvEstimate estimate_iv(std::span<const double> rows, std::size_t n_r, std::size_t n_e, double width) {
  if (n_r < 2) throw std::invalid_argument("estimate_iv: need n_r >= 2");
  if (rows.size() != n_r * n_e) throw std::invalid_argument("estimate_iv: shape mismatch");
  IvEstimate out;
  out.per_point.resize(n_e);
  const double cell = width / static_cast<double>(n_e);
  const double m = static_cast<double>(n_r);
  std::vector<double> loo(n_r, 0.0);
  for (std::size_t j = 0; j < n_e; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n_r; ++r) mean += rows[r * n_e + j];
    mean /= m;
    double s2 = 0.0;
    for (std::size_t r = 0; r < n_r; ++r) {
      const double d = rows[r * n_e + j] - mean;
      s2 += d * d;
    }
    out.per_point[j] = s2 / (m - 1.0);
    out.value += cell * out.per_point[j];
    if (n_r >= 3) {
      for (std::size_t r = 0; r < n_r; ++r) {
        const double d = rows[r * n_e + j] - mean;
        // Centered sums without replicate r: S1 = -d, S2 = s2 - d^2.
        const double v = (s2 - d * d - d * d / (m - 1.0)) / (m - 2.0);
        loo[r] += cell * v;
      }
    }
  }
  if (n_r >= 3) {
    const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / m;
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    out.stderr_ = std::sqrt((m - 1.0) / m * ss);
  }
  return out;
}

IvEstimate estimate_mise(std::span<const double> rows, std::size_t n_r, std::size_t n_e, double width,
                         std::span<const double> reference) {
  if (n_r < 1) throw std::invalid_argument("estimate_mise: no replications");
  if (rows.size() != n_r * n_e) throw std::invalid_argument("estimate_mise: shape mismatch");
  if (reference.size() != n_e) throw std::invalid_argument("estimate_mise: missing reference density");
  IvEstimate out;
  out.per_point.resize(n_e);
  const double cell = width / static_cast<double>(n_e);
  const double m = static_cast<double>(n_r);
  std::vector<double> per_rep(n_r, 0.0);
  for (std::size_t r = 0; r < n_r; ++r) {
    for (std::size_t j = 0; j < n_e; ++j) {
      const double e = rows[r * n_e + j] - reference[j];
      per_rep[r] += cell * e * e;
      out.per_point[j] += e * e / m;
    }
  }
  const double total = std::accumulate(per_rep.begin(), per_rep.end(), 0.0);
  out.value = total / m;
  if (n_r >= 2) {
    // Jackknife of a mean reduces to the usual standard error.
    double ss = 0.0;
    for (double v : per_rep) ss += (v - out.value) * (v - out.value);
    out.stderr_ = std::sqrt(ss / (m * (m - 1.0)));
  }
  return out;
}

RateFit fit_rate(std::span<const double> n, std::span<const double> v) {
  if (n.size() != v.size()) throw std::invalid_argument("fit_rate: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0 && v[i] > 0.0)) throw std::invalid_argument("fit_rate: values must be positive");
    lx.push_back(std::log2(n[i]));
    ly.push_back(std::log2(v[i]));
  }
  const auto [mn, mx] = std::minmax_element(lx.begin(), lx.end());
  if (lx.size() < 2 || *mn == *mx) throw std::invalid_argument("fit_rate: need two distinct n values");
  const double k = static_cast<double>(lx.size());
  const double xbar = std::accumulate(lx.begin(), lx.end(), 0.0) / k;
  const double ybar = std::accumulate(ly.begin(), ly.end(), 0.0) / k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - xbar) * (ly[i] - ybar);
    sxx += (lx[i] - xbar) * (lx[i] - xbar);
  }
  const double slope = sxy / sxx;
  const double intercept = ybar - slope * xbar;
  RateFit fit;
  fit.nu = -slope;
  fit.k = std::exp2(intercept);
  fit.e19 = -(intercept + 19.0 * slope);
  for (std::size_t i = 0; i < lx.size(); ++i) {
    if (lx[i] == 19.0) {
      fit.e19 = -ly[i];
      fit.e19_measured = true;
    }
  }
  return fit;
}

std::vector<std::size_t> ExperimentConfig::default_ns(bool full) {
  std::vector<std::size_t> ns;
  const int lo = full ? 14 : 10;
  for (int e = lo; e <= lo + 5; ++e) ns.push_back(std::size_t{1} << e);
  return ns;
}

void ExperimentConfig::validate() const {
  if (model.empty()) throw std::invalid_argument("config: 'model' must be non-empty");
  if (n_r < 2) throw std::invalid_argument("config: 'n_r' must be at least 2");
  if (n_e < 1) throw std::invalid_argument("config: 'n_e' must be at least 1");
  if (ns.empty()) throw std::invalid_argument("config: 'n' must list at least one sample size");
  for (auto n : ns) {
    if (n == 0) throw std::invalid_argument("config: 'n' values must be positive");
    if (!is_power_of_two(n)) {
      throw std::invalid_argument("config: 'n' values must be powers of 2, got " + std::to_string(n));
    }
  }
  if (!is_randomized(pointset)) {
    throw std::invalid_argument("config: point set '" + std::string(cde::to_string(pointset)) +
                                "' is not randomized; use mc, lat-s, lat-s-b or sobol-lms");
  }
  if (interval && !(interval->first < interval->second)) {
    throw std::invalid_argument("config: 'interval' needs a < b");
  }
  if (bandwidth && !(*bandwidth > 0.0)) throw std::invalid_argument("config: 'bandwidth' must be positive");
  if (reference_reps < 1 || reference_n < 1) {
    throw std::invalid_argument("config: reference run needs positive 'n' and 'reps'");
  }
}

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("config: missing required key '") + key + "'");
  return j.at(key);
}

template <typename T>
T get_as(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: key '") + key + "' has the wrong type (" + e.what() + ")");
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? get_as<T>(j, key) : fallback;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
  ExperimentConfig c;
  require(j, "model");
  c.model = get_as<std::string>(j, "model");
  require(j, "estimator");
  c.estimator = parse_estimator(get_as<std::string>(j, "estimator"));
  require(j, "pointset");
  c.pointset = parse_point_set_kind(get_as<std::string>(j, "pointset"));
  if (j.contains("params")) c.params = j.at("params");
  c.variant = get_or<std::string>(j, "variant", "");
  c.variants = get_or<std::vector<std::string>>(j, "variants", {});
  if (j.contains("n")) {
    c.ns = get_as<std::vector<std::size_t>>(j, "n");
  } else if (j.contains("log2_n")) {
    const auto r = get_as<std::vector<int>>(j, "log2_n");
    if (r.size() != 2 || r[0] > r[1] || r[0] < 0 || r[1] > 40) {
      throw std::invalid_argument("config: 'log2_n' needs [lo, hi] with 0 <= lo <= hi <= 40");
    }
    for (int e = r[0]; e <= r[1]; ++e) c.ns.push_back(std::size_t{1} << e);
  } else {
    c.ns = default_ns(false);
  }
  c.n_r = get_or<std::size_t>(j, "n_r", c.n_r);
  c.n_e = get_or<std::size_t>(j, "n_e", c.n_e);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.threads = get_or<unsigned>(j, "threads", c.threads);
  if (j.contains("interval")) {
    const auto v = get_as<std::vector<double>>(j, "interval");
    if (v.size() != 2) throw std::invalid_argument("config: 'interval' needs two values [a, b]");
    c.interval = std::make_pair(v[0], v[1]);
  }
  if (j.contains("bandwidth")) c.bandwidth = get_as<double>(j, "bandwidth");
  if (j.contains("lattice")) {
    const auto& l = j.at("lattice");
    c.lattice.weights.rho = get_or<double>(l, "rho", c.lattice.weights.rho);
    c.lattice.weights.max_order = get_or<std::size_t>(l, "max_order", c.lattice.weights.max_order);
    c.lattice.max_candidates = get_or<std::size_t>(l, "candidates", c.lattice.max_candidates);
    c.lattice.unbounded_search_dim = get_or<std::size_t>(l, "search_dim", c.lattice.unbounded_search_dim);
    if (l.contains("multipliers")) {
      for (const auto& [k, v] : l.at("multipliers").items()) {
        c.lattice.multipliers[std::stoull(k)] = v.get<std::uint64_t>();
      }
    }
  }
  if (j.contains("reference")) {
    const auto& r = j.at("reference");
    c.reference_n = get_or<std::size_t>(r, "n", c.reference_n);
    c.reference_reps = get_or<std::size_t>(r, "reps", c.reference_reps);
  }
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j{{"model", model},
                   {"params", params},
                   {"estimator", std::string(cde::to_string(estimator))},
                   {"pointset", std::string(cde::to_string(pointset))},
                   {"n", ns},
                   {"n_r", n_r},
                   {"n_e", n_e},
                   {"seed", seed},
                   {"threads", threads}};
  if (!variant.empty()) j["variant"] = variant;
  if (!variants.empty()) j["variants"] = variants;
  if (interval) j["interval"] = {interval->first, interval->second};
  if (bandwidth) j["bandwidth"] = *bandwidth;
  nlohmann::json mult = nlohmann::json::object();
  for (const auto& [n, a] : lattice.multipliers) mult[std::to_string(n)] = a;
  j["lattice"] = {{"rho", lattice.weights.rho},
                  {"max_order", lattice.weights.max_order},
                  {"candidates", lattice.max_candidates},
                  {"search_dim", lattice.unbounded_search_dim},
                  {"multipliers", mult}};
  j["reference"] = {{"n", reference_n}, {"reps", reference_reps}};
  return j;
}

std::uint64_t korobov_multiplier(std::size_t n, std::size_t dim, const LatticeSearchConfig& lattice) {
  if (const auto it = lattice.multipliers.find(n); it != lattice.multipliers.end()) return it->second;
  const std::size_t s = dim == kUnboundedDim ? lattice.unbounded_search_dim
                                             : std::min(dim, lattice.unbounded_search_dim);
  if (s <= 1 || n < 8) return 1;
  using Key = std::tuple<std::size_t, std::size_t, double, std::size_t, std::size_t>;
  static std::mutex mutex;
  static std::map<Key, std::uint64_t> cache;
  const Key key{n, s, lattice.weights.rho, lattice.weights.max_order, lattice.max_candidates};
  std::lock_guard<std::mutex> lock(mutex);
  if (const auto it = cache.find(key); it != cache.end()) return it->second;
  const auto a = korobov_search(n, s, lattice.weights, lattice.max_candidates);
  cache.emplace(key, a);
  return a;
}

RandomizedPointSet replication_points(PointSetKind kind, std::size_t n, std::size_t dim,
                                      UniformStream& stream, const LatticeSearchConfig& lattice) {
  switch (kind) {
    case PointSetKind::mc:
      if (dim == kUnboundedDim) return mc_points_unbounded(n, stream.next_u64());
      return mc_points(n, dim, stream);
    case PointSetKind::sobol:
    case PointSetKind::sobol_lms_shift:
      if (dim == kUnboundedDim) {
        throw std::invalid_argument(
            "Sobol' point sets have a bounded dimension but the model needs points of unbounded "
            "dimension; use mc, lat-s or lat-s-b");
      }
      if (kind == PointSetKind::sobol) return sobol_points(n, dim);
      return sobol_lms_shift(n, dim, stream);
    case PointSetKind::lattice:
    case PointSetKind::lattice_shift:
    case PointSetKind::lattice_shift_baker: {
      const auto base = korobov_lattice(n, korobov_multiplier(n, dim, lattice), dim);
      if (kind == PointSetKind::lattice) return base;
      const auto shifted = random_shift(base, stream);
      return kind == PointSetKind::lattice_shift ? shifted : baker_transform(shifted);
    }
  }
  throw std::logic_error("replication_points: unknown kind");
}

std::vector<double> reference_density(const Model& model, std::span<const double> xs, std::size_t n,
                                      std::size_t reps, std::uint64_t seed,
                                      const LatticeSearchConfig& lattice) {
  std::vector<double> ref(xs.size(), 0.0);
  if (model.spec().exact_density) {
    for (std::size_t j = 0; j < xs.size(); ++j) ref[j] = model.exact_density(xs[j]);
    return ref;
  }
  ExperimentConfig cfg;
  cfg.estimator = EstimatorKind::cde;
  const auto plan = make_plan(cfg, model);
  const auto kind = is_power_of_two(n) ? PointSetKind::lattice_shift_baker : PointSetKind::mc;
  RatioAccumulator acc(xs.size());
  for (std::size_t r = 0; r < reps; ++r) {
    auto stream = rng_stream(seed, rep_stream_id(kReferenceTag, n, r));
    const auto pts = replication_points(kind, n, plan.dim, stream, lattice);
    auto out = replicate(model, plan, pts, xs, model.spec().a, model.spec().b);
    const double w = plan.expected_weight ? 1.0 : out.weight / static_cast<double>(n);
    if (!plan.expected_weight) {
      for (auto& v : out.rows[0]) v *= w;
    }
    acc.add(std::move(out.rows[0]), w);
  }
  for (std::size_t j = 0; j < xs.size(); ++j) ref[j] = ratio_density(acc, j, plan.expected_weight ? 1.0 : 0.0).estimate;
  return ref;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto model = make_model(cfg.model, cfg.params);
  if (cfg.interval) model->set_interval(cfg.interval->first, cfg.interval->second);
  return run_experiment(cfg, *model);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Model& model) {
  cfg.validate();
  const auto plan = make_plan(cfg, model);
  if (plan.dim == kUnboundedDim &&
      (cfg.pointset == PointSetKind::sobol || cfg.pointset == PointSetKind::sobol_lms_shift)) {
    throw std::invalid_argument("model '" + model.spec().name +
                                "' needs points of unbounded dimension, which Sobol' nets do not provide; "
                                "use mc, lat-s or lat-s-b");
  }
  ExperimentResult res;
  res.config = cfg;
  res.a = cfg.interval ? cfg.interval->first : model.spec().a;
  res.b = cfg.interval ? cfg.interval->second : model.spec().b;
  const auto& spec = model.spec();
  if (cfg.estimator == EstimatorKind::cde_combo) {
    for (auto m : plan.members) res.variant_label += (res.variant_label.empty() ? "" : "+") + spec.variants[m];
  } else if (cfg.estimator == EstimatorKind::glrde) {
    res.variant_label = spec.glr_variants[plan.members[0]];
  } else if (cfg.estimator == EstimatorKind::cde) {
    res.variant_label = spec.variants[plan.members[0]];
  } else {
    res.variant_label = "sample";
  }

  auto grid_stream = rng_stream(cfg.seed, kGridStream);
  res.grid = build_grid(res.a, res.b, cfg.n_e, grid_stream);
  const auto& xs = res.grid.points;
  const std::size_t n_e = xs.size();
  const double width = res.b - res.a;

  std::vector<double> reference;
  if (cfg.estimator == EstimatorKind::kde) {
    reference = reference_density(model, xs, cfg.reference_n, cfg.reference_reps, cfg.seed, cfg.lattice);
  }

  const std::size_t rejected_before = model.rejected();
  const unsigned threads = resolve_threads(cfg.threads);
  std::vector<std::size_t> ns = cfg.ns;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    const std::size_t n = ns[ni];
    if (cfg.pointset != PointSetKind::mc) korobov_multiplier(n, plan.dim, cfg.lattice);  // warm cache
    std::vector<RepOutput> outputs(cfg.n_r);
    parallel_for(cfg.n_r, threads, [&](std::size_t r) {
      auto stream = rng_stream(cfg.seed, rep_stream_id(kRepTag, n, r));
      const auto pts = replication_points(cfg.pointset, n, plan.dim, stream, cfg.lattice);
      outputs[r] = replicate(model, plan, pts, xs, res.a, res.b);
    });

    std::vector<double> rows(cfg.n_r * n_e);
    if (cfg.estimator == EstimatorKind::cde_combo) {
      std::vector<std::vector<double>> mats(plan.members.size(), std::vector<double>(cfg.n_r * n_e));
      for (std::size_t r = 0; r < cfg.n_r; ++r) {
        for (std::size_t l = 0; l < plan.members.size(); ++l) {
          std::copy(outputs[r].rows[l].begin(), outputs[r].rows[l].end(), mats[l].begin() + r * n_e);
        }
      }
      const auto w = fit_combo_weights(mats, cfg.n_r, n_e, res.grid.cell_width());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        double v = 0.0;
        for (std::size_t l = 0; l < w.beta.size(); ++l) v += w.beta[l] * mats[l][k];
        rows[k] = v;
      }
      res.combo_weights.push_back(w.beta);
    } else {
      for (std::size_t r = 0; r < cfg.n_r; ++r) {
        std::copy(outputs[r].rows[0].begin(), outputs[r].rows[0].end(), rows.begin() + r * n_e);
      }
    }

    const auto est = cfg.estimator == EstimatorKind::kde ? estimate_mise(rows, cfg.n_r, n_e, width, reference)
                                                         : estimate_iv(rows, cfg.n_r, n_e, width);
    res.rows.push_back({n, est.value, est.stderr_});

    if (ni + 1 == ns.size()) {
      res.density.resize(n_e);
      const bool ratio = !plan.expected_weight && cfg.estimator != EstimatorKind::kde;
      RatioAccumulator acc(n_e);
      for (std::size_t r = 0; r < cfg.n_r; ++r) {
        std::vector<double> row(rows.begin() + r * n_e, rows.begin() + (r + 1) * n_e);
        double w = 1.0;
        if (ratio) {
          w = outputs[r].weight / static_cast<double>(n);
          for (auto& v : row) v *= w;
        }
        acc.add(std::move(row), w);
      }
      for (std::size_t j = 0; j < n_e; ++j) {
        const auto e = ratio_density(acc, j, ratio ? 0.0 : 1.0);
        res.density[j] = {xs[j], e.estimate, std::sqrt(e.variance)};
      }
      res.last_rows = std::move(rows);
    }
  }

  std::vector<double> nx, iv;
  for (const auto& row : res.rows) {
    if (row.iv > 0.0) {
      nx.push_back(static_cast<double>(row.n));
      iv.push_back(row.iv);
    }
  }
  if (nx.size() >= 2) res.fit = fit_rate(nx, iv);
  else res.fit = RateFit{std::nan(""), std::nan(""), std::nan(""), false};
  res.rejected = model.rejected() - rejected_before;
  return res;
}

}  // namespace cde
