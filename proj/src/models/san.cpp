#include "cde/models/san.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cde {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string default_cut_name(const std::vector<std::size_t>& arcs) {
  std::string name = "cut";
  for (auto a : arcs) name += "-" + std::to_string(a + 1);
  return name;
}

}  // namespace

SanSpec::SanSpec(std::size_t nodes, std::vector<SanArc> arcs, std::vector<SanCut> cuts)
    : nodes_(nodes), arcs_(std::move(arcs)), cuts_(std::move(cuts)) {
  if (nodes_ < 2 || arcs_.empty()) throw std::invalid_argument("san: need at least 2 nodes and 1 arc");
  std::vector<std::size_t> indeg(nodes_, 0), outdeg(nodes_, 0);
  for (std::size_t j = 0; j < arcs_.size(); ++j) {
    const auto& a = arcs_[j];
    if (a.from >= nodes_ || a.to >= nodes_ || a.from == a.to) {
      throw std::invalid_argument("san: arc " + std::to_string(j + 1) + " has invalid endpoints");
    }
    for (std::size_t k = 0; k < j; ++k) {
      if (arcs_[k].from == a.from && arcs_[k].to == a.to) {
        throw std::invalid_argument("san: parallel arcs " + std::to_string(k + 1) + " and " +
                                    std::to_string(j + 1));
      }
    }
    ++outdeg[a.from];
    ++indeg[a.to];
  }
  std::vector<std::size_t> sources, sinks;
  for (std::size_t v = 0; v < nodes_; ++v) {
    if (indeg[v] == 0) sources.push_back(v);
    if (outdeg[v] == 0) sinks.push_back(v);
  }
  if (sources.size() != 1 || sinks.size() != 1) {
    throw std::invalid_argument("san: graph needs exactly one source and one sink");
  }
  source_ = sources[0];
  sink_ = sinks[0];

  // Kahn's algorithm; arcs are ordered by the topological position of their tail.
  std::vector<std::size_t> order;
  std::vector<std::size_t> remaining = indeg;
  std::vector<std::size_t> ready{source_};
  while (!ready.empty()) {
    const auto v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (const auto& a : arcs_) {
      if (a.from == v && --remaining[a.to] == 0) ready.push_back(a.to);
    }
  }
  if (order.size() != nodes_) throw std::invalid_argument("san: graph has a cycle or unreachable node");
  std::vector<std::size_t> pos(nodes_);
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  topo_.resize(arcs_.size());
  for (std::size_t j = 0; j < arcs_.size(); ++j) topo_[j] = j;
  std::stable_sort(topo_.begin(), topo_.end(),
                   [&](std::size_t x, std::size_t y) { return pos[arcs_[x].from] < pos[arcs_[y].from]; });

  for (auto& c : cuts_) {
    std::sort(c.arcs.begin(), c.arcs.end());
    for (auto a : c.arcs) {
      if (a >= arcs_.size()) throw std::invalid_argument("san: cut '" + c.name + "' names a missing arc");
    }
    if (c.name.empty()) c.name = default_cut_name(c.arcs);
    if (!is_uniformly_directed_cut(c.arcs)) {
      throw std::invalid_argument("san: '" + c.name +
                                  "' is not a uniformly directed cut (some source-sink path does not "
                                  "meet it exactly once)");
    }
  }
  if (cuts_.empty()) throw std::invalid_argument("san: at least one cut is required");
}

bool SanSpec::is_uniformly_directed_cut(const std::vector<std::size_t>& cut) const {
  if (cut.empty()) return false;
  std::vector<char> in_cut(arcs_.size(), 0);
  for (auto a : cut) in_cut.at(a) = 1;
  // Min and max count of cut arcs over all paths from the source.
  constexpr long kUnset = -1;
  std::vector<long> lo(nodes_, kUnset), hi(nodes_, kUnset);
  lo[source_] = hi[source_] = 0;
  for (auto j : topo_) {
    const auto& a = arcs_[j];
    if (lo[a.from] == kUnset) continue;
    const long add = in_cut[j];
    const long l = lo[a.from] + add, h = hi[a.from] + add;
    lo[a.to] = lo[a.to] == kUnset ? l : std::min(lo[a.to], l);
    hi[a.to] = hi[a.to] == kUnset ? h : std::max(hi[a.to], h);
  }
  return lo[sink_] == 1 && hi[sink_] == 1;
}

double SanSpec::longest_path(const std::vector<double>& y) const {
  std::vector<double> dist(nodes_, kNegInf);
  dist[source_] = 0.0;
  for (auto j : topo_) {
    const auto& a = arcs_[j];
    dist[a.to] = std::max(dist[a.to], dist[a.from] + y[j]);
  }
  return dist[sink_];
}

std::vector<double> SanSpec::cut_prefix_lengths(const SanCut& cut, const std::vector<double>& y) const {
  std::vector<char> in_cut(arcs_.size(), 0);
  for (auto a : cut.arcs) in_cut[a] = 1;
  std::vector<double> fwd(nodes_, kNegInf), bwd(nodes_, kNegInf);
  fwd[source_] = 0.0;
  for (auto j : topo_) {
    if (in_cut[j]) continue;
    const auto& a = arcs_[j];
    fwd[a.to] = std::max(fwd[a.to], fwd[a.from] + y[j]);
  }
  bwd[sink_] = 0.0;
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
    if (in_cut[*it]) continue;
    const auto& a = arcs_[*it];
    bwd[a.from] = std::max(bwd[a.from], bwd[a.to] + y[*it]);
  }
  std::vector<double> p(cut.arcs.size());
  for (std::size_t i = 0; i < cut.arcs.size(); ++i) {
    const auto& a = arcs_[cut.arcs[i]];
    p[i] = fwd[a.from] + bwd[a.to];
  }
  return p;
}

SanSpec SanSpec::standard() {
  // Arc endpoints of the 13-arc network; lengths are normal(m, m/4) truncated at 0.
  const std::size_t ends[13][2] = {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {1, 5}, {2, 5}, {3, 6},
                                   {3, 4}, {4, 7}, {4, 5}, {5, 8}, {6, 7}, {7, 8}};
  const double means[13] = {13.0, 5.5, 7.0, 5.2, 16.5, 14.7, 10.3, 6.0, 4.0, 20.0, 3.2, 3.2, 16.5};
  std::vector<SanArc> arcs;
  for (int j = 0; j < 13; ++j) {
    arcs.push_back({ends[j][0], ends[j][1], Distribution::truncated_normal(means[j], means[j] / 4.0)});
  }
  std::vector<SanCut> cuts{{"", {4, 5, 6, 8, 9}}, {"", {0, 1}}, {"", {10, 12}}};
  return SanSpec(9, std::move(arcs), std::move(cuts));
}

SanSpec SanSpec::from_json(const nlohmann::json& j) {
  if (!j.contains("arcs")) return standard();
  const auto nodes = j.at("nodes").get<std::size_t>();
  std::vector<SanArc> arcs;
  for (const auto& a : j.at("arcs")) {
    arcs.push_back({a.at("from").get<std::size_t>(), a.at("to").get<std::size_t>(),
                    Distribution::from_json(a.at("dist"))});
  }
  std::vector<SanCut> cuts;
  for (const auto& [name, ids] : j.at("cuts").items()) {
    SanCut c{name, {}};
    for (auto id : ids.get<std::vector<std::size_t>>()) {
      if (id == 0) throw std::invalid_argument("san: cut arc ids are 1-based");
      c.arcs.push_back(id - 1);
    }
    cuts.push_back(std::move(c));
  }
  return SanSpec(nodes, std::move(arcs), std::move(cuts));
}

nlohmann::json SanSpec::to_json() const {
  nlohmann::json arcs = nlohmann::json::array();
  for (const auto& a : arcs_) arcs.push_back({{"from", a.from}, {"to", a.to}, {"dist", a.length.to_json()}});
  nlohmann::json cuts = nlohmann::json::object();
  for (const auto& c : cuts_) {
    std::vector<std::size_t> ids;
    for (auto a : c.arcs) ids.push_back(a + 1);
    cuts[c.name] = ids;
  }
  return {{"nodes", nodes_}, {"arcs", arcs}, {"cuts", cuts}};
}

double san_cdf(const SanSpec& spec, const SanCut& cut, const std::vector<double>& p, double x) {
  double prod = 1.0;
  for (std::size_t i = 0; i < cut.arcs.size(); ++i) {
    prod *= spec.arcs()[cut.arcs[i]].length.cdf(x - p[i]);
  }
  return prod;
}

double san_cde(const SanSpec& spec, const SanCut& cut, const std::vector<double>& p, double x) {
  const std::size_t m = cut.arcs.size();
  // Prefix/suffix products avoid dividing by zero cdf values.
  std::vector<double> f(m), F(m), suffix(m + 1, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& d = spec.arcs()[cut.arcs[i]].length;
    f[i] = d.pdf(x - p[i]);
    F[i] = d.cdf(x - p[i]);
  }
  for (std::size_t i = m; i-- > 0;) suffix[i] = suffix[i + 1] * F[i];
  double prefix = 1.0, sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sum += f[i] * prefix * suffix[i + 1];
    prefix *= F[i];
  }
  return sum;
}

SanModel::SanModel(SanSpec spec, std::optional<std::pair<double, double>> interval)
    : net_(std::move(spec)) {
  spec_.name = "san";
  for (const auto& c : net_.cuts()) spec_.variants.push_back(c.name);
  spec_.kde_sample = true;
  spec_.joint = true;
  if (interval) {
    set_interval(interval->first, interval->second);
    return;
  }
  // Pilot: 2^14 plain MC samples from a fixed stream.
  constexpr std::size_t n = std::size_t{1} << 14;
  auto stream = rng_stream(0x5a4e, 0);
  std::vector<double> xs(n), y(net_.arcs().size());
  for (auto& x : xs) {
    for (std::size_t j = 0; j < y.size(); ++j) y[j] = net_.arcs()[j].length.quantile(stream.next());
    x = net_.longest_path(y);
  }
  std::sort(xs.begin(), xs.end());
  set_interval(xs[static_cast<std::size_t>(0.025 * n)], xs[static_cast<std::size_t>(0.975 * n)]);
}

std::unique_ptr<Model> SanModel::from_json(const nlohmann::json& j) {
  std::optional<std::pair<double, double>> interval;
  if (j.contains("interval")) {
    const auto v = j.at("interval").get<std::vector<double>>();
    if (v.size() != 2) throw std::invalid_argument("san: interval needs two values");
    interval = std::make_pair(v[0], v[1]);
  }
  return std::make_unique<SanModel>(SanSpec::from_json(j.value("network", nlohmann::json::object())),
                                    interval);
}

std::size_t SanModel::cde_dimension(std::size_t variant) const {
  return net_.arcs().size() - net_.cuts().at(variant).arcs.size();
}

ConditionalDensity SanModel::make(std::size_t cut_index, const std::vector<double>& y) const {
  const SanSpec* net = &net_;
  const SanCut* cut = &net_.cuts()[cut_index];
  auto p = net_.cut_prefix_lengths(*cut, y);
  return ConditionalDensity([=](double x) { return san_cde(*net, *cut, p, x); },
                            [=](double x) { return san_cdf(*net, *cut, p, x); });
}

ConditionalDensity SanModel::conditional(std::size_t variant, PointCursor& u) const {
  const auto& cut = net_.cuts().at(variant);
  std::vector<double> y(net_.arcs().size(), 0.0);
  std::size_t next_cut = 0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (next_cut < cut.arcs.size() && cut.arcs[next_cut] == j) {
      ++next_cut;
      continue;
    }
    y[j] = net_.arcs()[j].length.quantile(u.next());
  }
  return make(variant, y);
}

double SanModel::sample(PointCursor& u) const {
  std::vector<double> y(net_.arcs().size());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = net_.arcs()[j].length.quantile(u.next());
  return net_.longest_path(y);
}

std::vector<ConditionalDensity> SanModel::joint(std::span<const std::size_t> variants,
                                                PointCursor& u) const {
  std::vector<double> y(net_.arcs().size());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = net_.arcs()[j].length.quantile(u.next());
  std::vector<ConditionalDensity> out;
  for (auto v : variants) out.push_back(make(v, y));
  return out;
}

nlohmann::json SanModel::describe() const {
  return {{"network", net_.to_json()}, {"interval", {spec_.a, spec_.b}}};
}

}  // namespace cde
