#include "cde/models/failure.hpp"

#include "cde/distributions.hpp"
#include "cde/models/san.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cde {

Structure Structure::series(std::size_t d) {
  if (d == 0) throw std::invalid_argument("structure: need at least one component");
  Structure s;
  s.kind_ = Kind::series;
  s.d_ = d;
  return s;
}

Structure Structure::parallel(std::size_t d) {
  Structure s = series(d);
  s.kind_ = Kind::parallel;
  return s;
}

Structure Structure::graph(std::size_t nodes, std::vector<std::pair<std::size_t, std::size_t>> arcs,
                           std::size_t source, std::size_t sink) {
  if (arcs.empty()) throw std::invalid_argument("structure: graph needs arcs");
  if (source >= nodes || sink >= nodes || source == sink) {
    throw std::invalid_argument("structure: bad source or sink");
  }
  for (const auto& [a, b] : arcs) {
    if (a >= nodes || b >= nodes) throw std::invalid_argument("structure: arc endpoint out of range");
  }
  Structure s;
  s.kind_ = Kind::graph;
  s.d_ = arcs.size();
  s.nodes_ = nodes;
  s.arcs_ = std::move(arcs);
  s.source_ = source;
  s.sink_ = sink;
  return s;
}

Structure Structure::san_standard() {
  const auto net = SanSpec::standard();
  std::vector<std::pair<std::size_t, std::size_t>> arcs;
  for (const auto& a : net.arcs()) arcs.emplace_back(a.from, a.to);
  return graph(net.nodes(), std::move(arcs), net.source(), net.sink());
}

bool Structure::operational(const std::vector<char>& up) const {
  switch (kind_) {
    case Kind::series:
      return std::all_of(up.begin(), up.end(), [](char c) { return c != 0; });
    case Kind::parallel:
      return std::any_of(up.begin(), up.end(), [](char c) { return c != 0; });
    case Kind::graph:
      break;
  }
  std::vector<char> seen(nodes_, 0);
  std::vector<std::size_t> stack{source_};
  seen[source_] = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (v == sink_) return true;
    for (std::size_t j = 0; j < arcs_.size(); ++j) {
      if (up[j] && arcs_[j].first == v && !seen[arcs_[j].second]) {
        seen[arcs_[j].second] = 1;
        stack.push_back(arcs_[j].second);
      }
    }
  }
  return false;
}

nlohmann::json Structure::to_json() const {
  switch (kind_) {
    case Kind::series:
      return {{"type", "series"}, {"components", d_}};
    case Kind::parallel:
      return {{"type", "parallel"}, {"components", d_}};
    case Kind::graph:
      break;
  }
  nlohmann::json arcs = nlohmann::json::array();
  for (const auto& [a, b] : arcs_) arcs.push_back({a, b});
  return {{"type", "graph"}, {"nodes", nodes_}, {"arcs", arcs}, {"source", source_}, {"sink", sink_}};
}

FailureSpec::FailureSpec(Structure structure, std::vector<double> rates)
    : structure_(std::move(structure)), rates_(std::move(rates)) {
  const std::size_t d = structure_.components();
  if (rates_.size() != d) throw std::invalid_argument("failure: need one rate per component");
  for (double r : rates_) {
    if (!(r > 0.0)) throw std::invalid_argument("failure: rates must be positive");
  }
  if (!structure_.operational(std::vector<char>(d, 1))) {
    throw std::invalid_argument("failure: structure is down with every component up");
  }
  if (structure_.operational(std::vector<char>(d, 0))) {
    throw std::invalid_argument("failure: structure never fails");
  }
  // Monotonicity spot check: x <= y componentwise must give Phi(x) <= Phi(y).
  auto stream = rng_stream(0xfa11, 0);
  for (int trial = 0; trial < 256; ++trial) {
    std::vector<char> lo(d), hi(d);
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = stream.next() < 0.5;
      hi[j] = lo[j] || stream.next() < 0.5;
    }
    if (structure_.operational(lo) && !structure_.operational(hi)) {
      throw std::invalid_argument("failure: structure function is not monotone");
    }
  }
}

std::size_t FailureSpec::critical_forward(const std::vector<std::size_t>& pi) const {
  std::vector<char> up(components(), 1);
  for (std::size_t k = 0; k < pi.size(); ++k) {
    up[pi[k]] = 0;
    if (!structure_.operational(up)) return k + 1;
  }
  throw std::logic_error("failure: system survived every component failure");
}

std::size_t FailureSpec::critical_reverse(const std::vector<std::size_t>& pi) const {
  std::vector<char> up(components(), 0);
  for (std::size_t k = pi.size(); k-- > 0;) {
    up[pi[k]] = 1;
    if (structure_.operational(up)) return k + 1;
  }
  throw std::logic_error("failure: system down with every component up");
}

std::vector<double> FailureSpec::stage_rates(const std::vector<std::size_t>& pi, std::size_t c) const {
  std::vector<double> out(c);
  double total = std::accumulate(rates_.begin(), rates_.end(), 0.0);
  for (std::size_t j = 0; j < c; ++j) {
    out[j] = total;
    total -= rates_[pi[j]];
  }
  return out;
}

FailureDraw failure_simulate(const FailureSpec& spec, PointCursor& u) {
  const std::size_t d = spec.components();
  FailureDraw draw;
  draw.lifetimes.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    draw.lifetimes[j] = -std::log1p(-open_unit(u.next())) / spec.rates()[j];
  }
  draw.pi.resize(d);
  std::iota(draw.pi.begin(), draw.pi.end(), std::size_t{0});
  std::sort(draw.pi.begin(), draw.pi.end(),
            [&](std::size_t a, std::size_t b) { return draw.lifetimes[a] < draw.lifetimes[b]; });
  draw.critical = spec.critical_reverse(draw.pi);
  draw.stage_rates = spec.stage_rates(draw.pi, draw.critical);
  return draw;
}

FailureModel::FailureModel(FailureSpec spec, HypoexpMethod method)
    : spec_f_(std::move(spec)), method_(method) {
  spec_.name = "failure";
  spec_.a = 0.0;
  spec_.b = 1.829;
  spec_.variants = {"perm"};
  spec_.kde_sample = true;
}

std::unique_ptr<Model> FailureModel::from_json(const nlohmann::json& j) {
  Structure structure = Structure::san_standard();
  if (j.contains("structure")) {
    const auto& s = j.at("structure");
    const auto type = s.at("type").get<std::string>();
    if (type == "series") {
      structure = Structure::series(s.at("components").get<std::size_t>());
    } else if (type == "parallel") {
      structure = Structure::parallel(s.at("components").get<std::size_t>());
    } else if (type == "graph") {
      std::vector<std::pair<std::size_t, std::size_t>> arcs;
      for (const auto& a : s.at("arcs")) arcs.emplace_back(a.at(0).get<std::size_t>(), a.at(1).get<std::size_t>());
      const auto nodes = s.at("nodes").get<std::size_t>();
      structure = Structure::graph(nodes, std::move(arcs), s.value("source", std::size_t{0}),
                                   s.value("sink", nodes - 1));
    } else if (type != "san") {
      throw std::invalid_argument("failure: structure type must be one of series, parallel, graph, san; got '" +
                                  type + "'");
    }
  }
  std::vector<double> rates(structure.components(), 1.0);
  if (j.contains("rates")) {
    const auto& r = j.at("rates");
    if (r.is_number()) {
      rates.assign(structure.components(), r.get<double>());
    } else {
      rates = r.get<std::vector<double>>();
    }
  }
  HypoexpMethod method = HypoexpMethod::automatic;
  if (j.contains("hypoexp")) {
    const auto m = j.at("hypoexp").get<std::string>();
    if (m == "product") {
      method = HypoexpMethod::product;
    } else if (m == "uniformization") {
      method = HypoexpMethod::uniformization;
    } else if (m != "auto") {
      throw std::invalid_argument("failure: hypoexp must be auto, product or uniformization; got '" + m + "'");
    }
  }
  return std::make_unique<FailureModel>(FailureSpec(std::move(structure), std::move(rates)), method);
}

ConditionalDensity FailureModel::conditional(std::size_t, PointCursor& u) const {
  const auto draw = failure_simulate(spec_f_, u);
  auto h = std::make_shared<const Hypoexponential>(draw.stage_rates, method_);
  return ConditionalDensity([h](double x) { return h->density(x); }, [h](double x) { return h->cdf(x); });
}

double FailureModel::sample(PointCursor& u) const {
  const auto draw = failure_simulate(spec_f_, u);
  return draw.lifetimes[draw.pi[draw.critical - 1]];
}

nlohmann::json FailureModel::describe() const {
  const char* m = method_ == HypoexpMethod::product          ? "product"
                  : method_ == HypoexpMethod::uniformization ? "uniformization"
                                                             : "auto";
  return {{"structure", spec_f_.structure().to_json()}, {"rates", spec_f_.rates()}, {"hypoexp", m}};
}

}  // namespace cde
