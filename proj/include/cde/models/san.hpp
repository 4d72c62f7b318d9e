#pragma once

#include "cde/distributions.hpp"
#include "cde/models/model.hpp"

#include <string>
#include <vector>

namespace cde {

struct SanArc {
  std::size_t from;
  std::size_t to;
  Distribution length;
};

struct SanCut {
  std::string name;
  std::vector<std::size_t> arcs;  // 0-based arc indices
};

/// Stochastic activity network: a DAG with a unique source and sink, random
/// arc lengths, and one or more uniformly directed cuts.
class SanSpec {
 public:
  SanSpec(std::size_t nodes, std::vector<SanArc> arcs, std::vector<SanCut> cuts);

  /// The 13-arc, 9-node network with truncated-normal arc lengths.
  static SanSpec standard();
  /// {"nodes": 9, "arcs": [{"from":0,"to":1,"dist":{...}}, ...],
  ///  "cuts": {"name": [1-based arc ids], ...}}
  static SanSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  std::size_t nodes() const { return nodes_; }
  const std::vector<SanArc>& arcs() const { return arcs_; }
  const std::vector<SanCut>& cuts() const { return cuts_; }
  std::size_t source() const { return source_; }
  std::size_t sink() const { return sink_; }

  /// True when every source-to-sink path meets the arc set exactly once.
  bool is_uniformly_directed_cut(const std::vector<std::size_t>& arcs) const;

  /// Longest source-to-sink path for full arc lengths y.
  double longest_path(const std::vector<double>& y) const;
  /// P_j for each arc j of the cut: longest path through j excluding Y_j.
  /// Lengths of cut arcs in y are ignored.
  std::vector<double> cut_prefix_lengths(const SanCut& cut, const std::vector<double>& y) const;

 private:
  std::size_t nodes_;
  std::vector<SanArc> arcs_;
  std::vector<SanCut> cuts_;
  std::vector<std::size_t> topo_;  // arcs in topological order of their tail
  std::size_t source_ = 0;
  std::size_t sink_ = 0;
};

/// F(x | G) = prod_{j in L} F_j(x - P_j).
double san_cdf(const SanSpec& spec, const SanCut& cut, const std::vector<double>& p, double x);
/// Derivative of san_cdf in x.
double san_cde(const SanSpec& spec, const SanCut& cut, const std::vector<double>& p, double x);

/// One CDE variant per cut ("cut-5-6-7-9-10" style names by default). The
/// interval defaults to the 2.5% and 97.5% quantiles of a fixed pilot run.
class SanModel final : public Model {
 public:
  explicit SanModel(SanSpec spec, std::optional<std::pair<double, double>> interval = {});
  static std::unique_ptr<Model> from_json(const nlohmann::json& j);

  std::size_t cde_dimension(std::size_t variant) const override;
  ConditionalDensity conditional(std::size_t variant, PointCursor& u) const override;
  std::size_t sample_dimension() const override { return net_.arcs().size(); }
  double sample(PointCursor& u) const override;
  std::size_t joint_dimension() const override { return net_.arcs().size(); }
  std::vector<ConditionalDensity> joint(std::span<const std::size_t> variants,
                                        PointCursor& u) const override;
  nlohmann::json describe() const override;

  const SanSpec& network() const { return net_; }

 private:
  ConditionalDensity make(std::size_t cut, const std::vector<double>& y) const;
  SanSpec net_;
};

}  // namespace cde
