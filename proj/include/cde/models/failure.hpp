#pragma once

#include "cde/models/hypoexp.hpp"
#include "cde/models/model.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cde {

/// Monotone binary structure function over d components. A graph structure
/// is up when the sink is reachable from the source through working arcs.
class Structure {
 public:
  enum class Kind { series, parallel, graph };

  static Structure series(std::size_t d);
  static Structure parallel(std::size_t d);
  /// Directed graph whose arcs are the components.
  static Structure graph(std::size_t nodes, std::vector<std::pair<std::size_t, std::size_t>> arcs,
                         std::size_t source, std::size_t sink);
  /// Connectivity of the 13-arc activity network.
  static Structure san_standard();

  Kind kind() const { return kind_; }
  std::size_t components() const { return d_; }
  /// up[j] != 0 when component j works.
  bool operational(const std::vector<char>& up) const;
  nlohmann::json to_json() const;

 private:
  Kind kind_ = Kind::series;
  std::size_t d_ = 0;
  std::size_t nodes_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> arcs_;
  std::size_t source_ = 0;
  std::size_t sink_ = 0;
};

/// Components with independent exponential lifetimes of rates lambda_j.
class FailureSpec {
 public:
  /// Validates Phi(all up) = 1, Phi(all down) = 0 and monotonicity on random
  /// pairs of states.
  FailureSpec(Structure structure, std::vector<double> rates);

  const Structure& structure() const { return structure_; }
  const std::vector<double>& rates() const { return rates_; }
  std::size_t components() const { return rates_.size(); }

  /// Critical number by failing components in the order pi.
  std::size_t critical_forward(const std::vector<std::size_t>& pi) const;
  /// Critical number by resurrecting components in reverse order of pi.
  std::size_t critical_reverse(const std::vector<std::size_t>& pi) const;
  /// Lambda_1..Lambda_C for the order pi and critical number c.
  std::vector<double> stage_rates(const std::vector<std::size_t>& pi, std::size_t c) const;

 private:
  Structure structure_;
  std::vector<double> rates_;
};

struct FailureDraw {
  std::vector<std::size_t> pi;  // components in failure order
  std::vector<double> lifetimes;
  std::size_t critical = 0;
  std::vector<double> stage_rates;
};

/// Lifetimes by inversion from d uniforms, then pi, C and the stage rates.
FailureDraw failure_simulate(const FailureSpec& spec, PointCursor& u);

/// Single variant "perm": the conditional law of X given the failure order is
/// hypoexponential. Interval (0, 1.829] by default.
class FailureModel final : public Model {
 public:
  explicit FailureModel(FailureSpec spec, HypoexpMethod method = HypoexpMethod::automatic);
  static std::unique_ptr<Model> from_json(const nlohmann::json& j);

  std::size_t cde_dimension(std::size_t) const override { return spec_f_.components(); }
  ConditionalDensity conditional(std::size_t variant, PointCursor& u) const override;
  std::size_t sample_dimension() const override { return spec_f_.components(); }
  double sample(PointCursor& u) const override;
  nlohmann::json describe() const override;

  const FailureSpec& failure_spec() const { return spec_f_; }

 private:
  FailureSpec spec_f_;
  HypoexpMethod method_;
};

}  // namespace cde
