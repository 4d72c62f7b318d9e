#pragma once

#include "cde/estimator_core.hpp"
#include "cde/rng_points.hpp"
#include "json.hpp"

#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cde {

/// Static description of a simulation model.
struct ModelSpec {
  std::string name;
  double a = 0.0;  // estimation interval [a, b]
  double b = 1.0;
  std::vector<std::string> variants;      // CDE conditionings
  std::vector<std::string> glr_variants;  // GLR constructions
  bool kde_sample = false;                // plain samples of X available
  bool exact_density = false;
  bool exact_variance = false;            // per-sample CDE variance in closed form
  bool joint = false;                     // all CDE variants from one shared point
  /// Expected observation weight per simulation (E[N]); empty when unknown
  /// and it has to be estimated as a ratio.
  std::optional<double> expected_weight = 1.0;

  std::size_t variant_index(const std::string& v) const;
  std::size_t glr_index(const std::string& v) const;
};

class Model {
 public:
  virtual ~Model() = default;

  const ModelSpec& spec() const { return spec_; }
  /// Overrides the estimation interval; requires a < b.
  void set_interval(double a, double b);

  /// Number of uniforms the conditioning consumes (kUnboundedDim allowed).
  virtual std::size_t cde_dimension(std::size_t variant) const = 0;
  virtual ConditionalDensity conditional(std::size_t variant, PointCursor& u) const = 0;

  virtual std::size_t glr_dimension(std::size_t variant) const;
  virtual GlrSample glr(std::size_t variant, PointCursor& u) const;

  virtual std::size_t sample_dimension() const;
  virtual double sample(PointCursor& u) const;

  /// Dimension of a full draw from which every CDE variant can be evaluated.
  virtual std::size_t joint_dimension() const;
  virtual std::vector<ConditionalDensity> joint(std::span<const std::size_t> variants,
                                                PointCursor& u) const;

  virtual double exact_density(double x) const;
  virtual double exact_variance(std::size_t variant, double x) const;

  /// Parameter echo for result metadata.
  virtual nlohmann::json describe() const = 0;

  /// Draws discarded as impossible under the model (density reported as 0).
  std::size_t rejected() const { return rejected_.load(); }

 protected:
  void count_rejection() const { rejected_.fetch_add(1, std::memory_order_relaxed); }
  [[noreturn]] void unsupported(const std::string& what) const;

  ModelSpec spec_;

 private:
  mutable std::atomic<std::size_t> rejected_{0};
};

/// Builds a model by name from a JSON parameter object (may be empty for
/// defaults). Names: sum-normals, sum-uniforms, cantilever, san, queue,
/// asian, buckling, failure.
std::unique_ptr<Model> make_model(const std::string& name, const nlohmann::json& params = {});
std::vector<std::string> model_names();

/// A conditional density that is identically zero (rejected draws).
ConditionalDensity zero_density(double weight = 1.0);

}  // namespace cde
