#pragma once

#include "cde/distributions.hpp"
#include "cde/models/model.hpp"

#include <array>

namespace cde {

/// Plate buckling strength X = V1 V2 V3 with Lambda = (Y1/Y2) sqrt(Y3/Y4),
/// V1 = 2.1/Lambda - 0.9/Lambda^2, V2 = 1 - 2 Y6 Y2 / Y1, V3 = 1 - 3 Y5 / (4 Lambda).
struct BucklingParams {
  std::array<Distribution, 6> y{
      Distribution::normal(23.808, 23.808 * 0.028),
      Distribution::lognormal(lognormal_from_mean_cv(0.525, 0.044).mu,
                              lognormal_from_mean_cv(0.525, 0.044).sigma),
      Distribution::lognormal(lognormal_from_mean_cv(44.2, 0.1235).mu,
                              lognormal_from_mean_cv(44.2, 0.1235).sigma),
      Distribution::normal(28623.0, 28623.0 * 0.076),
      Distribution::normal(0.35, 0.35 * 0.05),
      Distribution::normal(5.25, 5.25 * 0.07)};
};

using BucklingInputs = std::array<double, 6>;

struct BucklingTerms {
  double lambda, v1, v2, v3;
};

BucklingTerms buckling_terms(const BucklingInputs& y);
double buckling_h(const BucklingInputs& y);
/// f(x | G_{-k}) and its cdf for k in {5, 6}; y[k-1] is ignored. Returns 0
/// when the retained inputs make the conditioning degenerate.
double buckling_cde(const BucklingParams& p, int k, const BucklingInputs& y, double x);
double buckling_cdf(const BucklingParams& p, int k, const BucklingInputs& y, double x);
/// Psi_6 = Y1 (Y6 - mu6) / (2 C Y2 sigma6^2), C = V1 V3; needs normal Y6.
double buckling_psi6(const BucklingParams& p, const BucklingInputs& y);

/// Variants g-5 and g-6 (dimension 5); GLR psi-6 (dimension 6). Draws with
/// Y1, Y4, Lambda or the relevant V-terms non-positive are rejected and
/// counted. Interval [0.5169, 0.6511].
class BucklingModel final : public Model {
 public:
  explicit BucklingModel(BucklingParams p);
  static std::unique_ptr<Model> from_json(const nlohmann::json& j);

  std::size_t cde_dimension(std::size_t) const override { return 5; }
  ConditionalDensity conditional(std::size_t variant, PointCursor& u) const override;
  std::size_t glr_dimension(std::size_t) const override { return 6; }
  GlrSample glr(std::size_t variant, PointCursor& u) const override;
  std::size_t sample_dimension() const override { return 6; }
  double sample(PointCursor& u) const override;
  std::size_t joint_dimension() const override { return 6; }
  std::vector<ConditionalDensity> joint(std::span<const std::size_t> variants,
                                        PointCursor& u) const override;
  nlohmann::json describe() const override;

  const BucklingParams& params() const { return p_; }

 private:
  /// False when the draw must be rejected for conditioning k (0 = all).
  static bool admissible(int k, const BucklingInputs& y);
  ConditionalDensity make(int k, const BucklingInputs& y) const;
  BucklingParams p_;
};

}  // namespace cde
