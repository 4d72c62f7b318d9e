#pragma once

#include "cde/models/model.hpp"

#include <array>

namespace cde {

/// Beam displacement X = (kappa / Y1) sqrt(Y2^2/w^4 + Y3^2/t^4) with
/// kappa = 4 l^3 / (w t) and independent normal Y1, Y2, Y3.
struct CantileverParams {
  double l = 100.0;
  double w = 4.0;
  double t = 2.0;
  std::array<double, 3> mu{2.9e7, 500.0, 1000.0};
  std::array<double, 3> sd{1.45e6, 100.0, 100.0};

  double kappa() const { return 4.0 * l * l * l / (w * t); }
};

using CantileverInputs = std::array<double, 3>;

double cantilever_h(const CantileverParams& p, const CantileverInputs& y);
/// f(x | G_{-k}) for k in {1,2,3}; y[k-1] is ignored.
double cantilever_cde(const CantileverParams& p, int k, const CantileverInputs& y, double x);
double cantilever_cdf(const CantileverParams& p, int k, const CantileverInputs& y, double x);
/// GLR weight Psi_j for j in {1,2,3} at a full realization y.
double cantilever_psi(const CantileverParams& p, int j, const CantileverInputs& y);

/// Variants g-1, g-2, g-3 (hide Y_k); GLR psi-1..psi-3. Interval [3.1707, 5.6675].
class CantileverModel final : public Model {
 public:
  explicit CantileverModel(CantileverParams p);
  static std::unique_ptr<Model> from_json(const nlohmann::json& j);

  std::size_t cde_dimension(std::size_t) const override { return 2; }
  ConditionalDensity conditional(std::size_t variant, PointCursor& u) const override;
  std::size_t glr_dimension(std::size_t) const override { return 3; }
  GlrSample glr(std::size_t variant, PointCursor& u) const override;
  std::size_t sample_dimension() const override { return 3; }
  double sample(PointCursor& u) const override;
  std::size_t joint_dimension() const override { return 3; }
  std::vector<ConditionalDensity> joint(std::span<const std::size_t> variants,
                                        PointCursor& u) const override;
  nlohmann::json describe() const override;

  const CantileverParams& params() const { return p_; }

 private:
  ConditionalDensity make(int k, const CantileverInputs& y) const;
  double draw(int j, PointCursor& u) const;
  CantileverParams p_;
};

}  // namespace cde
