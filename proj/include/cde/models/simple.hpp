#pragma once

#include "cde/models/model.hpp"

#include <span>
#include <vector>

namespace cde {

/// X = (a_1 Z_1 + ... + a_d Z_d) / sigma with sigma^2 = sum a_j^2, so X ~ N(0,1).
struct SumNormalsParams {
  std::vector<double> a{1.0, 1.0};
  double sigma() const;
};

/// f(x | Z_j, j != k) for 0-based hidden index k, given the other Z's in index order.
double sum_normals_cde(const SumNormalsParams& p, std::size_t k, std::span<const double> z_other,
                       double x);
double sum_normals_cdf(const SumNormalsParams& p, std::size_t k, std::span<const double> z_other,
                       double x);
/// Exact Var[f(x | G_{-k})] for one sample.
double sum_normals_exact_var(const SumNormalsParams& p, std::size_t k, double x);

/// Variants hide-1..hide-d; GLR psi-1..psi-d with psi_k = -Z_k sigma / a_k.
/// Interval [-2, 2].
class SumNormalsModel final : public Model {
 public:
  explicit SumNormalsModel(SumNormalsParams p);
  static std::unique_ptr<Model> from_json(const nlohmann::json& j);

  std::size_t cde_dimension(std::size_t) const override;
  ConditionalDensity conditional(std::size_t variant, PointCursor& u) const override;
  std::size_t glr_dimension(std::size_t) const override;
  GlrSample glr(std::size_t variant, PointCursor& u) const override;
  std::size_t sample_dimension() const override;
  double sample(PointCursor& u) const override;
  std::size_t joint_dimension() const override;
  std::vector<ConditionalDensity> joint(std::span<const std::size_t> variants,
                                        PointCursor& u) const override;
  double exact_density(double x) const override;
  double exact_variance(std::size_t variant, double x) const override;
  nlohmann::json describe() const override;

  const SumNormalsParams& params() const { return p_; }

 private:
  ConditionalDensity make(std::size_t k, const std::vector<double>& z) const;
  SumNormalsParams p_;
  double sigma_;
};

/// X = Y_1 + Y_2 with Y_1 ~ U(0,1), Y_2 ~ U(0, eps).
struct SumUniformsParams {
  double eps = 0.75;
};

/// hide = 1 conditions on Y_2; hide = 2 conditions on Y_1.
double sum_uniforms_cde(const SumUniformsParams& p, int hide, double y_other, double x);
double sum_uniforms_cdf(const SumUniformsParams& p, int hide, double y_other, double x);
/// One-sample integrated variance: eps/3 (hide 1) and 1/eps - 1 + eps/3 (hide 2).
double sum_uniforms_exact_iv(const SumUniformsParams& p, int hide);
double sum_uniforms_density(const SumUniformsParams& p, double x);

/// Variants hide-1, hide-2. Interval [0, 1 + eps].
class SumUniformsModel final : public Model {
 public:
  explicit SumUniformsModel(SumUniformsParams p);
  static std::unique_ptr<Model> from_json(const nlohmann::json& j);

  std::size_t cde_dimension(std::size_t) const override { return 1; }
  ConditionalDensity conditional(std::size_t variant, PointCursor& u) const override;
  std::size_t sample_dimension() const override { return 2; }
  double sample(PointCursor& u) const override;
  std::size_t joint_dimension() const override { return 2; }
  std::vector<ConditionalDensity> joint(std::span<const std::size_t> variants,
                                        PointCursor& u) const override;
  double exact_density(double x) const override;
  double exact_variance(std::size_t variant, double x) const override;
  nlohmann::json describe() const override;

 private:
  ConditionalDensity make(int hide, double y_other) const;
  SumUniformsParams p_;
};

}  // namespace cde
