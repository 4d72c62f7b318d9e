#pragma once

#include "cde/models/model.hpp"

#include <vector>

namespace cde {

/// Single-server FIFO queue with Poisson(lambda) arrivals and lognormal(mu,
/// sigma^2) services.
struct QueueParams {
  double lambda = 1.0;
  double mu = -0.7;
  double sigma2 = 0.4;
  double tau = 60.0;
  bool regenerative = false;  // steady-state cycles instead of days of length tau

  double sigma() const;
};

/// One simulated day (or regenerative cycle). Vectors are 1-based in the
/// customer index: entry 0 is unused. For a cycle, customer n+1 is the
/// arrival that finds the system empty and closes it (w[n+1] = 0).
struct QueueTrajectory {
  std::size_t n = 0;       // customers N
  std::vector<double> a;   // interarrival times A_j
  std::vector<double> s;   // service times S_j
  std::vector<double> w;   // waiting times W_j
};

/// Consumes uniforms in the order A_1, S_1, A_2, S_2, ... (a cycle skips A_1).
QueueTrajectory queue_simulate(const QueueParams& p, PointCursor& u);

/// Range of customer indices j whose waiting-time term enters the estimators:
/// 2..N for a day, 2..N+1 for a cycle.
std::size_t queue_last_term(const QueueParams& p, const QueueTrajectory& t);

/// D(x) = sum_j g(x + A_j - W_{j-1}).
double queue_cde(const QueueParams& p, const QueueTrajectory& t, double x);
/// Conditional cdf numerator at x >= 0; its value at 0 is the p_0 contribution.
double queue_cdf(const QueueParams& p, const QueueTrajectory& t, double x);
/// L(x) terms: threshold W_j and psi_j = -(Z_{j-1} + sigma) / (S_{j-1} sigma).
GlrSample queue_glr(const QueueParams& p, const QueueTrajectory& t);

/// CDE variant "cde" (service time of the previous customer hidden) and GLR
/// variant "glr". Point dimension is unbounded. With a finite horizon
/// E[N] = lambda tau is known; cycles need a ratio estimator.
class QueueModel final : public Model {
 public:
  explicit QueueModel(QueueParams p);
  static std::unique_ptr<Model> from_json(const nlohmann::json& j);

  std::size_t cde_dimension(std::size_t) const override { return kUnboundedDim; }
  ConditionalDensity conditional(std::size_t variant, PointCursor& u) const override;
  std::size_t glr_dimension(std::size_t) const override { return kUnboundedDim; }
  GlrSample glr(std::size_t variant, PointCursor& u) const override;
  nlohmann::json describe() const override;

  const QueueParams& params() const { return p_; }

 private:
  QueueParams p_;
};

}  // namespace cde
