#pragma once

#include "cde/models/model.hpp"
#include "cde/rng_points.hpp"
#include "json.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cde {

enum class EstimatorKind { cde, kde, glrde, cde_combo };

/// CLI names: cde, kde, glrde, cde-combo.
std::string_view to_string(EstimatorKind k);
EstimatorKind parse_estimator(std::string_view name);

/// One evaluation point drawn uniformly in each of n_e equal strata of [a, b).
struct EvaluationGrid {
  double a = 0.0;
  double b = 1.0;
  std::vector<double> points;

  std::size_t size() const { return points.size(); }
  double cell_width() const { return (b - a) / static_cast<double>(points.size()); }
};

EvaluationGrid build_grid(double a, double b, std::size_t n_e, UniformStream& stream);

/// Integrated variance or MISE over the grid with a leave-one-replicate-out
/// jackknife standard error.
struct IvEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::vector<double> per_point;  // sample variance (IV) or mean squared error (MISE)
};

/// rows is n_r x n_e, row-major, one row per independent replication.
/// value = (b - a)/n_e * sum_j sample variance at e_j.
IvEstimate estimate_iv(std::span<const double> rows, std::size_t n_r, std::size_t n_e, double width);
/// value = (b - a)/n_e * sum_j mean_r (row_r[j] - reference[j])^2.
IvEstimate estimate_mise(std::span<const double> rows, std::size_t n_r, std::size_t n_e, double width,
                         std::span<const double> reference);

struct RateFit {
  double nu = 0.0;       // IV ~ K n^-nu
  double k = 0.0;
  double e19 = 0.0;      // -log2 IV at n = 2^19
  bool e19_measured = false;
};

/// Least squares on (log2 n, log2 v). e19 is the measured value when
/// n = 2^19 is present and the extrapolation otherwise.
RateFit fit_rate(std::span<const double> n, std::span<const double> v);

struct LatticeSearchConfig {
  MeritWeights weights{0.05, 3};
  std::size_t max_candidates = 256;
  /// Dimension used in the search when the model dimension is unbounded.
  std::size_t unbounded_search_dim = 32;
  /// Fixed Korobov multipliers per n; searched when absent.
  std::map<std::size_t, std::uint64_t> multipliers;
};

struct ExperimentConfig {
  std::string model;
  nlohmann::json params = nlohmann::json::object();
  std::string variant;                // CDE/GLR variant; empty selects the first
  std::vector<std::string> variants;  // cde-combo members; empty selects all
  EstimatorKind estimator = EstimatorKind::cde;
  PointSetKind pointset = PointSetKind::mc;
  std::vector<std::size_t> ns;
  std::size_t n_r = 50;
  std::size_t n_e = 128;
  std::uint64_t seed = 1;
  std::optional<std::pair<double, double>> interval;
  unsigned threads = 1;
  /// KDE bandwidth; the normal-reference rule when absent.
  std::optional<double> bandwidth;
  LatticeSearchConfig lattice;
  std::size_t reference_n = std::size_t{1} << 18;  // KDE reference run (no closed form)
  std::size_t reference_reps = 10;

  /// Required keys: model, estimator, pointset. Errors name the offending key.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Desk scale 2^10..2^15 with n_r = 50, or 2^14..2^19 with n_r = 100.
  static std::vector<std::size_t> default_ns(bool full);
  void validate() const;
};

struct CurveRow {
  std::size_t n = 0;
  double iv = 0.0;  // IV, or MISE for the KDE
  double iv_stderr = 0.0;
};

struct DensityPoint {
  double x = 0.0;
  double fhat = 0.0;
  double stderr_ = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string variant_label;  // resolved variant, or "+"-joined combo members
  double a = 0.0;
  double b = 1.0;
  std::vector<CurveRow> rows;
  RateFit fit;
  std::vector<DensityPoint> density;  // grand mean at the largest n
  /// Per n: combination weights (cde-combo only).
  std::vector<std::vector<double>> combo_weights;
  std::size_t rejected = 0;
  /// Per-replication estimates at the largest n (n_r x n_e).
  std::vector<double> last_rows;
  EvaluationGrid grid;
};

/// Runs n_r independent replications per n. Replications may run on several
/// threads; results are merged in replication order and do not depend on
/// scheduling.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Model& model);

/// Builds the point set for one replication: MC draws fresh points, RQMC
/// randomizes the structural set for n. Throws for incompatible dimension
/// and kind (e.g. Sobol' with an unbounded dimension).
RandomizedPointSet replication_points(PointSetKind kind, std::size_t n, std::size_t dim,
                                      UniformStream& stream, const LatticeSearchConfig& lattice);

/// Korobov multiplier used for (n, dim); searched once and cached.
std::uint64_t korobov_multiplier(std::size_t n, std::size_t dim, const LatticeSearchConfig& lattice);

/// Reference density on the grid for MISE: the closed form when available,
/// else a CDE run with a shifted lattice plus baker's transform.
std::vector<double> reference_density(const Model& model, std::span<const double> xs,
                                      std::size_t n, std::size_t reps, std::uint64_t seed,
                                      const LatticeSearchConfig& lattice);

}  // namespace cde
