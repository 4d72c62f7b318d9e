#pragma once

#include "cde/experiments.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cde {

/// One line of results.csv. Columns: model, variant, estimator, pointset, n,
/// n_r, n_e, a, b, iv, iv_stderr, nu_hat, k_hat, e19, seed, e19_kind, where
/// e19_kind is "measured" or "extrapolated". For the KDE, iv holds the MISE.
struct ResultRecord {
  std::string model;
  std::string variant;
  std::string estimator;
  std::string pointset;
  std::size_t n = 0;
  std::size_t n_r = 0;
  std::size_t n_e = 0;
  double a = 0.0;
  double b = 0.0;
  double iv = 0.0;
  double iv_stderr = 0.0;
  double nu_hat = 0.0;
  double k_hat = 0.0;
  double e19 = 0.0;
  std::uint64_t seed = 0;
  std::string e19_kind;

  bool operator==(const ResultRecord&) const = default;
};

/// Doubles are printed with 17 significant digits so that text round trips
/// are exact.
std::string format_double(double v);

std::vector<ResultRecord> result_records(const ExperimentResult& r);
std::string results_csv(const std::vector<ResultRecord>& records);
std::vector<ResultRecord> parse_results_csv(const std::string& text);

void write_results(const ExperimentResult& r, const std::string& path);
std::vector<ResultRecord> read_results(const std::string& path);

/// Density dump with columns x, fhat, stderr.
std::string density_csv(const std::vector<DensityPoint>& pts);
std::vector<DensityPoint> parse_density_csv(const std::string& text);
void write_density(const ExperimentResult& r, const std::string& path);
std::vector<DensityPoint> read_density(const std::string& path);

/// Run metadata: resolved config, model description, fit, combination
/// weights and rejection count.
nlohmann::json result_metadata(const ExperimentResult& r, const nlohmann::json& model_description);

/// Parses and validates an experiment config file; parse errors carry the
/// line and column, schema errors name the key.
ExperimentConfig read_config(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cde
