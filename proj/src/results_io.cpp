#include "cde/results_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cde {

namespace {

const char* const kResultHeader =
    "model,variant,estimator,pointset,n,n_r,n_e,a,b,iv,iv_stderr,nu_hat,k_hat,e19,seed,e19_kind";
const char* const kDensityHeader = "x,fhat,stderr";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string where(std::size_t line, const char* column) {
  return "line " + std::to_string(line) + ", column '" + column + "'";
}

double parse_double(const std::string& s, std::size_t line, const char* column) {
  if (s == "nan") return std::nan("");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::runtime_error("results: bad number '" + s + "' at " + where(line, column));
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s, std::size_t line, const char* column) {
  char* end = nullptr;
  errno = 0;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || s[0] == '-') {
    throw std::runtime_error("results: bad integer '" + s + "' at " + where(line, column));
  }
  return v;
}

template <typename F>
void for_each_data_line(const std::string& text, const char* header, F&& f) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header) {
        throw std::runtime_error("line " + std::to_string(number) + ": expected header '" + header + "'");
      }
      seen_header = true;
      continue;
    }
    f(split(line), number);
  }
  if (!seen_header) throw std::runtime_error(std::string("missing header '") + header + "'");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<ResultRecord> result_records(const ExperimentResult& r) {
  std::vector<ResultRecord> out;
  const auto& c = r.config;
  for (const auto& row : r.rows) {
    out.push_back({c.model, r.variant_label, std::string(to_string(c.estimator)),
                   std::string(to_string(c.pointset)), row.n, c.n_r, c.n_e, r.a, r.b, row.iv, row.iv_stderr,
                   r.fit.nu, r.fit.k, r.fit.e19, c.seed, r.fit.e19_measured ? "measured" : "extrapolated"});
  }
  return out;
}

std::string results_csv(const std::vector<ResultRecord>& records) {
  std::string s = std::string(kResultHeader) + "\n";
  for (const auto& r : records) {
    s += r.model + "," + r.variant + "," + r.estimator + "," + r.pointset + "," + std::to_string(r.n) + "," +
         std::to_string(r.n_r) + "," + std::to_string(r.n_e) + "," + format_double(r.a) + "," +
         format_double(r.b) + "," + format_double(r.iv) + "," + format_double(r.iv_stderr) + "," +
         format_double(r.nu_hat) + "," + format_double(r.k_hat) + "," + format_double(r.e19) + "," +
         std::to_string(r.seed) + "," + r.e19_kind + "\n";
  }
  return s;
}

std::vector<ResultRecord> parse_results_csv(const std::string& text) {
  std::vector<ResultRecord> out;
  for_each_data_line(text, kResultHeader, [&](const std::vector<std::string>& f, std::size_t line) {
    if (f.size() != 16) {
      throw std::runtime_error("results: line " + std::to_string(line) + " has " + std::to_string(f.size()) +
                               " fields, expected 16");
    }
    ResultRecord r;
    r.model = f[0];
    r.variant = f[1];
    r.estimator = f[2];
    r.pointset = f[3];
    r.n = parse_uint(f[4], line, "n");
    r.n_r = parse_uint(f[5], line, "n_r");
    r.n_e = parse_uint(f[6], line, "n_e");
    r.a = parse_double(f[7], line, "a");
    r.b = parse_double(f[8], line, "b");
    r.iv = parse_double(f[9], line, "iv");
    r.iv_stderr = parse_double(f[10], line, "iv_stderr");
    r.nu_hat = parse_double(f[11], line, "nu_hat");
    r.k_hat = parse_double(f[12], line, "k_hat");
    r.e19 = parse_double(f[13], line, "e19");
    r.seed = parse_uint(f[14], line, "seed");
    r.e19_kind = f[15];
    if (r.e19_kind != "measured" && r.e19_kind != "extrapolated") {
      throw std::runtime_error("results: bad e19_kind '" + r.e19_kind + "' at " + where(line, "e19_kind"));
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::string density_csv(const std::vector<DensityPoint>& pts) {
  std::string s = std::string(kDensityHeader) + "\n";
  for (const auto& p : pts) s += format_double(p.x) + "," + format_double(p.fhat) + "," + format_double(p.stderr_) + "\n";
  return s;
}

std::vector<DensityPoint> parse_density_csv(const std::string& text) {
  std::vector<DensityPoint> out;
  for_each_data_line(text, kDensityHeader, [&](const std::vector<std::string>& f, std::size_t line) {
    if (f.size() != 3) {
      throw std::runtime_error("density: line " + std::to_string(line) + " has " + std::to_string(f.size()) +
                               " fields, expected 3");
    }
    out.push_back({parse_double(f[0], line, "x"), parse_double(f[1], line, "fhat"),
                   parse_double(f[2], line, "stderr")});
  });
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_results(const ExperimentResult& r, const std::string& path) {
  write_text_file(path, results_csv(result_records(r)));
}

std::vector<ResultRecord> read_results(const std::string& path) { return parse_results_csv(read_text_file(path)); }

void write_density(const ExperimentResult& r, const std::string& path) {
  write_text_file(path, density_csv(r.density));
}

std::vector<DensityPoint> read_density(const std::string& path) { return parse_density_csv(read_text_file(path)); }

nlohmann::json result_metadata(const ExperimentResult& r, const nlohmann::json& model_description) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) rows.push_back({{"n", row.n}, {"iv", row.iv}, {"iv_stderr", row.iv_stderr}});
  nlohmann::json j{{"config", r.config.to_json()},
                   {"model", model_description},
                   {"variant", r.variant_label},
                   {"interval", {r.a, r.b}},
                   {"measure", r.config.estimator == EstimatorKind::kde ? "mise" : "iv"},
                   {"rows", rows},
                   {"fit",
                    {{"nu_hat", r.fit.nu},
                     {"k_hat", r.fit.k},
                     {"e19", r.fit.e19},
                     {"e19_kind", r.fit.e19_measured ? "measured" : "extrapolated"}}},
                   {"rejected", r.rejected}};
  if (!r.combo_weights.empty()) j["combo_weights"] = r.combo_weights;
  return j;
}

ExperimentConfig read_config(const std::string& path) {
  const auto text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config '" + path + "': " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

}  // namespace cde
