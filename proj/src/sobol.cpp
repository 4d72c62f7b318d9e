#include "cde/rng_points.hpp"

#include <bit>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cde {

RandomizedPointSet make_digital_point_set(std::size_t n, std::size_t s, PointSetKind kind,
                                          std::vector<double> values);

SobolTable SobolTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open Sobol' direction table '" + path + "'");
  SobolTable t;
  std::string line;
  std::getline(in, line);  // header
  std::size_t expected_dim = 2;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    unsigned d = 0;
    Entry e{};
    if (!(row >> d >> e.degree >> e.poly)) {
      throw std::runtime_error("malformed Sobol' table row: " + line);
    }
    if (d != expected_dim++) throw std::runtime_error("Sobol' table rows out of order at d=" + std::to_string(d));
    e.m.resize(e.degree);
    for (auto& mi : e.m) {
      if (!(row >> mi)) throw std::runtime_error("Sobol' table row too short: " + line);
    }
    t.entries_.push_back(std::move(e));
  }
  return t;
}

const SobolTable& SobolTable::bundled() {
  static const SobolTable table = [] {
    const char* env = std::getenv("CDE_SOBOL_TABLE");
    return load(env != nullptr ? std::string(env) : std::string(CDE_DATA_DIR) + "/new-joe-kuo-6.1024");
  }();
  return table;
}

std::array<std::uint32_t, kSobolBits> SobolTable::directions(std::size_t j) const {
  std::array<std::uint32_t, kSobolBits> v{};
  if (j == 0) {
    for (int k = 0; k < kSobolBits; ++k) v[k] = 1u << (kSobolBits - 1 - k);
    return v;
  }
  if (j >= max_dim()) throw std::out_of_range("Sobol' dimension beyond table");
  const Entry& e = entries_[j - 1];
  const unsigned s = e.degree;
  for (unsigned k = 0; k < s && k < static_cast<unsigned>(kSobolBits); ++k) {
    v[k] = e.m[k] << (kSobolBits - 1 - k);
  }
  for (unsigned k = s; k < static_cast<unsigned>(kSobolBits); ++k) {
    std::uint32_t x = v[k - s] ^ (v[k - s] >> s);
    for (unsigned l = 1; l < s; ++l) {
      if ((e.poly >> (s - 1 - l)) & 1u) x ^= v[k - l];
    }
    v[k] = x;
  }
  return v;
}

ScrambleMatrix identity_scramble() {
  ScrambleMatrix m{};
  for (int r = 0; r < kSobolBits; ++r) m[r] = 1u << (kSobolBits - 1 - r);
  return m;
}

ScrambleMatrix random_scramble(UniformStream& stream) {
  ScrambleMatrix m{};
  constexpr std::uint32_t all = (1u << kSobolBits) - 1;
  for (int r = 0; r < kSobolBits; ++r) {
    const std::uint32_t diag = 1u << (kSobolBits - 1 - r);
    // Columns left of the diagonal are the bits above it in this layout.
    const std::uint32_t below = all & ~((diag << 1) - 1);
    m[r] = (static_cast<std::uint32_t>(stream.next_u64()) & below) | diag;
  }
  return m;
}

std::uint32_t scramble_apply(const ScrambleMatrix& m, std::uint32_t v) {
  std::uint32_t out = 0;
  for (int r = 0; r < kSobolBits; ++r) {
    out |= static_cast<std::uint32_t>(std::popcount(m[r] & v) & 1) << (kSobolBits - 1 - r);
  }
  return out;
}

namespace {

void check_sobol_args(std::size_t n, std::size_t s, const SobolTable& table) {
  if (!is_power_of_two(n)) throw std::invalid_argument("Sobol' points: n must be a power of 2");
  if (n > (std::size_t{1} << kSobolBits)) throw std::invalid_argument("Sobol' points: n too large");
  if (s == 0) throw std::invalid_argument("Sobol' points: s must be positive");
  if (s == kUnboundedDim) {
    throw std::invalid_argument("Sobol' points need a finite dimension (use a Korobov lattice)");
  }
  if (s > table.max_dim()) {
    throw std::invalid_argument("Sobol' points: dimension " + std::to_string(s) +
                                " exceeds table limit " + std::to_string(table.max_dim()));
  }
}

RandomizedPointSet generate(std::size_t n, std::size_t s, PointSetKind kind,
                            std::span<const ScrambleMatrix> matrices,
                            std::span<const std::uint32_t> digital_shift, const SobolTable& table) {
  std::vector<double> values(n * s);
  for (std::size_t j = 0; j < s; ++j) {
    auto v = table.directions(j);
    if (!matrices.empty()) {
      for (auto& vk : v) vk = scramble_apply(matrices[j], vk);
    }
    std::uint32_t x = digital_shift.empty() ? 0u : digital_shift[j];
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) x ^= v[std::countr_one(i - 1)];
      values[i * s + j] = static_cast<double>(x) * 0x1p-31;
    }
  }
  return make_digital_point_set(n, s, kind, std::move(values));
}

}  // namespace

RandomizedPointSet sobol_points(std::size_t n, std::size_t s, const SobolTable& table) {
  check_sobol_args(n, s, table);
  return generate(n, s, PointSetKind::sobol, {}, {}, table);
}

RandomizedPointSet sobol_scrambled(std::size_t n, std::size_t s,
                                   std::span<const ScrambleMatrix> matrices,
                                   std::span<const std::uint32_t> digital_shift,
                                   const SobolTable& table) {
  check_sobol_args(n, s, table);
  if (matrices.size() != s || digital_shift.size() != s) {
    throw std::invalid_argument("Sobol' scramble: need one matrix and shift per coordinate");
  }
  return generate(n, s, PointSetKind::sobol_lms_shift, matrices, digital_shift, table);
}

RandomizedPointSet sobol_lms_shift(std::size_t n, std::size_t s, UniformStream& stream,
                                   const SobolTable& table) {
  check_sobol_args(n, s, table);
  std::vector<ScrambleMatrix> matrices(s);
  std::vector<std::uint32_t> shift(s);
  for (std::size_t j = 0; j < s; ++j) {
    matrices[j] = random_scramble(stream);
    shift[j] = static_cast<std::uint32_t>(stream.next_u64() >> 33);
  }
  return generate(n, s, PointSetKind::sobol_lms_shift, matrices, shift, table);
}

}  // namespace cde
