#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cde {

/// Marks a point set whose coordinates are generated on demand without a
/// fixed dimension (recurrence-based lattices, or MC).
inline constexpr std::size_t kUnboundedDim = std::numeric_limits<std::size_t>::max();

bool is_power_of_two(std::uint64_t n);

/// Reproducible stream of uniforms in [0,1). Identical (seed, stream_id)
/// pairs yield identical sequences.
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t stream_id);

  double next();
  std::uint64_t next_u64() { return engine_(); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

UniformStream rng_stream(std::uint64_t seed, std::uint64_t stream_id);

/// Stateless uniform keyed by (key, index); used for coordinates that are
/// materialized lazily (unbounded shifts, unbounded MC points).
double keyed_uniform(std::uint64_t key, std::uint64_t index);

enum class PointSetKind { mc, lattice, lattice_shift, lattice_shift_baker, sobol, sobol_lms_shift };

/// CLI names: mc, lat, lat-s, lat-s-b, sobol, sobol-lms.
std::string_view to_string(PointSetKind k);
PointSetKind parse_point_set_kind(std::string_view name);
bool is_randomized(PointSetKind k);

class PointCursor;

/// An n x s array of points in [0,1)^s together with the recipe that built
/// it. Lattice kinds keep their generating vector (or Korobov multiplier) and
/// shift so that any coordinate can be re-derived; the dimension may be
/// unbounded for Korobov lattices and MC.
class RandomizedPointSet {
 public:
  std::size_t size() const { return n_; }
  std::size_t dim() const { return s_; }
  bool unbounded() const { return s_ == kUnboundedDim; }
  PointSetKind kind() const { return kind_; }

  double coord(std::size_t i, std::size_t j) const;
  /// Materializes point i (finite dimension only).
  std::vector<double> point(std::size_t i) const;
  /// Sequential access to the coordinates of point i.
  PointCursor cursor(std::size_t i) const;

  /// Lattice generating vector (empty for Korobov-lazy sets and non-lattices).
  const std::vector<std::uint64_t>& generating_vector() const { return z_; }
  std::optional<std::uint64_t> korobov_multiplier() const { return korobov_a_; }
  /// Lattice generator z_j for coordinate j (0-based).
  std::uint64_t generator(std::size_t j) const;
  bool has_shift() const { return shifted_; }
  double shift(std::size_t j) const;
  bool baker() const { return baker_; }

 private:
  friend RandomizedPointSet mc_points(std::size_t, std::size_t, UniformStream&);
  friend RandomizedPointSet mc_points_unbounded(std::size_t, std::uint64_t);
  friend RandomizedPointSet rank1_lattice(std::size_t, std::vector<std::uint64_t>);
  friend RandomizedPointSet korobov_lattice(std::size_t, std::uint64_t, std::size_t);
  friend RandomizedPointSet random_shift(const RandomizedPointSet&, UniformStream&);
  friend RandomizedPointSet with_shift(const RandomizedPointSet&, std::vector<double>);
  friend RandomizedPointSet baker_transform(const RandomizedPointSet&);
  friend RandomizedPointSet make_digital_point_set(std::size_t, std::size_t, PointSetKind,
                                                   std::vector<double>);
  friend class PointCursor;

  bool is_lattice() const;

  std::size_t n_ = 0;
  std::size_t s_ = 0;
  PointSetKind kind_ = PointSetKind::mc;
  std::vector<double> values_;  // row-major n x s for mc / digital nets
  std::uint64_t mc_key_ = 0;    // unbounded MC
  std::vector<std::uint64_t> z_;
  std::optional<std::uint64_t> korobov_a_;
  bool shifted_ = false;
  std::vector<double> shift_;
  std::uint64_t shift_key_ = 0;  // lazily derived shift for unbounded lattices
  bool baker_ = false;
};

/// Sequential reader of one point's coordinates. Reading past the dimension
/// of a finite point set throws std::out_of_range.
class PointCursor {
 public:
  PointCursor(const RandomizedPointSet& set, std::size_t index);

  double next();
  std::size_t consumed() const { return j_; }

 private:
  const RandomizedPointSet* set_;
  std::size_t i_;
  std::size_t j_ = 0;
  std::uint64_t z_ = 1;  // running Korobov power for lazy lattices
};

/// Cursor over an explicit coordinate list (tests, single realizations).
class VectorCursorSource {
 public:
  explicit VectorCursorSource(std::vector<double> coords);
  PointCursor cursor() const { return set_.cursor(0); }

 private:
  RandomizedPointSet set_;
};

/// n i.i.d. uniform points in [0,1)^s drawn from `stream`.
RandomizedPointSet mc_points(std::size_t n, std::size_t s, UniformStream& stream);
/// n i.i.d. points of unbounded dimension; point i's coordinates come from
/// an independent keyed substream.
RandomizedPointSet mc_points_unbounded(std::size_t n, std::uint64_t key);

/// Rank-1 lattice {i z / n mod 1}; dimension = z.size().
RandomizedPointSet rank1_lattice(std::size_t n, std::vector<std::uint64_t> z);
/// Korobov lattice z = (1, a, a^2 mod n, ...). Pass kUnboundedDim for the
/// lazily extended version.
RandomizedPointSet korobov_lattice(std::size_t n, std::uint64_t a, std::size_t s);

/// Coordinate-wise (u + shift) mod 1 with the shift drawn from `stream`.
/// Unbounded sets derive shift coordinates lazily from a key drawn here.
RandomizedPointSet random_shift(const RandomizedPointSet& pts, UniformStream& stream);
/// Explicit shift (finite lattices).
RandomizedPointSet with_shift(const RandomizedPointSet& pts, std::vector<double> shift);
/// Tent map u -> 2u (u < 1/2), 2 - 2u otherwise; applied after the shift.
RandomizedPointSet baker_transform(const RandomizedPointSet& pts);
double baker(double u);

// ---------------------------------------------------------------------------
// Sobol' nets

inline constexpr int kSobolBits = 31;

/// Direction numbers in the Joe-Kuo file layout: per dimension the degree s,
/// the polynomial coefficients a, and the initial m_1..m_s. Dimension 1 is the
/// van der Corput sequence and is implicit.
class SobolTable {
 public:
  static SobolTable load(const std::string& path);
  /// Table bundled under data/ (path overridable with CDE_SOBOL_TABLE).
  static const SobolTable& bundled();

  std::size_t max_dim() const { return entries_.size() + 1; }
  /// 31-bit direction integers v_1..v_31 for 0-based dimension j.
  std::array<std::uint32_t, kSobolBits> directions(std::size_t j) const;

 private:
  struct Entry {
    unsigned degree;
    std::uint32_t poly;
    std::vector<std::uint32_t> m;
  };
  std::vector<Entry> entries_;
};

/// One 31x31 binary lower-triangular matrix with unit diagonal, stored as
/// row masks in the MSB-first bit layout of the direction integers.
using ScrambleMatrix = std::array<std::uint32_t, kSobolBits>;

ScrambleMatrix identity_scramble();
ScrambleMatrix random_scramble(UniformStream& stream);
/// Left-multiplies a direction integer by the scramble matrix.
std::uint32_t scramble_apply(const ScrambleMatrix& m, std::uint32_t v);

/// First n points of the Sobol' sequence in Gray-code order, unrandomized.
RandomizedPointSet sobol_points(std::size_t n, std::size_t s,
                                const SobolTable& table = SobolTable::bundled());
/// Sobol' points with given per-coordinate scramble matrices and digital shift.
RandomizedPointSet sobol_scrambled(std::size_t n, std::size_t s,
                                   std::span<const ScrambleMatrix> matrices,
                                   std::span<const std::uint32_t> digital_shift,
                                   const SobolTable& table = SobolTable::bundled());
/// Left matrix scramble plus random digital shift, both drawn from `stream`.
RandomizedPointSet sobol_lms_shift(std::size_t n, std::size_t s, UniformStream& stream,
                                   const SobolTable& table = SobolTable::bundled());

// ---------------------------------------------------------------------------
// Lattice figure of merit

/// Order-dependent weights gamma_v = rho^|v| for |v| <= max_order.
struct MeritWeights {
  double rho = 0.5;
  std::size_t max_order = std::numeric_limits<std::size_t>::max();
};

/// Second-order Bernoulli polynomial B2(x) = x^2 - x + 1/6.
double bernoulli_b2(double x);

/// Weighted P2 criterion of the rank-1 lattice with generating vector z
/// (first s entries used). Lower is better.
double p_alpha_merit(std::span<const std::uint64_t> z, std::size_t n, std::size_t s,
                     const MeritWeights& w);
/// Korobov generating vector (1, a, a^2, ...) mod n truncated to s entries.
std::vector<std::uint64_t> korobov_vector(std::size_t n, std::uint64_t a, std::size_t s);
/// Exhaustive search over odd a in (1, n/2) minimizing p_alpha_merit of the
/// Korobov vector; ties go to the smallest a. A nonzero max_candidates thins
/// the candidate list to an evenly strided subset of at most that size.
std::uint64_t korobov_search(std::size_t n, std::size_t s, const MeritWeights& w,
                             std::size_t max_candidates = 0);

}  // namespace cde
