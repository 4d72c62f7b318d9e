#include "cde/rng_points.hpp"

#include "cde/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cde {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1p-53; }

void require_finite(const RandomizedPointSet& pts, const char* what) {
  if (pts.unbounded()) throw std::invalid_argument(std::string(what) + ": unbounded dimension");
}

}  // namespace

bool is_power_of_two(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

UniformStream::UniformStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x5eedu};
  engine_.seed(seq);
}

double UniformStream::next() { return to_unit(engine_()); }

UniformStream rng_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return UniformStream(seed, stream_id);
}

double keyed_uniform(std::uint64_t key, std::uint64_t index) {
  return to_unit(splitmix64(splitmix64(key) ^ (index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL)));
}

std::string_view to_string(PointSetKind k) {
  switch (k) {
    case PointSetKind::mc: return "mc";
    case PointSetKind::lattice: return "lat";
    case PointSetKind::lattice_shift: return "lat-s";
    case PointSetKind::lattice_shift_baker: return "lat-s-b";
    case PointSetKind::sobol: return "sobol";
    case PointSetKind::sobol_lms_shift: return "sobol-lms";
  }
  return "?";
}

PointSetKind parse_point_set_kind(std::string_view name) {
  for (auto k : {PointSetKind::mc, PointSetKind::lattice, PointSetKind::lattice_shift,
                 PointSetKind::lattice_shift_baker, PointSetKind::sobol,
                 PointSetKind::sobol_lms_shift}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown point set kind '" + std::string(name) +
                              "' (expected mc, lat, lat-s, lat-s-b, sobol or sobol-lms)");
}

bool is_randomized(PointSetKind k) {
  return k == PointSetKind::mc || k == PointSetKind::lattice_shift ||
         k == PointSetKind::lattice_shift_baker || k == PointSetKind::sobol_lms_shift;
}

// ---------------------------------------------------------------------------

bool RandomizedPointSet::is_lattice() const {
  return kind_ == PointSetKind::lattice || kind_ == PointSetKind::lattice_shift ||
         kind_ == PointSetKind::lattice_shift_baker;
}

std::uint64_t RandomizedPointSet::generator(std::size_t j) const {
  if (!is_lattice()) throw std::logic_error("generator: not a lattice");
  if (!z_.empty()) return z_.at(j);
  // a^j mod n by square-and-multiply; n <= 2^32 so products fit.
  std::uint64_t result = 1 % n_;
  std::uint64_t base = *korobov_a_ % n_;
  for (std::size_t e = j; e > 0; e >>= 1) {
    if (e & 1) result = result * base % n_;
    base = base * base % n_;
  }
  return result;
}

double RandomizedPointSet::shift(std::size_t j) const {
  if (!shifted_) return 0.0;
  if (j < shift_.size()) return shift_[j];
  return keyed_uniform(shift_key_, j);
}

namespace {

double lattice_value(std::size_t n, std::size_t i, std::uint64_t z, bool shifted, double shift,
                     bool apply_baker) {
  double u = static_cast<double>((static_cast<std::uint64_t>(i) * z) % n) / static_cast<double>(n);
  if (shifted) {
    u += shift;
    if (u >= 1.0) u -= 1.0;
  }
  return apply_baker ? baker(u) : u;
}

}  // namespace

double RandomizedPointSet::coord(std::size_t i, std::size_t j) const {
  if (i >= n_ || (s_ != kUnboundedDim && j >= s_)) {
    throw std::out_of_range("point set coordinate out of range");
  }
  if (is_lattice()) return lattice_value(n_, i, generator(j), shifted_, shift(j), baker_);
  if (kind_ == PointSetKind::mc && unbounded()) {
    return keyed_uniform(splitmix64(mc_key_ ^ splitmix64(i)), j);
  }
  return values_[i * s_ + j];
}

std::vector<double> RandomizedPointSet::point(std::size_t i) const {
  require_finite(*this, "point");
  std::vector<double> p(s_);
  for (std::size_t j = 0; j < s_; ++j) p[j] = coord(i, j);
  return p;
}

PointCursor RandomizedPointSet::cursor(std::size_t i) const { return PointCursor(*this, i); }

PointCursor::PointCursor(const RandomizedPointSet& set, std::size_t index)
    : set_(&set), i_(index) {
  if (index >= set.size()) throw std::out_of_range("point index out of range");
}

double PointCursor::next() {
  const auto& s = *set_;
  if (!s.unbounded() && j_ >= s.dim()) {
    throw std::out_of_range("point cursor read past dimension " + std::to_string(s.dim()));
  }
  double u;
  if (s.is_lattice() && s.z_.empty()) {
    u = lattice_value(s.n_, i_, z_, s.shifted_, s.shift(j_), s.baker_);
    z_ = z_ * *s.korobov_a_ % s.n_;
  } else {
    u = s.coord(i_, j_);
  }
  ++j_;
  return u;
}

RandomizedPointSet make_digital_point_set(std::size_t n, std::size_t s, PointSetKind kind,
                                          std::vector<double> values) {
  RandomizedPointSet p;
  p.n_ = n;
  p.s_ = s;
  p.kind_ = kind;
  p.values_ = std::move(values);
  return p;
}

VectorCursorSource::VectorCursorSource(std::vector<double> coords) {
  const std::size_t s = coords.size();
  set_ = make_digital_point_set(1, s, PointSetKind::mc, std::move(coords));
}

RandomizedPointSet mc_points(std::size_t n, std::size_t s, UniformStream& stream) {
  if (n == 0 || s == 0) throw std::invalid_argument("mc_points: n and s must be positive");
  if (s == kUnboundedDim) return mc_points_unbounded(n, stream.next_u64());
  std::vector<double> v(n * s);
  for (auto& x : v) x = stream.next();
  return make_digital_point_set(n, s, PointSetKind::mc, std::move(v));
}

RandomizedPointSet mc_points_unbounded(std::size_t n, std::uint64_t key) {
  if (n == 0) throw std::invalid_argument("mc_points: n must be positive");
  RandomizedPointSet p;
  p.n_ = n;
  p.s_ = kUnboundedDim;
  p.kind_ = PointSetKind::mc;
  p.mc_key_ = key;
  return p;
}

RandomizedPointSet rank1_lattice(std::size_t n, std::vector<std::uint64_t> z) {
  if (n == 0) throw std::invalid_argument("rank1_lattice: n must be positive");
  if (n > (std::size_t{1} << 32)) throw std::invalid_argument("rank1_lattice: n too large");
  if (z.empty()) throw std::invalid_argument("rank1_lattice: empty generating vector");
  for (auto zj : z) {
    if (zj == 0) throw std::invalid_argument("rank1_lattice: generators must be positive");
  }
  RandomizedPointSet p;
  p.n_ = n;
  p.s_ = z.size();
  p.kind_ = PointSetKind::lattice;
  p.z_ = std::move(z);
  for (auto& zj : p.z_) zj %= n;
  return p;
}

RandomizedPointSet korobov_lattice(std::size_t n, std::uint64_t a, std::size_t s) {
  if (n == 0 || s == 0) throw std::invalid_argument("korobov_lattice: n and s must be positive");
  if (a == 0) throw std::invalid_argument("korobov_lattice: multiplier must be positive");
  if (s != kUnboundedDim) return rank1_lattice(n, korobov_vector(n, a, s));
  if (n > (std::size_t{1} << 32)) throw std::invalid_argument("korobov_lattice: n too large");
  RandomizedPointSet p;
  p.n_ = n;
  p.s_ = kUnboundedDim;
  p.kind_ = PointSetKind::lattice;
  p.korobov_a_ = a % n;
  return p;
}

RandomizedPointSet random_shift(const RandomizedPointSet& pts, UniformStream& stream) {
  if (pts.unbounded()) {
    RandomizedPointSet p = pts;
    if (p.is_lattice()) {
      p.shifted_ = true;
      p.shift_.clear();
      p.shift_key_ = stream.next_u64();
      p.kind_ = p.baker_ ? PointSetKind::lattice_shift_baker : PointSetKind::lattice_shift;
      return p;
    }
    throw std::invalid_argument("random_shift: unbounded non-lattice point set");
  }
  std::vector<double> shift(pts.dim());
  for (auto& x : shift) x = stream.next();
  return with_shift(pts, std::move(shift));
}

RandomizedPointSet with_shift(const RandomizedPointSet& pts, std::vector<double> shift) {
  if (!pts.unbounded() && shift.size() != pts.dim()) {
    throw std::invalid_argument("with_shift: shift length differs from dimension");
  }
  for (double x : shift) {
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("with_shift: shift outside [0,1)");
  }
  RandomizedPointSet p = pts;
  if (p.is_lattice()) {
    p.shifted_ = true;
    p.shift_ = std::move(shift);
    p.kind_ = p.baker_ ? PointSetKind::lattice_shift_baker : PointSetKind::lattice_shift;
    return p;
  }
  require_finite(pts, "with_shift");
  for (std::size_t i = 0; i < p.n_; ++i) {
    for (std::size_t j = 0; j < p.s_; ++j) {
      double& u = p.values_[i * p.s_ + j];
      u += shift[j];
      if (u >= 1.0) u -= 1.0;
    }
  }
  return p;
}

double baker(double u) {
  const double v = u < 0.5 ? 2.0 * u : 2.0 - 2.0 * u;
  return v < 1.0 ? v : std::nextafter(1.0, 0.0);
}

RandomizedPointSet baker_transform(const RandomizedPointSet& pts) {
  RandomizedPointSet p = pts;
  if (p.is_lattice()) {
    p.baker_ = true;
    if (p.shifted_) p.kind_ = PointSetKind::lattice_shift_baker;
    return p;
  }
  require_finite(pts, "baker_transform");
  for (auto& u : p.values_) u = baker(u);
  return p;
}

// ---------------------------------------------------------------------------

double bernoulli_b2(double x) { return x * x - x + 1.0 / 6.0; }

std::vector<std::uint64_t> korobov_vector(std::size_t n, std::uint64_t a, std::size_t s) {
  std::vector<std::uint64_t> z(s);
  std::uint64_t zj = 1 % n;
  for (std::size_t j = 0; j < s; ++j) {
    z[j] = zj;
    zj = zj * (a % n) % n;
  }
  return z;
}

namespace {

// Kernel table T[m] = 2 pi^2 B2(m/n).
std::vector<double> merit_kernel(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t m = 0; m < n; ++m) {
    t[m] = 2.0 * kPi * kPi * bernoulli_b2(static_cast<double>(m) / static_cast<double>(n));
  }
  return t;
}

double merit_with_kernel(std::span<const std::uint64_t> z, std::size_t n, std::size_t s,
                         const MeritWeights& w, const std::vector<double>& kernel) {
  const std::size_t order = std::min(w.max_order, s);
  std::vector<double> e(order + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (order == s) {
      double prod = 1.0;
      for (std::size_t j = 0; j < s; ++j) prod *= 1.0 + w.rho * kernel[(i * z[j]) % n];
      total += prod - 1.0;
      continue;
    }
    // Elementary symmetric sums of rho * kernel values up to the order cap.
    std::fill(e.begin(), e.end(), 0.0);
    e[0] = 1.0;
    for (std::size_t j = 0; j < s; ++j) {
      const double t = w.rho * kernel[(i * z[j]) % n];
      for (std::size_t k = std::min(order, j + 1); k >= 1; --k) e[k] += t * e[k - 1];
    }
    for (std::size_t k = 1; k <= order; ++k) total += e[k];
  }
  return total / static_cast<double>(n);
}

}  // namespace

double p_alpha_merit(std::span<const std::uint64_t> z, std::size_t n, std::size_t s,
                     const MeritWeights& w) {
  if (n == 0) throw std::invalid_argument("p_alpha_merit: n must be positive");
  if (z.size() < s) throw std::invalid_argument("p_alpha_merit: generating vector too short");
  if (!(w.rho > 0.0 && w.rho <= 1.0)) throw std::invalid_argument("p_alpha_merit: rho outside (0,1]");
  return merit_with_kernel(z, n, s, w, merit_kernel(n));
}

std::uint64_t korobov_search(std::size_t n, std::size_t s, const MeritWeights& w,
                             std::size_t max_candidates) {
  if (n < 8) throw std::invalid_argument("korobov_search: n must be at least 8");
  if (!is_power_of_two(n)) throw std::invalid_argument("korobov_search: n must be a power of 2");
  if (s == 0 || s == kUnboundedDim) throw std::invalid_argument("korobov_search: finite s required");
  if (!(w.rho > 0.0 && w.rho <= 1.0)) throw std::invalid_argument("korobov_search: rho outside (0,1]");
  const auto kernel = merit_kernel(n);
  std::uint64_t best_a = 3;
  double best = std::numeric_limits<double>::infinity();
  const std::uint64_t count = (n / 2 - 2) / 2;  // odd a in [3, n/2)
  const std::uint64_t stride =
      max_candidates == 0 || count <= max_candidates ? 1 : (count + max_candidates - 1) / max_candidates;
  for (std::uint64_t a = 3; a < n / 2; a += 2 * stride) {
    const auto z = korobov_vector(n, a, s);
    const double m = merit_with_kernel(z, n, s, w, kernel);
    // Relative tolerance so symmetric candidates compare equal despite rounding.
    if (a == 3 || m < best - 1e-12 * std::abs(best)) {
      best = m;
      best_a = a;
    }
  }
  return best_a;
}

}  // namespace cde
