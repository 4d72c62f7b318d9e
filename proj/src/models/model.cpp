#include "cde/models/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace cde {

namespace {

std::size_t index_of(const std::vector<std::string>& names, const std::string& v,
                     const std::string& model, const char* kind) {
  const auto it = std::find(names.begin(), names.end(), v);
  if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
  std::string options;
  for (const auto& n : names) options += (options.empty() ? "" : ", ") + n;
  throw std::invalid_argument("model '" + model + "' has no " + kind + " variant '" + v +
                              "' (expected one of: " + (options.empty() ? "none" : options) + ")");
}

}  // namespace

std::size_t ModelSpec::variant_index(const std::string& v) const {
  return index_of(variants, v, name, "CDE");
}

std::size_t ModelSpec::glr_index(const std::string& v) const {
  return index_of(glr_variants, v, name, "GLR");
}

void Model::set_interval(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("interval: need a < b");
  spec_.a = a;
  spec_.b = b;
}

void Model::unsupported(const std::string& what) const {
  throw std::invalid_argument("model '" + spec_.name + "' does not support " + what);
}

std::size_t Model::glr_dimension(std::size_t) const { unsupported("GLR estimation"); }
GlrSample Model::glr(std::size_t, PointCursor&) const { unsupported("GLR estimation"); }
std::size_t Model::sample_dimension() const { unsupported("plain sampling"); }
double Model::sample(PointCursor&) const { unsupported("plain sampling"); }
std::size_t Model::joint_dimension() const { unsupported("combined conditionings"); }
std::vector<ConditionalDensity> Model::joint(std::span<const std::size_t>, PointCursor&) const {
  unsupported("combined conditionings");
}
double Model::exact_density(double) const { unsupported("an exact density"); }
double Model::exact_variance(std::size_t, double) const { unsupported("an exact CDE variance"); }

ConditionalDensity zero_density(double weight) {
  return ConditionalDensity([](double) { return 0.0; }, [](double) { return 0.0; }, weight,
                            [](std::span<const double>, std::span<double>) {});
}

}  // namespace cde
