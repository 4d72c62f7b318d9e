#include "cde/models/asian.hpp"
#include "cde/models/buckling.hpp"
#include "cde/models/cantilever.hpp"
#include "cde/models/failure.hpp"
#include "cde/models/model.hpp"
#include "cde/models/queue.hpp"
#include "cde/models/san.hpp"
#include "cde/models/simple.hpp"

#include <functional>
#include <map>
#include <stdexcept>

namespace cde {

namespace {

using Factory = std::function<std::unique_ptr<Model>(const nlohmann::json&)>;

const std::map<std::string, Factory>& factories() {
  static const std::map<std::string, Factory> table{
      {"asian", AsianModel::from_json},
      {"buckling", BucklingModel::from_json},
      {"cantilever", CantileverModel::from_json},
      {"failure", FailureModel::from_json},
      {"queue", QueueModel::from_json},
      {"san", SanModel::from_json},
      {"sum-normals", SumNormalsModel::from_json},
      {"sum-uniforms", SumUniformsModel::from_json},
  };
  return table;
}

}  // namespace

std::vector<std::string> model_names() {
  std::vector<std::string> names;
  for (const auto& [name, f] : factories()) names.push_back(name);
  return names;
}

std::unique_ptr<Model> make_model(const std::string& name, const nlohmann::json& params) {
  const auto& table = factories();
  const auto it = table.find(name);
  if (it == table.end()) {
    std::string options;
    for (const auto& [n, f] : table) options += (options.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown model '" + name + "' (expected one of: " + options + ")");
  }
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  if (!p.is_object()) throw std::invalid_argument("model parameters for '" + name + "' must be an object");
  auto model = it->second(p);
  if (p.contains("interval")) {
    const auto v = p.at("interval").get<std::vector<double>>();
    if (v.size() != 2) throw std::invalid_argument("'interval' needs two values [a, b]");
    model->set_interval(v[0], v[1]);
  }
  return model;
}

}  // namespace cde
