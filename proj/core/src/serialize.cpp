#include "hcl/serialize.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hcl/io.hpp"
#include "hcl/rng.hpp"

namespace hcl {

namespace {
constexpr int kFormatVersion = 1;
}

std::string serialize_model(const FlowModel& model,
                            const TaskRegistry& registry) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  const FlowConfig& fc = model.config();
  j["flow"] = {{"dim", fc.dim},
               {"num_layers", fc.num_layers},
               {"hidden", fc.hidden},
               {"scale_clamp", fc.scale_clamp},
               {"mask_scheme", "alternating_even_odd"}};
  const Eigen::VectorXd theta = model.get_params();
  j["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());

  const RegistryConfig& rc = registry.config();
  nlohmann::json reg;
  reg["classes_per_task"] = rc.classes_per_task;
  reg["dim"] = rc.dim;
  reg["mean_scale"] = rc.mean_scale;
  reg["min_separation"] = rc.min_separation;
  reg["retry_budget"] = rc.retry_budget;
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& task : registry.tasks()) {
    nlohmann::json means = nlohmann::json::array();
    for (const auto& mu : task) {
      means.push_back(std::vector<double>(mu.data(), mu.data() + mu.size()));
    }
    tasks.push_back(means);
  }
  reg["tasks"] = tasks;
  j["registry"] = reg;
  return j.dump();
}

DeserializedModel deserialize_model(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("unsupported model format version");
  }
  FlowConfig fc;
  fc.dim = j.at("flow").at("dim").get<int>();
  fc.num_layers = j.at("flow").at("num_layers").get<int>();
  fc.hidden = j.at("flow").at("hidden").get<std::vector<int>>();
  fc.scale_clamp = j.at("flow").at("scale_clamp").get<double>();

  Rng dummy(0);
  FlowModel model = FlowModel::create(fc, dummy);
  const auto theta_v = j.at("theta").get<std::vector<double>>();
  if (static_cast<int>(theta_v.size()) != model.num_params()) {
    throw std::runtime_error("theta size mismatch in model file");
  }
  Eigen::VectorXd theta =
      Eigen::Map<const Eigen::VectorXd>(theta_v.data(), theta_v.size());
  model.set_params(theta);

  const auto& reg = j.at("registry");
  RegistryConfig rc;
  rc.classes_per_task = reg.at("classes_per_task").get<int>();
  rc.dim = reg.at("dim").get<int>();
  rc.mean_scale = reg.at("mean_scale").get<double>();
  rc.min_separation = reg.at("min_separation").get<double>();
  rc.retry_budget = reg.at("retry_budget").get<int>();
  TaskRegistry registry(rc);
  for (const auto& task : reg.at("tasks")) {
    std::vector<Eigen::VectorXd> means;
    for (const auto& mu : task) {
      const auto v = mu.get<std::vector<double>>();
      means.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
    }
    registry.append_task_means(std::move(means));
  }
  return {std::move(model), std::move(registry)};
}

void save_model(const std::string& path, const FlowModel& model,
                const TaskRegistry& registry) {
  atomic_write(path, serialize_model(model, registry));
}

DeserializedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return deserialize_model(text);
}

}  // namespace hcl
