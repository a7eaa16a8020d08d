#pragma once

#include <string>

#include "hcl/flow.hpp"
#include "hcl/mixture.hpp"

namespace hcl {

/// Versioned JSON container holding the flow (shape, clamp, mask scheme,
/// theta) and the registry (K, D, all means). Round-trips bit-exactly:
/// doubles are emitted with shortest round-trip formatting.
std::string serialize_model(const FlowModel& model,
                            const TaskRegistry& registry);

struct DeserializedModel {
  FlowModel model;
  TaskRegistry registry;
};

DeserializedModel deserialize_model(const std::string& text);

void save_model(const std::string& path, const FlowModel& model,
                const TaskRegistry& registry);
DeserializedModel load_model(const std::string& path);

}  // namespace hcl
