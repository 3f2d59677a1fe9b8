#pragma once

// Plain-text JSON checkpoint for a dense network: spec, row-major weights and
// biases in layer order, a variant tag and free-form training metadata.

#include <string>

#include <json.hpp>

#include "amdn/nnet.hpp"

namespace amdn {

inline constexpr const char* kCheckpointFormat = "amdn-checkpoint/1";

struct Checkpoint {
  std::string variant;
  NetworkParams<double> params;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace amdn
