#include "amdn/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace amdn {

nlohmann::json to_json(const NetworkSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"hidden_layers", spec.hidden_layers},
          {"hidden_width", spec.hidden_width},
          {"head_outputs", spec.head_outputs}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  j.at("input_dim").get_to(spec.input_dim);
  j.at("hidden_layers").get_to(spec.hidden_layers);
  j.at("hidden_width").get_to(spec.hidden_width);
  j.at("head_outputs").get_to(spec.head_outputs);
  spec.validate();
  return spec;
}

nlohmann::json to_json(const Checkpoint& ckpt) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : ckpt.params.layers) {
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) weights.push_back(layer.weights(r, c));
    }
    std::vector<double> bias(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back({{"rows", layer.weights.rows()},
                      {"cols", layer.weights.cols()},
                      {"weights", std::move(weights)},
                      {"bias", std::move(bias)}});
  }
  return {{"format", kCheckpointFormat},
          {"variant", ckpt.variant},
          {"spec", to_json(ckpt.params.spec)},
          {"layers", std::move(layers)},
          {"metadata", ckpt.metadata}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != kCheckpointFormat) {
    throw std::runtime_error("checkpoint: unsupported or missing format tag");
  }
  Checkpoint ckpt;
  ckpt.variant = j.at("variant").get<std::string>();
  ckpt.params.spec = network_spec_from_json(j.at("spec"));
  ckpt.metadata = j.value("metadata", nlohmann::json::object());
  const auto shapes = ckpt.params.spec.layer_shapes();
  const auto& layers = j.at("layers");
  if (layers.size() != shapes.size()) throw std::runtime_error("checkpoint: layer count mismatch");
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto [fan_in, fan_out] = shapes[l];
    const auto& jl = layers[l];
    const auto weights = jl.at("weights").get<std::vector<double>>();
    const auto bias = jl.at("bias").get<std::vector<double>>();
    if (jl.at("rows").get<int>() != fan_in || jl.at("cols").get<int>() != fan_out ||
        weights.size() != static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out) ||
        bias.size() != static_cast<std::size_t>(fan_out)) {
      throw std::runtime_error("checkpoint: layer " + std::to_string(l) + " shape mismatch");
    }
    DenseLayer<double> layer{MatrixXd(fan_in, fan_out), RowVectorXd(fan_out)};
    for (int r = 0; r < fan_in; ++r) {
      for (int c = 0; c < fan_out; ++c) layer.weights(r, c) = weights[static_cast<std::size_t>(r * fan_out + c)];
    }
    for (int c = 0; c < fan_out; ++c) layer.bias(c) = bias[static_cast<std::size_t>(c)];
    ckpt.params.layers.push_back(std::move(layer));
  }
  if (!ckpt.params.all_finite()) throw std::runtime_error("checkpoint: non-finite parameters");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << to_json(ckpt).dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace amdn
