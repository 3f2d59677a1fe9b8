#pragma once

// Dense feed-forward network with hand-written reverse mode and Adam.
//
// Layers store weights as fan_in x fan_out so that a batch laid out one sample
// per row propagates as `X * W + b`. Hidden layers use ReLU; the output layer is
// linear and its raw values are handed to the head squashing in gaussian.hpp.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "amdn/types.hpp"

namespace amdn {

enum class Activation { kRelu, kTanh, kNnelu };

template <typename Scalar>
Scalar activate(Activation kind, Scalar x) {
  switch (kind) {
    case Activation::kRelu:
      return x > Scalar(0) ? x : Scalar(0);
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kNnelu:
      // ELU(alpha = 1) shifted up by one; strictly positive.
      return x >= Scalar(0) ? x + Scalar(1) : std::exp(x);
  }
  return x;
}

template <typename Scalar>
Scalar activate_derivative(Activation kind, Scalar x) {
  switch (kind) {
    case Activation::kRelu:
      return x > Scalar(0) ? Scalar(1) : Scalar(0);
    case Activation::kTanh: {
      const Scalar t = std::tanh(x);
      return Scalar(1) - t * t;
    }
    case Activation::kNnelu:
      return x >= Scalar(0) ? Scalar(1) : std::exp(x);
  }
  return Scalar(1);
}

struct NetworkSpec {
  int input_dim = 3;
  int hidden_layers = 3;
  int hidden_width = 50;
  int head_outputs = 4;

  void validate() const {
    if (input_dim < 1 || hidden_layers < 1 || hidden_width < 1 || head_outputs < 1) {
      throw std::invalid_argument("NetworkSpec: all counts must be >= 1");
    }
  }

  /// (fan_in, fan_out) of every dense layer, input to output.
  std::vector<std::pair<int, int>> layer_shapes() const {
    std::vector<std::pair<int, int>> shapes;
    shapes.emplace_back(input_dim, hidden_width);
    for (int i = 1; i < hidden_layers; ++i) shapes.emplace_back(hidden_width, hidden_width);
    shapes.emplace_back(hidden_width, head_outputs);
    return shapes;
  }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // fan_in x fan_out
  RowVector<Scalar> bias;  // 1 x fan_out
};

template <typename Scalar>
struct NetworkParams {
  NetworkSpec spec;
  std::vector<DenseLayer<Scalar>> layers;

  bool all_finite() const {
    for (const auto& layer : layers) {
      if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
    }
    return true;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
    return n;
  }
};

template <typename Scalar>
bool operator==(const NetworkParams<Scalar>& a, const NetworkParams<Scalar>& b) {
  if (!(a.spec == b.spec) || a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& la = a.layers[i];
    const auto& lb = b.layers[i];
    if (la.weights.rows() != lb.weights.rows() || la.weights.cols() != lb.weights.cols()) return false;
    if (la.bias.size() != lb.bias.size()) return false;
    if (la.weights != lb.weights || la.bias != lb.bias) return false;
  }
  return true;
}

/// Parameter-shaped accumulator used for gradients and Adam moments.
template <typename Scalar>
struct Gradients {
  std::vector<DenseLayer<Scalar>> layers;

  static Gradients zeros_like(const NetworkParams<Scalar>& params) {
    Gradients g;
    g.layers.reserve(params.layers.size());
    for (const auto& layer : params.layers) {
      g.layers.push_back({Matrix<Scalar>::Zero(layer.weights.rows(), layer.weights.cols()),
                          RowVector<Scalar>::Zero(layer.bias.size())});
    }
    return g;
  }

  Gradients& operator+=(const Gradients& other) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].weights += other.layers[i].weights;
      layers[i].bias += other.layers[i].bias;
    }
    return *this;
  }

  Gradients& operator*=(Scalar s) {
    for (auto& layer : layers) {
      layer.weights *= s;
      layer.bias *= s;
    }
    return *this;
  }

  bool all_finite() const {
    for (const auto& layer : layers) {
      if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
    }
    return true;
  }

  Scalar max_abs() const {
    Scalar m(0);
    for (const auto& layer : layers) {
      if (layer.weights.size() > 0) m = std::max(m, layer.weights.cwiseAbs().maxCoeff());
      if (layer.bias.size() > 0) m = std::max(m, layer.bias.cwiseAbs().maxCoeff());
    }
    return m;
  }
};

template <typename Scalar>
struct ForwardTrace {
  // inputs[l] feeds layer l; inputs[0] is the network input batch.
  std::vector<Matrix<Scalar>> inputs;
  std::vector<Matrix<Scalar>> pre_activations;

  /// Un-squashed head outputs, one row per batch sample.
  const Matrix<Scalar>& raw_heads() const { return pre_activations.back(); }
};

template <typename Scalar = double>
NetworkParams<Scalar> init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  NetworkParams<Scalar> params;
  params.spec = spec;
  for (const auto& [fan_in, fan_out] : spec.layer_shapes()) {
    const Scalar bound = std::sqrt(Scalar(6) / Scalar(fan_in + fan_out));
    std::uniform_real_distribution<Scalar> dist(-bound, bound);
    DenseLayer<Scalar> layer{Matrix<Scalar>(fan_in, fan_out), RowVector<Scalar>::Zero(fan_out)};
    for (int r = 0; r < fan_in; ++r) {
      for (int c = 0; c < fan_out; ++c) layer.weights(r, c) = dist(rng);
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

template <typename Scalar>
ForwardTrace<Scalar> forward(const NetworkParams<Scalar>& params, const Matrix<Scalar>& batch) {
  if (batch.cols() != params.spec.input_dim) {
    throw std::invalid_argument("forward: input has " + std::to_string(batch.cols()) +
                                " features, network expects " +
                                std::to_string(params.spec.input_dim));
  }
  ForwardTrace<Scalar> trace;
  const std::size_t n_layers = params.layers.size();
  trace.inputs.reserve(n_layers);
  trace.pre_activations.reserve(n_layers);
  trace.inputs.push_back(batch);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = params.layers[l];
    Matrix<Scalar> z = trace.inputs.back() * layer.weights;
    z.rowwise() += layer.bias;
    if (l + 1 < n_layers) trace.inputs.push_back(z.cwiseMax(Scalar(0)));
    trace.pre_activations.push_back(std::move(z));
  }
  return trace;
}

template <typename Scalar>
ForwardTrace<Scalar> forward(const NetworkParams<Scalar>& params, const Vector<Scalar>& input) {
  return forward(params, Matrix<Scalar>(input.transpose()));
}

/// Reverse-mode gradient of sum_{rows, k} head_grads(row, k) * raw_head(row, k) with
/// respect to every parameter. Batch rows are summed, not averaged.
template <typename Scalar>
Gradients<Scalar> backward(const NetworkParams<Scalar>& params, const ForwardTrace<Scalar>& trace,
                           const Matrix<Scalar>& head_grads) {
  const std::size_t n_layers = params.layers.size();
  if (trace.pre_activations.size() != n_layers || trace.inputs.size() != n_layers) {
    throw std::invalid_argument("backward: trace does not match network depth");
  }
  if (head_grads.cols() != params.spec.head_outputs ||
      head_grads.rows() != trace.raw_heads().rows()) {
    throw std::invalid_argument("backward: head gradient shape mismatch");
  }
  Gradients<Scalar> grads;
  grads.layers.resize(n_layers);
  Matrix<Scalar> delta = head_grads;
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = params.layers[l];
    grads.layers[l].weights.noalias() = trace.inputs[l].transpose() * delta;
    grads.layers[l].bias = delta.colwise().sum();
    if (l > 0) {
      Matrix<Scalar> upstream = delta * layer.weights.transpose();
      const auto& z = trace.pre_activations[l - 1];
      delta = upstream.cwiseProduct(
          z.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
    }
  }
  return grads;
}

template <typename Scalar>
Gradients<Scalar> backward(const NetworkParams<Scalar>& params, const ForwardTrace<Scalar>& trace,
                           const Vector<Scalar>& head_grads) {
  return backward(params, trace, Matrix<Scalar>(head_grads.transpose()));
}

template <typename Scalar>
struct AdamState {
  Gradients<Scalar> first_moment;
  Gradients<Scalar> second_moment;
  std::int64_t step = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  static AdamState for_params(const NetworkParams<Scalar>& params) {
    AdamState state;
    state.first_moment = Gradients<Scalar>::zeros_like(params);
    state.second_moment = Gradients<Scalar>::zeros_like(params);
    return state;
  }
};

/// One bias-corrected Adam update, applied in place.
template <typename Scalar>
void adam_step(NetworkParams<Scalar>& params, const Gradients<Scalar>& grads,
               AdamState<Scalar>& state, Scalar lr) {
  if (grads.layers.size() != params.layers.size() ||
      state.first_moment.layers.size() != params.layers.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  ++state.step;
  const Scalar t = static_cast<Scalar>(state.step);
  const Scalar correction1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar correction2 = Scalar(1) - std::pow(state.beta2, t);
  const Scalar b1 = state.beta1;
  const Scalar b2 = state.beta2;
  const Scalar eps = state.epsilon;

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = b1 * m + (Scalar(1) - b1) * grad;
    v = b2 * v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
    param -= (lr * (m / correction1).array() /
              ((v / correction2).array().sqrt() + eps))
                 .matrix();
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weights, grads.layers[l].weights,
           state.first_moment.layers[l].weights, state.second_moment.layers[l].weights);
    update(params.layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias);
  }
}

}  // namespace amdn
