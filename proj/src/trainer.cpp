#include "amdn/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "amdn/format.hpp"

namespace amdn {

std::string_view to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::kFfn:
      return "ffn";
    case ModelTag::kMdn:
      return "mdn";
    case ModelTag::kAmdnNoKl:
      return "amdn_nokl";
    case ModelTag::kAmdn:
      return "amdn";
  }
  return "amdn";
}

std::string_view to_string(InferenceMode mode) {
  return mode == InferenceMode::kMean ? "mean" : "sampling";
}

ModelTag model_tag_from_string(std::string_view name) {
  if (name == "ffn") return ModelTag::kFfn;
  if (name == "mdn") return ModelTag::kMdn;
  if (name == "amdn_nokl" || name == "amdn-nokl") return ModelTag::kAmdnNoKl;
  if (name == "amdn") return ModelTag::kAmdn;
  throw std::invalid_argument("unknown model variant: " + std::string(name));
}

InferenceMode inference_mode_from_string(std::string_view name) {
  if (name == "mean") return InferenceMode::kMean;
  if (name == "sampling") return InferenceMode::kSampling;
  throw std::invalid_argument("unknown inference mode: " + std::string(name));
}

int head_outputs(ModelTag tag) {
  switch (tag) {
    case ModelTag::kFfn:
      return 1;
    case ModelTag::kMdn:
      return 2;
    default:
      return 4;
  }
}

bool uses_collisions(ModelTag tag) { return tag == ModelTag::kAmdnNoKl || tag == ModelTag::kAmdn; }

std::string ModelVariant::label() const {
  switch (tag) {
    case ModelTag::kFfn:
      return "FFN";
    case ModelTag::kMdn:
      return inference == InferenceMode::kSampling ? "MDN (sampling)" : "MDN";
    case ModelTag::kAmdnNoKl:
      return inference == InferenceMode::kSampling ? "AMDN (w/o D_KL, sampling)" : "AMDN (w/o D_KL)";
    case ModelTag::kAmdn:
      return inference == InferenceMode::kSampling ? "AMDN (sampling)" : "AMDN";
  }
  return "AMDN";
}

void Hyperparams::validate() const {
  if (eta_s < 0.0 || eta_c < 0.0 || eta_kl < 0.0) {
    throw std::invalid_argument("Hyperparams: learning rates must be non-negative");
  }
  if (batch_size < 1) throw std::invalid_argument("Hyperparams: batch_size must be >= 1");
  if (training_steps < 0) throw std::invalid_argument("Hyperparams: training_steps must be >= 0");
  if (log_interval < 1) throw std::invalid_argument("Hyperparams: log_interval must be >= 1");
  trunk.validate();
}

nlohmann::json to_json(const Hyperparams& h) {
  return {{"eta_s", h.eta_s},
          {"eta_c", h.eta_c},
          {"eta_kl", h.eta_kl},
          {"batch_size", h.batch_size},
          {"training_steps", h.training_steps},
          {"log_interval", h.log_interval},
          {"seed", h.seed},
          {"hidden_layers", h.trunk.hidden_layers},
          {"hidden_width", h.trunk.hidden_width}};
}

Hyperparams hyperparams_from_json(const nlohmann::json& j, Hyperparams h) {
  h.eta_s = j.value("eta_s", h.eta_s);
  h.eta_c = j.value("eta_c", h.eta_c);
  h.eta_kl = j.value("eta_kl", h.eta_kl);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.training_steps = j.value("training_steps", h.training_steps);
  h.log_interval = j.value("log_interval", h.log_interval);
  h.seed = j.value("seed", h.seed);
  h.trunk.hidden_layers = j.value("hidden_layers", h.trunk.hidden_layers);
  h.trunk.hidden_width = j.value("hidden_width", h.trunk.hidden_width);
  h.validate();
  return h;
}

AmdnOptimizers AmdnOptimizers::for_params(const NetworkParams<double>& params) {
  return {AdamState<double>::for_params(params), AdamState<double>::for_params(params),
          AdamState<double>::for_params(params)};
}

double nll_head_grads(const MatrixXd& raw, const VectorXd& actions, int mu_column,
                      MatrixXd& head_grads) {
  const Eigen::Index n = raw.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r_mu = raw(i, mu_column);
    const double r_var = raw(i, mu_column + 1);
    const GaussParams g = squash_gaussian(r_mu, r_var);
    total += nll(g, actions(i));
    const GaussGrad d = unsquash_grad(r_mu, r_var, nll_grads(g, actions(i)));
    head_grads(i, mu_column) = d.d_mu * inv_n;
    head_grads(i, mu_column + 1) = d.d_var * inv_n;
  }
  return total * inv_n;
}

double neg_kl_head_grads(const MatrixXd& raw, MatrixXd& head_grads) {
  const Eigen::Index n = raw.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const GaussParams safe = squash_gaussian(raw(i, 0), raw(i, 1));
    const GaussParams unsafe = squash_gaussian(raw(i, 2), raw(i, 3));
    total += kl_gauss(safe, unsafe);
    const GaussGrad d = unsquash_grad(raw(i, 0), raw(i, 1), kl_grads_p(safe, unsafe));
    head_grads(i, 0) = -d.d_mu * inv_n;
    head_grads(i, 1) = -d.d_var * inv_n;
  }
  return total * inv_n;
}

double mse_head_grads(const MatrixXd& raw, const VectorXd& actions, MatrixXd& head_grads) {
  const Eigen::Index n = raw.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = std::tanh(raw(i, 0));
    const double err = y - actions(i);
    total += err * err;
    head_grads(i, 0) = 2.0 * err * (1.0 - y * y) * inv_n;
  }
  return total * inv_n;
}

namespace {

void require_finite(double loss, const char* name, const Batch& batch) {
  if (!std::isfinite(loss)) {
    throw NonFiniteLossError(std::string("non-finite ") + name + " loss", batch);
  }
}

double mean_kl_rows(const MatrixXd& raw) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    total += kl_gauss(squash_gaussian(raw(i, 0), raw(i, 1)), squash_gaussian(raw(i, 2), raw(i, 3)));
  }
  return raw.rows() > 0 ? total / static_cast<double>(raw.rows()) : 0.0;
}

}  // namespace

StepLosses train_step_amdn(NetworkParams<double>& params, AmdnOptimizers& optimizers,
                           const Batch& expert, const Batch& collision, const Hyperparams& hyper,
                           bool with_kl) {
  if (params.spec.head_outputs != 4) throw std::invalid_argument("train_step_amdn: need 4 heads");
  StepLosses losses;
  {
    const auto trace = forward(params, expert.features);
    MatrixXd head_grads = MatrixXd::Zero(trace.raw_heads().rows(), 4);
    losses.nll_s = nll_head_grads(trace.raw_heads(), expert.actions, 0, head_grads);
    require_finite(losses.nll_s, "NLL_s", expert);
    adam_step(params, backward(params, trace, head_grads), optimizers.safe, hyper.eta_s);
  }
  {
    const auto trace = forward(params, collision.features);
    MatrixXd head_grads = MatrixXd::Zero(trace.raw_heads().rows(), 4);
    losses.nll_c = nll_head_grads(trace.raw_heads(), collision.actions, 2, head_grads);
    require_finite(losses.nll_c, "NLL_c", collision);
    if (!with_kl) losses.kl = mean_kl_rows(trace.raw_heads());
    adam_step(params, backward(params, trace, head_grads), optimizers.unsafe, hyper.eta_c);
  }
  if (with_kl) {
    const auto trace = forward(params, collision.features);
    MatrixXd head_grads = MatrixXd::Zero(trace.raw_heads().rows(), 4);
    losses.kl = neg_kl_head_grads(trace.raw_heads(), head_grads);
    require_finite(losses.kl, "D_KL", collision);
    adam_step(params, backward(params, trace, head_grads), optimizers.kl, hyper.eta_kl);
  }
  return losses;
}

double train_step_mdn(NetworkParams<double>& params, AdamState<double>& optimizer,
                      const Batch& expert, double lr) {
  const auto trace = forward(params, expert.features);
  MatrixXd head_grads = MatrixXd::Zero(trace.raw_heads().rows(), params.spec.head_outputs);
  const double loss = nll_head_grads(trace.raw_heads(), expert.actions, 0, head_grads);
  require_finite(loss, "NLL_s", expert);
  adam_step(params, backward(params, trace, head_grads), optimizer, lr);
  return loss;
}

double train_step_ffn(NetworkParams<double>& params, AdamState<double>& optimizer,
                      const Batch& expert, double lr) {
  const auto trace = forward(params, expert.features);
  MatrixXd head_grads = MatrixXd::Zero(trace.raw_heads().rows(), params.spec.head_outputs);
  const double loss = mse_head_grads(trace.raw_heads(), expert.actions, head_grads);
  require_finite(loss, "MSE", expert);
  adam_step(params, backward(params, trace, head_grads), optimizer, lr);
  return loss;
}

void write_train_log(const TrainLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open train log for writing: " + path);
  out << kTrainLogHeader << '\n';
  for (const auto& e : log.entries) {
    out << e.step << ',' << format_double(e.nll_s) << ',' << format_double(e.nll_c) << ','
        << format_double(e.kl) << ',' << format_double(e.val_nll_s) << ','
        << format_double(e.val_kl) << '\n';
  }
}

Checkpoint to_checkpoint(const Model& model) {
  Checkpoint ckpt;
  ckpt.variant = std::string(to_string(model.variant.tag));
  ckpt.params = model.params;
  ckpt.metadata = model.metadata;
  ckpt.metadata["inference"] = std::string(to_string(model.variant.inference));
  return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model model;
  model.variant.tag = model_tag_from_string(ckpt.variant);
  model.variant.inference =
      inference_mode_from_string(ckpt.metadata.value("inference", std::string("mean")));
  model.params = ckpt.params;
  model.metadata = ckpt.metadata;
  if (model.params.spec.head_outputs != head_outputs(model.variant.tag) ||
      model.params.spec.input_dim != 3) {
    throw std::runtime_error("checkpoint: network shape does not match variant " + ckpt.variant);
  }
  return model;
}

void save_model(const Model& model, const std::string& path) {
  save_checkpoint(to_checkpoint(model), path);
}

Model load_model(const std::string& path) { return model_from_checkpoint(load_checkpoint(path)); }

namespace {

Batch gather(const MatrixXd& features, const VectorXd& actions,
             const std::vector<Eigen::Index>& rows) {
  return {features(rows, Eigen::all), actions(rows)};
}

struct Pool {
  MatrixXd features;
  VectorXd actions;
};

Pool make_pool(const Dataset& ds, const std::vector<std::size_t>& indices) {
  return {feature_matrix(ds, indices), action_vector(ds, indices)};
}

double validation_nll(const NetworkParams<double>& params, const Pool& pool) {
  const auto trace = forward(params, pool.features);
  MatrixXd scratch = MatrixXd::Zero(trace.raw_heads().rows(), params.spec.head_outputs);
  return nll_head_grads(trace.raw_heads(), pool.actions, 0, scratch);
}

double validation_mse(const NetworkParams<double>& params, const Pool& pool) {
  const auto trace = forward(params, pool.features);
  const VectorXd y = trace.raw_heads().col(0).array().tanh();
  return (y - pool.actions).squaredNorm() / static_cast<double>(pool.actions.size());
}

}  // namespace

TrainResult train(const ModelVariant& variant, const Dataset& expert, const Dataset* collisions,
                  const Hyperparams& hyper) {
  hyper.validate();
  expert.validate_for_training();
  const bool need_collisions = uses_collisions(variant.tag);
  if (need_collisions) {
    if (collisions == nullptr || collisions->empty()) {
      throw std::invalid_argument("variant " + std::string(to_string(variant.tag)) +
                                  " requires the collisions dataset");
    }
    collisions->validate_for_training();
  }

  const Split expert_split = split_80_20(expert, derive_seed(hyper.seed, 1));
  const Pool expert_train = make_pool(expert, expert_split.train);
  const Pool expert_val = make_pool(expert, expert_split.validation);
  if (static_cast<std::size_t>(hyper.batch_size) > expert_split.train.size()) {
    throw std::invalid_argument("batch_size exceeds the expert training split");
  }
  Pool collision_train;
  Pool collision_val;
  if (need_collisions) {
    const Split split = split_80_20(*collisions, derive_seed(hyper.seed, 2));
    collision_train = make_pool(*collisions, split.train);
    collision_val = make_pool(*collisions, split.validation);
    if (static_cast<std::size_t>(hyper.batch_size) > split.train.size()) {
      throw std::invalid_argument("batch_size exceeds the collision training split");
    }
  }

  NetworkSpec spec = hyper.trunk;
  spec.input_dim = 3;
  spec.head_outputs = head_outputs(variant.tag);
  NetworkParams<double> params = init_network<double>(spec, derive_seed(hyper.seed, 3));
  AmdnOptimizers optimizers = AmdnOptimizers::for_params(params);

  Rng batch_rng(derive_seed(hyper.seed, 4));
  auto draw_rows = [&](Eigen::Index pool_size) {
    std::uniform_int_distribution<Eigen::Index> pick(0, pool_size - 1);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(hyper.batch_size));
    for (auto& r : rows) r = pick(batch_rng);
    return rows;
  };

  auto validate = [&](const NetworkParams<double>& p, TrainLogEntry& entry) {
    if (variant.tag == ModelTag::kFfn) {
      entry.val_nll_s = validation_mse(p, expert_val);
    } else {
      entry.val_nll_s = validation_nll(p, expert_val);
    }
    if (need_collisions && collision_val.features.rows() > 0) {
      entry.val_kl = mean_kl_rows(forward(p, collision_val.features).raw_heads());
    }
  };

  TrainResult result;
  NetworkParams<double> best = params;
  double best_val = std::numeric_limits<double>::infinity();
  std::int64_t best_step = 0;
  StepLosses interval{};
  std::int64_t interval_steps = 0;

  for (std::int64_t s = 1; s <= hyper.training_steps; ++s) {
    const Batch expert_batch =
        gather(expert_train.features, expert_train.actions, draw_rows(expert_train.features.rows()));
    StepLosses losses;
    switch (variant.tag) {
      case ModelTag::kFfn:
        losses.nll_s = train_step_ffn(params, optimizers.safe, expert_batch, hyper.eta_s);
        break;
      case ModelTag::kMdn:
        losses.nll_s = train_step_mdn(params, optimizers.safe, expert_batch, hyper.eta_s);
        break;
      case ModelTag::kAmdnNoKl:
      case ModelTag::kAmdn: {
        const Batch collision_batch = gather(collision_train.features, collision_train.actions,
                                             draw_rows(collision_train.features.rows()));
        losses = train_step_amdn(params, optimizers, expert_batch, collision_batch, hyper,
                                 variant.tag == ModelTag::kAmdn);
        break;
      }
    }
    interval.nll_s += losses.nll_s;
    interval.nll_c += losses.nll_c;
    interval.kl += losses.kl;
    ++interval_steps;

    if (s % hyper.log_interval == 0 || s == hyper.training_steps) {
      TrainLogEntry entry;
      entry.step = s;
      const double inv = 1.0 / static_cast<double>(interval_steps);
      entry.nll_s = interval.nll_s * inv;
      entry.nll_c = interval.nll_c * inv;
      entry.kl = interval.kl * inv;
      validate(params, entry);
      if (!std::isfinite(entry.val_nll_s)) {
        throw NonFiniteLossError("non-finite validation loss at step " + std::to_string(s),
                                 Batch{expert_val.features, expert_val.actions});
      }
      if (entry.val_nll_s < best_val) {
        best_val = entry.val_nll_s;
        best = params;
        best_step = s;
      }
      result.log.entries.push_back(entry);
      interval = {};
      interval_steps = 0;
    }
  }
  if (hyper.training_steps == 0) {
    TrainLogEntry entry;
    validate(params, entry);
    best_val = entry.val_nll_s;
    result.log.entries.push_back(entry);
  }

  result.log.best_step = best_step;
  result.log.best_validation = best_val;
  result.model.variant = variant;
  result.model.params = std::move(best);
  result.model.metadata = {
      {"seed", hyper.seed},
      {"steps", hyper.training_steps},
      {"best_step", best_step},
      {"best_validation", best_val},
      {"validation_metric", variant.tag == ModelTag::kFfn ? "mse" : "nll_s"},
      {"hyperparams", to_json(hyper)},
      {"feature_scale", kFeatureScale},
      {"kl_gradient_path", "safe head and shared trunk; unsafe head detached"},
  };
  return result;
}

VectorXd raw_heads(const Model& model, const Observation& obs) {
  const Eigen::Vector3d x = normalize(obs);
  const auto& layers = model.params.layers;
  RowVectorXd h = x.transpose();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    RowVectorXd z = h * layers[l].weights + layers[l].bias;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h.transpose();
}

GaussParams safe_distribution(const Model& model, const Observation& obs) {
  if (model.variant.tag == ModelTag::kFfn) {
    throw std::invalid_argument("safe_distribution: ffn has no distribution head");
  }
  const VectorXd raw = raw_heads(model, obs);
  return squash_gaussian(raw(0), raw(1));
}

double infer_pedal(const Model& model, const Observation& obs, InferenceMode mode, Rng& rng) {
  const VectorXd raw = raw_heads(model, obs);
  if (model.variant.tag == ModelTag::kFfn) return std::tanh(raw(0));
  const GaussParams safe = squash_gaussian(raw(0), raw(1));
  if (mode == InferenceMode::kSampling) return sample(safe, rng);
  return safe.mu;
}

PedalPolicy make_model_policy(Model model, InferenceMode mode) {
  return [model = std::move(model), mode](const Observation& obs, Rng& rng) {
    return infer_pedal(model, obs, mode, rng);
  };
}

double mean_kl(const Model& model, const MatrixXd& features) {
  if (!uses_collisions(model.variant.tag)) {
    throw std::invalid_argument("mean_kl: variant has no unsafe head");
  }
  return mean_kl_rows(forward(model.params, features).raw_heads());
}

}  // namespace amdn
