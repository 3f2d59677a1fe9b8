#pragma once

// Training of the four follower variants:
//   ffn        tanh regression head, mean squared error on expert actions
//   mdn        one Gaussian, NLL on expert actions
//   amdn_nokl  safe Gaussian on expert data + unsafe Gaussian on collision data
//   amdn       as amdn_nokl, plus maximizing D_KL(safe || unsafe) on collision states
//
// All variants share the 3x50 ReLU trunk. Each loss owns an Adam optimizer and is
// applied as its own sequential sub-update with its own learning rate.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "amdn/checkpoint.hpp"
#include "amdn/datasets.hpp"
#include "amdn/gaussian.hpp"
#include "amdn/nnet.hpp"
#include "amdn/policy.hpp"

namespace amdn {

enum class ModelTag { kFfn, kMdn, kAmdnNoKl, kAmdn };
enum class InferenceMode { kMean, kSampling };

std::string_view to_string(ModelTag tag);
std::string_view to_string(InferenceMode mode);
/// Accepts both `amdn_nokl` and the CLI spelling `amdn-nokl`.
ModelTag model_tag_from_string(std::string_view name);
InferenceMode inference_mode_from_string(std::string_view name);

/// Number of raw outputs the network carries for a variant.
int head_outputs(ModelTag tag);
bool uses_collisions(ModelTag tag);

struct ModelVariant {
  ModelTag tag = ModelTag::kAmdn;
  InferenceMode inference = InferenceMode::kMean;  // ignored for ffn

  /// Table column label, e.g. "AMDN (sampling)".
  std::string label() const;
};

struct Hyperparams {
  double eta_s = 1e-4;
  double eta_c = 1e-5;
  double eta_kl = 1e-9;
  int batch_size = 100;
  std::int64_t training_steps = 100000;
  std::int64_t log_interval = 1000;
  std::uint64_t seed = 0;
  NetworkSpec trunk{3, 3, 50, 4};  // head_outputs is overridden per variant

  void validate() const;
};

nlohmann::json to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(const nlohmann::json& j, Hyperparams defaults = {});

/// Batch-mean losses of one training step.
struct StepLosses {
  double nll_s = 0.0;
  double nll_c = 0.0;
  double kl = 0.0;
};

struct AmdnOptimizers {
  AdamState<double> safe;
  AdamState<double> unsafe;
  AdamState<double> kl;

  static AmdnOptimizers for_params(const NetworkParams<double>& params);
};

/// A training batch: normalized features (one row per sample) and labels.
struct Batch {
  MatrixXd features;
  VectorXd actions;
};

/// Raised when a loss turns non-finite; carries the offending batch.
class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(const std::string& what, Batch batch)
      : std::runtime_error(what), batch_(std::move(batch)) {}
  const Batch& batch() const { return batch_; }

 private:
  Batch batch_;
};

// Per-loss head gradients. Each fills `head_grads` (batch x heads, zeroed by the
// caller) with d(batch-mean loss)/d(raw head) and returns the batch-mean loss.
double nll_head_grads(const MatrixXd& raw, const VectorXd& actions, int mu_column,
                      MatrixXd& head_grads);
/// Gradient of -D_KL(safe || unsafe); unsafe columns are left untouched (detached).
double neg_kl_head_grads(const MatrixXd& raw, MatrixXd& head_grads);
double mse_head_grads(const MatrixXd& raw, const VectorXd& actions, MatrixXd& head_grads);

/// One AMDN step: NLL_s on the expert batch with eta_s, NLL_c on the collision
/// batch with eta_c, then -D_KL on collision states with eta_kl. Each sub-update
/// re-runs the forward pass on the current parameters.
StepLosses train_step_amdn(NetworkParams<double>& params, AmdnOptimizers& optimizers,
                           const Batch& expert, const Batch& collision, const Hyperparams& hyper,
                           bool with_kl = true);

/// Single-loss steps for the baselines.
double train_step_mdn(NetworkParams<double>& params, AdamState<double>& optimizer,
                      const Batch& expert, double lr);
double train_step_ffn(NetworkParams<double>& params, AdamState<double>& optimizer,
                      const Batch& expert, double lr);

struct TrainLogEntry {
  std::int64_t step = 0;
  double nll_s = 0.0;  // interval mean; MSE for ffn
  double nll_c = 0.0;
  double kl = 0.0;
  double val_nll_s = 0.0;  // MSE for ffn
  double val_kl = 0.0;     // on collision validation states, 0 if absent
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  std::int64_t best_step = 0;
  double best_validation = 0.0;
};

inline constexpr const char* kTrainLogHeader = "step,nll_s,nll_c,kl,val_nll_s,val_kl";
void write_train_log(const TrainLog& log, const std::string& path);

/// A trained follower.
struct Model {
  ModelVariant variant;
  NetworkParams<double> params;
  nlohmann::json metadata = nlohmann::json::object();
};

Checkpoint to_checkpoint(const Model& model);
Model model_from_checkpoint(const Checkpoint& ckpt);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

struct TrainResult {
  Model model;  // best validation checkpoint
  TrainLog log;
};

/// Full training run. `collisions` is required for the amdn variants.
TrainResult train(const ModelVariant& variant, const Dataset& expert, const Dataset* collisions,
                  const Hyperparams& hyper);

/// Raw head outputs for one observation.
VectorXd raw_heads(const Model& model, const Observation& obs);

/// Safe (or only) Gaussian for the observation; not meaningful for ffn.
GaussParams safe_distribution(const Model& model, const Observation& obs);

/// Pedal command: mu_safe in mean mode, a clipped draw in sampling mode,
/// the tanh output for ffn.
double infer_pedal(const Model& model, const Observation& obs, InferenceMode mode, Rng& rng);

PedalPolicy make_model_policy(Model model, InferenceMode mode);

/// Mean D_KL(safe || unsafe) over the given states (amdn variants only).
double mean_kl(const Model& model, const MatrixXd& features);

}  // namespace amdn
