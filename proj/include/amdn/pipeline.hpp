#pragma once

// The end-to-end stages behind each CLI command, keyed off one RunConfig.
// Each stage draws from its own seed stream so stages can be rerun alone.

#include <cstdint>

#include "amdn/adversary.hpp"
#include "amdn/config.hpp"
#include "amdn/datasets.hpp"
#include "amdn/eval.hpp"
#include "amdn/trainer.hpp"

namespace amdn {

namespace streams {
inline constexpr std::uint64_t kExpertData = 10;
inline constexpr std::uint64_t kAdversaryPool = 20;
inline constexpr std::uint64_t kCollection = 21;
inline constexpr std::uint64_t kTraining = 30;
inline constexpr std::uint64_t kNaturalistic = 40;
inline constexpr std::uint64_t kAdversarial = 50;
}  // namespace streams

Dataset stage_expert_dataset(const RunConfig& config);

TrainResult stage_train(const RunConfig& config, const ModelVariant& variant, const Dataset& expert,
                        const Dataset* collisions);

/// Collision windows gathered by the adversary pool against `follower`.
Dataset stage_collisions(const RunConfig& config, const PedalPolicy& follower,
                         CollectionStats* stats = nullptr);

/// The first `scenarios` of the configured scenario set (all when <= 0).
ScenarioSet stage_scenarios(const RunConfig& config, int scenarios = 0);

NatResult stage_naturalistic(const RunConfig& config, const PedalPolicy& follower,
                             const ScenarioSet& scenarios, bool keep_logs = false);

AdvReport stage_adversarial(const RunConfig& config, const PedalPolicy& follower);

}  // namespace amdn
