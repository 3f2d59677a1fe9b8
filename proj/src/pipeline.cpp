#include "amdn/pipeline.hpp"

namespace amdn {

Dataset stage_expert_dataset(const RunConfig& config) {
  ExpertDataConfig data = config.expert_data;
  data.transitions = config.expert_transitions();
  return generate_expert_dataset(config.sim, config.expert, data,
                                 derive_seed(config.seed, streams::kExpertData));
}

TrainResult stage_train(const RunConfig& config, const ModelVariant& variant, const Dataset& expert,
                        const Dataset* collisions) {
  Hyperparams hyper = config.trainer;
  hyper.seed = derive_seed(config.seed, streams::kTraining);
  return train(variant, expert, collisions, hyper);
}

Dataset stage_collisions(const RunConfig& config, const PedalPolicy& follower, CollectionStats* stats) {
  CollectionConfig collection = config.collection;
  collection.n_collisions = config.collision_count();
  auto pool = make_adversary_pool(collection, config.adversary,
                                  derive_seed(config.seed, streams::kAdversaryPool));
  return collect_collision_dataset(pool, follower, collection, config.sim,
                                   derive_seed(config.seed, streams::kCollection), stats);
}

ScenarioSet stage_scenarios(const RunConfig& config, int scenarios) {
  ScenarioSet set = make_scenario_set(config.naturalistic.scenario_seed, config.naturalistic.scenarios);
  if (scenarios > 0 && static_cast<std::size_t>(scenarios) < set.profiles.size()) {
    set.profiles.resize(static_cast<std::size_t>(scenarios));
  }
  return set;
}

NatResult stage_naturalistic(const RunConfig& config, const PedalPolicy& follower,
                             const ScenarioSet& scenarios, bool keep_logs) {
  return run_naturalistic(follower, scenarios, config.sim,
                          derive_seed(config.seed, streams::kNaturalistic), keep_logs);
}

AdvReport stage_adversarial(const RunConfig& config, const PedalPolicy& follower) {
  AdvTestConfig test = config.adversarial;
  test.adversary = config.adversary;
  return run_adversarial(follower, test, config.sim, derive_seed(config.seed, streams::kAdversarial));
}

}  // namespace amdn
