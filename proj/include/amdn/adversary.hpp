#pragma once

// Reinforcement-learning lead vehicle that tries to make the follower crash.
//
// One-step advantage actor-critic. The actor emits a Gaussian over a normalized
// action u in [-1, 1] that maps affinely onto [a_min, a_max]; the critic is a
// scalar state-value network. Rewards are the inverse follower headway, capped.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "amdn/datasets.hpp"
#include "amdn/gaussian.hpp"
#include "amdn/nnet.hpp"
#include "amdn/policy.hpp"
#include "amdn/simulator.hpp"

namespace amdn {

struct AdvConstraints {
  double v_min = 12.0;
  double v_max = 30.0;
  double a_min = -6.0;
  double a_max = 2.0;

  void validate() const;
};

struct AdvConfig {
  NetworkSpec actor{3, 2, 32, 2};
  NetworkSpec critic{3, 2, 32, 1};
  double gamma = 0.99;
  double lr_actor = 1e-3;
  double lr_critic = 3e-3;
  double entropy_weight = 1e-3;
  double reward_scale = 0.01;         // learning signal only; reported returns are unscaled
  std::int64_t episode_steps = 1500;  // 60 s
  int action_repeat = 10;             // sim steps per decision; rewards summed over the hold

  void validate() const;
};

nlohmann::json to_json(const AdvConfig& c);
AdvConfig adv_config_from_json(const nlohmann::json& j, AdvConfig defaults = {});

struct AdvPolicy {
  AdvConfig config;
  AdvConstraints constraints;
  NetworkParams<double> actor;
  NetworkParams<double> critic;
  AdamState<double> actor_optimizer;
  AdamState<double> critic_optimizer;

  static AdvPolicy create(const AdvConfig& config, const AdvConstraints& constraints,
                          std::uint64_t seed);
};

/// min(1 / t_h, 100); a zero headway earns the cap.
double adv_reward(double t_h);

/// The adversary's own view: (v_lead, v_host - v_lead, follower headway).
Observation adversary_observation(const WorldState& world, const SimConfig& cfg);

struct AdvAction {
  double u = 0.0;      // unclipped policy draw (or the mean)
  double accel = 0.0;  // m/s^2 after range mapping and velocity clamping
  GaussParams dist;
};

/// Maps u in [-1, 1] affinely to [a_min, a_max].
double adv_accel_from_unit(double u, const AdvConstraints& c);

AdvAction adv_act(const AdvPolicy& policy, const Observation& adv_obs, double v_lead,
                  const SimConfig& sim, Rng& rng, bool explore);

struct AdvEpisodeResult {
  bool collided = false;
  double min_headway = 0.0;
  std::int64_t steps = 0;
  double episode_return = 0.0;
};

/// Raised when the actor-critic losses turn non-finite.
class AdversaryDivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs one episode against a frozen follower, updating the adversary online.
/// The follower's (observation, pedal) stream is appended to `follower_trace`
/// when given; `log` receives the full episode trace.
AdvEpisodeResult adv_train_episode(AdvPolicy& policy, const PedalPolicy& follower,
                                   const SimConfig& sim, Rng& rng,
                                   std::vector<Transition>* follower_trace = nullptr,
                                   EpisodeLog* log = nullptr, bool learn = true);

struct CollectionConfig {
  std::size_t n_collisions = 440;
  std::int64_t max_episodes = 60000;
  std::int64_t rate_check_after = 2000;  // episodes before the rate check applies
  double min_collision_rate = 0.005;
  std::vector<AdvConstraints> pool{{12.0, 20.0, -6.0, 2.0},
                                   {17.0, 25.0, -6.0, 2.0},
                                   {22.0, 30.0, -6.0, 2.0},
                                   {12.0, 30.0, -6.0, 2.0},
                                   {12.0, 30.0, -6.0, 2.0}};
};

std::vector<AdvPolicy> make_adversary_pool(const CollectionConfig& collection,
                                           const AdvConfig& config, std::uint64_t seed);

struct CollectionStats {
  std::int64_t episodes = 0;
  std::size_t collisions = 0;
  std::vector<std::size_t> collisions_per_adversary;
};

class CollectionBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trains the pool round-robin against `follower` and keeps the follower's final
/// 25 (observation, pedal) pairs of every collision episode.
Dataset collect_collision_dataset(std::vector<AdvPolicy>& pool, const PedalPolicy& follower,
                                  const CollectionConfig& collection, const SimConfig& sim,
                                  std::uint64_t seed, CollectionStats* stats = nullptr);

}  // namespace amdn
