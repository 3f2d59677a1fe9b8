#include "amdn/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace amdn {

void AdvConstraints::validate() const {
  if (!(v_min < v_max)) throw std::invalid_argument("AdvConstraints: v_min must be < v_max");
  if (!(a_min < 0.0 && 0.0 < a_max)) throw std::invalid_argument("AdvConstraints: need a_min < 0 < a_max");
}

void AdvConfig::validate() const {
  actor.validate();
  critic.validate();
  if (actor.input_dim != 3 || actor.head_outputs != 2) throw std::invalid_argument("AdvConfig: actor must be 3 -> 2");
  if (critic.input_dim != 3 || critic.head_outputs != 1) throw std::invalid_argument("AdvConfig: critic must be 3 -> 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("AdvConfig: gamma must lie in (0, 1)");
  if (lr_actor < 0.0 || lr_critic < 0.0 || entropy_weight < 0.0 || !(reward_scale > 0.0)) {
    throw std::invalid_argument("AdvConfig: invalid learning constants");
  }
  if (episode_steps < 1) throw std::invalid_argument("AdvConfig: episode_steps must be >= 1");
  if (action_repeat < 1) throw std::invalid_argument("AdvConfig: action_repeat must be >= 1");
}

nlohmann::json to_json(const AdvConfig& c) {
  return {{"hidden_layers", c.actor.hidden_layers}, {"hidden_width", c.actor.hidden_width},
          {"gamma", c.gamma},                       {"lr_actor", c.lr_actor},
          {"lr_critic", c.lr_critic},               {"entropy_weight", c.entropy_weight},
          {"reward_scale", c.reward_scale},         {"episode_steps", c.episode_steps},
          {"action_repeat", c.action_repeat}};
}

AdvConfig adv_config_from_json(const nlohmann::json& j, AdvConfig c) {
  c.actor.hidden_layers = c.critic.hidden_layers = j.value("hidden_layers", c.actor.hidden_layers);
  c.actor.hidden_width = c.critic.hidden_width = j.value("hidden_width", c.actor.hidden_width);
  c.gamma = j.value("gamma", c.gamma);
  c.lr_actor = j.value("lr_actor", c.lr_actor);
  c.lr_critic = j.value("lr_critic", c.lr_critic);
  c.entropy_weight = j.value("entropy_weight", c.entropy_weight);
  c.reward_scale = j.value("reward_scale", c.reward_scale);
  c.episode_steps = j.value("episode_steps", c.episode_steps);
  c.action_repeat = j.value("action_repeat", c.action_repeat);
  c.validate();
  return c;
}

AdvPolicy AdvPolicy::create(const AdvConfig& config, const AdvConstraints& constraints,
                            std::uint64_t seed) {
  config.validate();
  constraints.validate();
  AdvPolicy p;
  p.config = config;
  p.constraints = constraints;
  p.actor = init_network<double>(config.actor, derive_seed(seed, 1));
  p.critic = init_network<double>(config.critic, derive_seed(seed, 2));
  p.actor_optimizer = AdamState<double>::for_params(p.actor);
  p.critic_optimizer = AdamState<double>::for_params(p.critic);
  return p;
}

double adv_reward(double t_h) {
  if (t_h <= 0.0) return 100.0;
  return std::min(1.0 / t_h, 100.0);
}

Observation adversary_observation(const WorldState& world, const SimConfig& cfg) {
  return {world.v_lead, world.v_host - world.v_lead, headway(world.x_rel, world.v_host, cfg)};
}

double adv_accel_from_unit(double u, const AdvConstraints& c) {
  const double clipped = std::clamp(u, -1.0, 1.0);
  return c.a_min + 0.5 * (clipped + 1.0) * (c.a_max - c.a_min);
}

namespace {

double clamp_to_velocity_bounds(double accel, double v_lead, const AdvConstraints& c,
                                const SimConfig& sim) {
  if (v_lead + accel * sim.dt > c.v_max) accel = (c.v_max - v_lead) / sim.dt;
  if (v_lead + accel * sim.dt < c.v_min) accel = (c.v_min - v_lead) / sim.dt;
  return std::clamp(accel, c.a_min, c.a_max);
}

AdvAction act_from_raw(const AdvPolicy& policy, double raw_mu, double raw_var, double v_lead,
                       const SimConfig& sim, Rng& rng, bool explore) {
  AdvAction action;
  action.dist = squash_gaussian(raw_mu, raw_var);
  action.u = explore ? sample_unclipped(action.dist, rng) : action.dist.mu;
  action.accel = clamp_to_velocity_bounds(adv_accel_from_unit(action.u, policy.constraints), v_lead,
                                          policy.constraints, sim);
  return action;
}

MatrixXd as_row(const Observation& obs) { return normalize(obs).transpose(); }

}  // namespace

AdvAction adv_act(const AdvPolicy& policy, const Observation& adv_obs, double v_lead,
                  const SimConfig& sim, Rng& rng, bool explore) {
  const auto trace = forward(policy.actor, as_row(adv_obs));
  return act_from_raw(policy, trace.raw_heads()(0, 0), trace.raw_heads()(0, 1), v_lead, sim, rng,
                      explore);
}

AdvEpisodeResult adv_train_episode(AdvPolicy& policy, const PedalPolicy& follower,
                                   const SimConfig& sim, Rng& rng,
                                   std::vector<Transition>* follower_trace, EpisodeLog* log,
                                   bool learn) {
  SimConfig episode_cfg = sim;
  episode_cfg.episode_len = policy.config.episode_steps;
  const AdvConfig& cfg = policy.config;

  WorldState world = init_episode(episode_cfg, rng, {policy.constraints.v_min, policy.constraints.v_max});
  Rng follower_rng(rng());
  AdvEpisodeResult result;
  result.min_headway = std::numeric_limits<double>::infinity();

  bool done = false;
  while (!done) {
    const MatrixXd state = as_row(adversary_observation(world, episode_cfg));
    const auto actor_trace = forward(policy.actor, state);
    const double raw_mu = actor_trace.raw_heads()(0, 0);
    const double raw_var = actor_trace.raw_heads()(0, 1);
    const AdvAction action = act_from_raw(policy, raw_mu, raw_var, world.v_lead, episode_cfg, rng, true);
    const double nominal_accel = adv_accel_from_unit(action.u, policy.constraints);

    // Hold the decision for action_repeat steps; the learning reward is the sum.
    double reward = 0.0;
    for (int k = 0; k < cfg.action_repeat && !done; ++k) {
      const Observation follower_obs = observe(world, episode_cfg);
      const double pedal = follower(follower_obs, follower_rng);
      const double accel =
          clamp_to_velocity_bounds(nominal_accel, world.v_lead, policy.constraints, episode_cfg);
      const StepResult next = step(world, pedal, accel, episode_cfg);
      const double r = adv_reward(next.observation.t_h);
      reward += r;

      if (follower_trace != nullptr) {
        follower_trace->push_back({0, world.step, follower_obs.v, follower_obs.v_rel, follower_obs.t_h,
                                   std::clamp(pedal, -1.0, 1.0)});
      }
      if (log != nullptr) log->push_back(make_log_row(next, pedal, accel, episode_cfg));

      result.episode_return += r;
      result.min_headway = std::min(result.min_headway, next.observation.t_h);
      ++result.steps;
      world = next.world;
      if (next.event.episode_done) {
        result.collided = next.event.collided;
        done = true;
      }
    }

    if (learn) {
      const auto critic_trace = forward(policy.critic, state);
      const double value = critic_trace.raw_heads()(0, 0);
      double target = reward * cfg.reward_scale;
      if (!done) {
        const MatrixXd next_state = as_row(adversary_observation(world, episode_cfg));
        target += cfg.gamma * forward(policy.critic, next_state).raw_heads()(0, 0);
      }
      const double advantage = target - value;
      if (!std::isfinite(advantage)) {
        std::ostringstream msg;
        msg << "adversary diverged: non-finite advantage at step " << world.step << " (value=" << value
            << ", target=" << target << ")";
        throw AdversaryDivergedError(msg.str());
      }

      // Critic: 0.5 * advantage^2, gradient -advantage on V(s).
      MatrixXd critic_grad(1, 1);
      critic_grad(0, 0) = -advantage;
      adam_step(policy.critic, backward(policy.critic, critic_trace, critic_grad),
                policy.critic_optimizer, cfg.lr_critic);

      // Actor: -advantage * log pi(u | s) - entropy_weight * H.
      const GaussGrad neg_logp = nll_grads(action.dist, action.u);
      const GaussGrad loss_grad{advantage * neg_logp.d_mu,
                                advantage * neg_logp.d_var -
                                    cfg.entropy_weight / (2.0 * action.dist.var)};
      const GaussGrad raw_grad = unsquash_grad(raw_mu, raw_var, loss_grad);
      MatrixXd actor_grad(1, 2);
      actor_grad << raw_grad.d_mu, raw_grad.d_var;
      adam_step(policy.actor, backward(policy.actor, actor_trace, actor_grad),
                policy.actor_optimizer, cfg.lr_actor);
    }
  }
  if (result.collided) result.min_headway = 0.0;
  return result;
}

std::vector<AdvPolicy> make_adversary_pool(const CollectionConfig& collection,
                                           const AdvConfig& config, std::uint64_t seed) {
  std::vector<AdvPolicy> pool;
  for (std::size_t i = 0; i < collection.pool.size(); ++i) {
    pool.push_back(AdvPolicy::create(config, collection.pool[i], derive_seed(seed, 100 + i)));
  }
  return pool;
}

Dataset collect_collision_dataset(std::vector<AdvPolicy>& pool, const PedalPolicy& follower,
                                  const CollectionConfig& collection, const SimConfig& sim,
                                  std::uint64_t seed, CollectionStats* stats) {
  if (pool.empty()) throw std::invalid_argument("collect_collision_dataset: empty adversary pool");
  if (collection.n_collisions == 0) throw std::invalid_argument("collect_collision_dataset: n_collisions must be > 0");
  Dataset ds;
  ds.kind = DatasetKind::kCollision;
  ds.seed = seed;
  ds.rows.reserve(collection.n_collisions * kCollisionWindow);
  CollectionStats local;
  local.collisions_per_adversary.assign(pool.size(), 0);
  Rng rng(seed);
  std::vector<Transition> trace;

  while (local.collisions < collection.n_collisions) {
    if (local.episodes >= collection.max_episodes) {
      std::ostringstream msg;
      msg << "collision budget exhausted: " << local.collisions << " of " << collection.n_collisions
          << " collisions after " << local.episodes << " episodes";
      throw CollectionBudgetError(msg.str());
    }
    const std::size_t which = static_cast<std::size_t>(local.episodes) % pool.size();
    trace.clear();
    const AdvEpisodeResult r = adv_train_episode(pool[which], follower, sim, rng, &trace);
    ++local.episodes;
    if (r.collided && trace.size() >= static_cast<std::size_t>(kCollisionWindow)) {
      const auto episode_id = static_cast<std::int64_t>(local.collisions);
      for (auto it = trace.end() - kCollisionWindow; it != trace.end(); ++it) {
        Transition t = *it;
        t.episode = episode_id;
        ds.rows.push_back(t);
      }
      ++local.collisions;
      ++local.collisions_per_adversary[which];
    }
    if (local.episodes >= collection.rate_check_after) {
      const double rate = static_cast<double>(local.collisions) / static_cast<double>(local.episodes);
      if (rate < collection.min_collision_rate) {
        std::ostringstream msg;
        msg << "collision rate " << rate << " below threshold " << collection.min_collision_rate
            << " after " << local.episodes << " episodes (" << local.collisions << " collisions)";
        throw CollectionBudgetError(msg.str());
      }
    }
  }
  if (stats != nullptr) *stats = local;
  return ds;
}

}  // namespace amdn
