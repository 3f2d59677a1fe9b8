#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "amdn/adversary.hpp"

using namespace amdn;

namespace {

AdvConfig short_episodes(std::int64_t steps = 500) {
  AdvConfig c;
  c.episode_steps = steps;
  return c;
}

}  // namespace

TEST(Adversary, RewardExamples) {
  EXPECT_DOUBLE_EQ(adv_reward(2.0), 0.5);
  EXPECT_DOUBLE_EQ(adv_reward(0.5), 2.0);
  EXPECT_EQ(adv_reward(0.0), 100.0);
  EXPECT_EQ(adv_reward(0.001), 100.0);
  EXPECT_EQ(adv_reward(0.01), 100.0);
  EXPECT_DOUBLE_EQ(adv_reward(10.0), 0.1);
}

TEST(Adversary, RewardDecreasesWithHeadway) {
  double previous = adv_reward(0.0);
  for (double t = 0.005; t <= 10.0; t += 0.005) {
    const double r = adv_reward(t);
    EXPECT_LE(r, previous);
    EXPECT_LE(r, 100.0);
    previous = r;
  }
}

TEST(Adversary, AffineActionMap) {
  const AdvConstraints c;
  EXPECT_EQ(adv_accel_from_unit(-1.0, c), -6.0);
  EXPECT_EQ(adv_accel_from_unit(1.0, c), 2.0);
  EXPECT_EQ(adv_accel_from_unit(0.0, c), -2.0);
  EXPECT_EQ(adv_accel_from_unit(7.0, c), 2.0);
  EXPECT_EQ(adv_accel_from_unit(-3.0, c), -6.0);
}

TEST(Adversary, ObservationIsLeadCentred) {
  const SimConfig sim;
  const Observation o = adversary_observation(WorldState{24.0, 20.0, 48.0, 1.0, 0}, sim);
  EXPECT_EQ(o.v, 20.0);
  EXPECT_EQ(o.v_rel, 4.0);
  EXPECT_EQ(o.t_h, 2.0);
}

TEST(Adversary, ActionsRespectVelocityBounds) {
  const SimConfig sim;
  const AdvPolicy p = AdvPolicy::create(AdvConfig{}, AdvConstraints{}, 1);
  Rng rng(2);
  for (double v_lead : {12.0, 12.05, 20.0, 29.97, 30.0}) {
    for (int i = 0; i < 200; ++i) {
      const AdvAction a = adv_act(p, {v_lead, 0.0, 2.0}, v_lead, sim, rng, true);
      EXPECT_GE(a.accel, -6.0);
      EXPECT_LE(a.accel, 2.0);
      EXPECT_GE(v_lead + a.accel * sim.dt, 12.0 - 1e-12);
      EXPECT_LE(v_lead + a.accel * sim.dt, 30.0 + 1e-12);
    }
  }
}

TEST(Adversary, GreedyActionIsDeterministic) {
  const SimConfig sim;
  const AdvPolicy p = AdvPolicy::create(AdvConfig{}, AdvConstraints{}, 3);
  Rng a(1), b(99);
  EXPECT_EQ(adv_act(p, {20.0, 1.0, 1.5}, 20.0, sim, a, false).accel,
            adv_act(p, {20.0, 1.0, 1.5}, 20.0, sim, b, false).accel);
}

TEST(Adversary, EpisodesAreReproducible) {
  const SimConfig sim;
  const PedalPolicy follower = make_expert_policy(ExpertGains{});
  auto run = [&] {
    AdvPolicy p = AdvPolicy::create(short_episodes(), AdvConstraints{}, 4);
    Rng rng(5);
    std::vector<double> out;
    for (int e = 0; e < 3; ++e) out.push_back(adv_train_episode(p, follower, sim, rng).episode_return);
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adversary, ReturnIsSumOfLoggedRewards) {
  const SimConfig sim;
  AdvPolicy p = AdvPolicy::create(short_episodes(), AdvConstraints{}, 6);
  Rng rng(7);
  EpisodeLog log;
  const auto r = adv_train_episode(p, make_expert_policy(ExpertGains{}), sim, rng, nullptr, &log);
  ASSERT_EQ(static_cast<std::int64_t>(log.size()), r.steps);
  double total = 0.0, min_th = std::numeric_limits<double>::infinity();
  for (const auto& row : log) {
    total += adv_reward(row.t_h);
    min_th = std::min(min_th, row.t_h);
  }
  EXPECT_NEAR(r.episode_return, total, 1e-9 * total);
  if (!r.collided) {
    EXPECT_EQ(r.min_headway, min_th);
  }
}

TEST(Adversary, PassiveFollowerBehindPinnedLeadEarnsHalfPerStep) {
  const SimConfig sim;
  AdvConstraints pinned{20.0, 20.0 + 1e-6, -6.0, 2.0};
  AdvPolicy p = AdvPolicy::create(AdvConfig{}, pinned, 8);
  Rng rng(9);
  const auto r = adv_train_episode(p, make_constant_policy(0.0), sim, rng);
  EXPECT_FALSE(r.collided);
  EXPECT_EQ(r.steps, 1500);
  EXPECT_NEAR(r.episode_return / static_cast<double>(r.steps), 0.5, 1e-4);
}

TEST(Adversary, FullThrottleFollowerCollides) {
  const SimConfig sim;
  AdvPolicy p = AdvPolicy::create(AdvConfig{}, AdvConstraints{}, 10);
  Rng rng(11);
  const auto r = adv_train_episode(p, make_constant_policy(1.0), sim, rng);
  EXPECT_TRUE(r.collided);
  EXPECT_EQ(r.min_headway, 0.0);
  EXPECT_LT(r.steps, 1500);
}

TEST(Adversary, LoggedLeadStaysWithinConstraints) {
  const SimConfig sim;
  const AdvConstraints c{17.0, 25.0, -6.0, 2.0};
  AdvPolicy p = AdvPolicy::create(AdvConfig{}, c, 12);
  Rng rng(13);
  for (int e = 0; e < 5; ++e) {
    EpisodeLog log;
    adv_train_episode(p, make_expert_policy(ExpertGains{}), sim, rng, nullptr, &log);
    for (const auto& row : log) {
      EXPECT_GE(row.lead_accel, c.a_min);
      EXPECT_LE(row.lead_accel, c.a_max);
      EXPECT_GE(row.v_lead, c.v_min - 1e-9);
      EXPECT_LE(row.v_lead, c.v_max + 1e-9);
    }
  }
}

TEST(Adversary, LearningChangesOnlyWhenEnabled) {
  const SimConfig sim;
  AdvPolicy frozen = AdvPolicy::create(short_episodes(200), AdvConstraints{}, 14);
  const auto actor = frozen.actor;
  Rng rng(15);
  adv_train_episode(frozen, make_expert_policy(ExpertGains{}), sim, rng, nullptr, nullptr, false);
  EXPECT_TRUE(frozen.actor == actor);
  adv_train_episode(frozen, make_expert_policy(ExpertGains{}), sim, rng);
  EXPECT_FALSE(frozen.actor == actor);
}

TEST(Adversary, FollowerTraceMatchesSteps) {
  const SimConfig sim;
  AdvPolicy p = AdvPolicy::create(short_episodes(300), AdvConstraints{}, 16);
  Rng rng(17);
  std::vector<Transition> trace;
  const auto r = adv_train_episode(p, make_expert_policy(ExpertGains{}), sim, rng, &trace);
  ASSERT_EQ(static_cast<std::int64_t>(trace.size()), r.steps);
  for (std::size_t i = 0; i < trace.size(); ++i) EXPECT_EQ(trace[i].step, static_cast<std::int64_t>(i));
}

TEST(Adversary, CollectionKeepsFinalSecondOfEachCollision) {
  const SimConfig sim;
  CollectionConfig col;
  col.n_collisions = 6;
  col.pool = {{12.0, 30.0, -6.0, 2.0}, {12.0, 20.0, -6.0, 2.0}};
  auto pool = make_adversary_pool(col, AdvConfig{}, 18);
  CollectionStats stats;
  const Dataset ds = collect_collision_dataset(pool, make_constant_policy(0.6), col, sim, 19, &stats);
  EXPECT_EQ(ds.kind, DatasetKind::kCollision);
  ASSERT_EQ(ds.size(), 6u * kCollisionWindow);
  EXPECT_EQ(stats.collisions, 6u);
  EXPECT_EQ(stats.collisions_per_adversary.size(), 2u);
  for (std::size_t w = 0; w < 6; ++w) {
    const auto first = ds.rows.begin() + static_cast<std::ptrdiff_t>(w * kCollisionWindow);
    for (int k = 0; k < kCollisionWindow; ++k) {
      EXPECT_EQ((first + k)->episode, static_cast<std::int64_t>(w));
      if (k > 0) {
        EXPECT_EQ((first + k)->step, (first + k - 1)->step + 1);
      }
      EXPECT_DOUBLE_EQ((first + k)->action, 0.6);
    }
    EXPECT_LT((first + kCollisionWindow - 1)->t_h, 0.2);
  }
  EXPECT_NO_THROW(ds.validate_for_training());
}

TEST(Adversary, CollectionBudgetIsEnforced) {
  const SimConfig sim;
  CollectionConfig col;
  col.n_collisions = 1;
  col.max_episodes = 3;
  col.rate_check_after = 100;
  auto pool = make_adversary_pool(col, short_episodes(100), 20);
  EXPECT_THROW(collect_collision_dataset(pool, make_expert_policy(ExpertGains{}), col, sim, 21),
               CollectionBudgetError);
}

TEST(Adversary, TrainedAdversaryBeatsCoastingLead) {
  // Baseline: a lead that never accelerates produces no collisions against the
  // expert, while a learning adversary with the full range finds some.
  const SimConfig sim;
  CollectionConfig col;
  col.n_collisions = 5;
  col.max_episodes = 3000;
  col.rate_check_after = 3000;
  col.pool = {{12.0, 30.0, -6.0, 2.0}};
  auto pool = make_adversary_pool(col, AdvConfig{}, 22);
  CollectionStats stats;
  EXPECT_NO_THROW(collect_collision_dataset(pool, make_expert_policy(ExpertGains{}), col, sim, 23, &stats));
  EXPECT_EQ(stats.collisions, 5u);

  Rng rng(24);
  const PedalPolicy expert = make_expert_policy(ExpertGains{});
  for (int e = 0; e < 20; ++e) {
    WorldState w = init_episode(sim, rng, {12.0, 30.0});
    for (int k = 0; k < 1500; ++k) {
      const auto r = step(w, expert(observe(w, sim), rng), 0.0, sim);
      ASSERT_FALSE(r.event.collided);
      w = r.world;
    }
  }
}

TEST(Adversary, ConfigValidationAndJson) {
  AdvConfig c;
  c.gamma = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = AdvConfig{};
  c.action_repeat = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW((AdvConstraints{30.0, 12.0, -6.0, 2.0}.validate()), std::invalid_argument);
  const AdvConfig back = adv_config_from_json(to_json(short_episodes(77)));
  EXPECT_EQ(back.episode_steps, 77);
  EXPECT_EQ(back.action_repeat, 10);
}
