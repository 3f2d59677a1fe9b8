#include <gtest/gtest.h>

#include <cmath>

#include "amdn/drivers.hpp"
#include "amdn/simulator.hpp"

using namespace amdn;

namespace {

const ExpertGains kReferenceGains{0.5, 0.15, 2.0, 0.02};

double noiseless(const Observation& obs, const ExpertGains& gains) {
  Rng rng(0);
  return expert_pedal(obs, gains, rng, false);
}

}  // namespace

TEST(Drivers, ExpertEquilibrium) {
  EXPECT_EQ(noiseless({25.0, 0.0, 2.0}, ExpertGains{}), 0.0);
  EXPECT_EQ(noiseless({25.0, 0.0, 2.0}, kReferenceGains), 0.0);
}

TEST(Drivers, ExpertGainArithmetic) {
  EXPECT_DOUBLE_EQ(noiseless({25.0, 0.0, 3.0}, kReferenceGains), 0.5);
  EXPECT_DOUBLE_EQ(noiseless({25.0, -2.0, 1.0}, kReferenceGains), -0.8);
  const ExpertGains defaults;
  EXPECT_DOUBLE_EQ(noiseless({25.0, 0.0, 3.0}, defaults), defaults.k_h);
  EXPECT_DOUBLE_EQ(noiseless({25.0, -2.0, 1.0}, defaults), -defaults.k_h - 2.0 * defaults.k_v);
}

TEST(Drivers, ExpertPedalAlwaysInRange) {
  Rng rng(4);
  std::uniform_real_distribution<double> v(0.0, 40.0), vr(-40.0, 40.0), th(0.0, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const double p = expert_pedal({v(rng), vr(rng), th(rng)}, kReferenceGains, rng, true);
    EXPECT_GE(p, -1.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(Drivers, ExpertNoiseHasConfiguredSpread) {
  Rng rng(5);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double p = expert_pedal({25.0, 0.0, 2.0}, ExpertGains{}, rng, true);
    sum += p;
    sum_sq += p * p;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 1e-3);
  EXPECT_NEAR(std::sqrt(sum_sq / n - mean * mean), 0.02, 5e-4);
}

TEST(Drivers, GainsValidation) {
  ExpertGains g;
  g.k_v = 0.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = ExpertGains{};
  g.target_headway = -1.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(Drivers, CruiseProfile) {
  Rng rng(1);
  const LeadProfile p = gen_lead_profile(ProfileKind::kCruise, rng);
  ASSERT_EQ(p.segments.size(), 1u);
  EXPECT_EQ(p.segments[0].accel, 0.0);
  for (double t : {0.0, 17.3, 299.9, 1234.5}) EXPECT_EQ(profile_accel(p, t, p.initial_velocity, 0.04), 0.0);
}

TEST(Drivers, EmergencyProfileHasOneHardBrake) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const LeadProfile p = gen_lead_profile(ProfileKind::kEmergency, rng);
    int hard = 0;
    for (std::size_t s = 0; s < p.segments.size(); ++s) {
      if (p.segments[s].accel <= -4.0) {
        ++hard;
        EXPECT_GE(p.segments[s].accel, -6.0);
        ASSERT_LT(s + 1, p.segments.size());
        EXPECT_GT(p.segments[s + 1].accel, 0.0);
        EXPECT_LE(p.segments[s + 1].accel, 2.0);
      }
    }
    EXPECT_EQ(hard, 1);
  }
}

TEST(Drivers, ProfilesStayInRange) {
  Rng rng(3);
  for (const auto kind : {ProfileKind::kCruise, ProfileKind::kWave, ProfileKind::kEmergency}) {
    for (int i = 0; i < 200; ++i) {
      const LeadProfile p = gen_lead_profile(kind, rng);
      EXPECT_NO_THROW(p.validate());
      EXPECT_GE(p.initial_velocity, 15.0);
      EXPECT_LE(p.initial_velocity, 35.0);
      for (const auto& s : p.segments) {
        EXPECT_GE(s.target_velocity, 15.0);
        EXPECT_LE(s.target_velocity, 35.0);
        EXPECT_LE(std::abs(s.accel), 6.0);
        if (kind == ProfileKind::kWave) {
          EXPECT_GE(std::abs(s.accel), 0.5);
          EXPECT_LE(std::abs(s.accel), 3.0);
        }
      }
    }
  }
}

TEST(Drivers, ProfileGenerationDeterministic) {
  Rng a(9), b(9);
  EXPECT_EQ(gen_lead_profile(ProfileKind::kWave, a), gen_lead_profile(ProfileKind::kWave, b));
  EXPECT_EQ(make_scenario_set(3), make_scenario_set(3));
}

TEST(Drivers, ProfileAccelPiecewise) {
  LeadProfile p;
  p.kind = ProfileKind::kEmergency;
  p.initial_velocity = 20.0;
  p.segments = {{15.0, -4.0, 10.0}};
  const double dt = 0.04;
  EXPECT_EQ(profile_accel(p, 0.0, 20.0, dt), -4.0);
  EXPECT_EQ(profile_accel(p, 1.0, 16.0, dt), -4.0);
  EXPECT_EQ(profile_accel(p, 2.0, 15.0, dt), 0.0);

  // Drive the lead with the profile: it reaches 15 exactly and stays there.
  double v = 20.0;
  for (int k = 0; k < 200; ++k) {
    v += profile_accel(p, k * dt, v, dt) * dt;
    EXPECT_GE(v, 15.0 - 1e-12);
  }
  EXPECT_NEAR(v, 15.0, 1e-12);
}

TEST(Drivers, ProfileAccelClampsOvershoot) {
  LeadProfile p;
  p.initial_velocity = 20.0;
  p.segments = {{20.0, 3.0, 5.0}};
  EXPECT_NEAR(profile_accel(p, 0.0, 19.95, 0.04), 1.25, 1e-12);
  EXPECT_LE(19.95 + profile_accel(p, 0.0, 19.95, 0.04) * 0.04, 20.0 + 1e-12);
}

TEST(Drivers, ProfilesLoop) {
  LeadProfile p;
  p.initial_velocity = 20.0;
  p.segments = {{25.0, 1.0, 10.0}, {20.0, -1.0, 10.0}};
  EXPECT_EQ(profile_accel(p, 5.0, 22.0, 0.04), 1.0);
  EXPECT_EQ(profile_accel(p, 15.0, 22.0, 0.04), -1.0);
  EXPECT_EQ(profile_accel(p, 25.0, 22.0, 0.04), 1.0);
  EXPECT_THROW(profile_accel(p, -1.0, 22.0, 0.04), std::invalid_argument);
}

TEST(Drivers, ScenarioSetComposition) {
  const ScenarioSet s = make_scenario_set(7);
  ASSERT_EQ(s.profiles.size(), 120u);
  int counts[3] = {0, 0, 0};
  for (const auto& p : s.profiles) ++counts[static_cast<int>(p.kind)];
  EXPECT_EQ(counts[0], 20);
  EXPECT_EQ(counts[1], 60);
  EXPECT_EQ(counts[2], 40);
}

TEST(Drivers, ScenarioSetJsonRoundTrip) {
  const ScenarioSet s = make_scenario_set(11, 12);
  const nlohmann::json j = s;
  const ScenarioSet back = nlohmann::json::parse(j.dump()).get<ScenarioSet>();
  EXPECT_EQ(back, s);
}

TEST(Drivers, ClosedLoopExpertConvergesAgainstCruiseLead) {
  SimConfig cfg;
  cfg.episode_len = 100000;
  const ExpertGains gains;
  for (double v0 : {15.0, 25.0, 35.0}) {
    for (double th0 : {1.5, 1.75, 2.25, 2.5, 3.0}) {
      for (double friction : {0.4, 1.0}) {
        WorldState w{v0, v0, th0 * v0, friction, 0};
        Rng rng(0);
        for (int k = 0; k < 750; ++k) {  // 30 s
          const double pedal = expert_pedal(observe(w, cfg), gains, rng, false);
          const auto r = step(w, pedal, 0.0, cfg);
          ASSERT_FALSE(r.event.collided);
          w = r.world;
        }
        EXPECT_LT(std::abs(observe(w, cfg).t_h - 2.0), 0.1) << "v0=" << v0 << " t_h0=" << th0;
      }
    }
  }
}
