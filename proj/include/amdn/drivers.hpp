#pragma once

// Scripted demonstrator and naturalistic lead-vehicle trajectories.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "amdn/simulator.hpp"
#include "amdn/types.hpp"

namespace amdn {

struct ExpertGains {
  double k_h = 0.3;    // pedal per second of headway error
  double k_v = 0.02;   // pedal per m/s of relative speed
  double target_headway = 2.0;
  double noise_std = 0.02;

  void validate() const;
};

/// Proportional headway/speed law; noise is only added when `noisy` is set.
double expert_pedal(const Observation& obs, const ExpertGains& gains, Rng& rng, bool noisy = true);

enum class ProfileKind { kCruise, kWave, kEmergency };

std::string_view to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(std::string_view name);

struct LeadSegment {
  double target_velocity = 25.0;  // m/s
  double accel = 0.0;             // m/s^2, signed
  double hold_duration = 30.0;    // s, includes the ramp towards the target

  friend bool operator==(const LeadSegment&, const LeadSegment&) = default;
};

struct LeadProfile {
  ProfileKind kind = ProfileKind::kCruise;
  double initial_velocity = 25.0;
  std::vector<LeadSegment> segments;

  double cycle_duration() const;
  void validate() const;

  friend bool operator==(const LeadProfile&, const LeadProfile&) = default;
};

inline constexpr double kNaturalisticVMin = 15.0;
inline constexpr double kNaturalisticVMax = 35.0;

LeadProfile gen_lead_profile(ProfileKind kind, Rng& rng);

/// Lead acceleration at time `t`. Each segment ramps towards its target, then
/// holds; a ramp never overshoots the target within one step of length `dt`.
double profile_accel(const LeadProfile& profile, double t, double v_lead_current, double dt);

/// A fixed, ordered set of naturalistic test scenarios.
struct ScenarioSet {
  std::uint64_t seed = 0;
  std::vector<LeadProfile> profiles;

  friend bool operator==(const ScenarioSet&, const ScenarioSet&) = default;
};

/// 120 profiles by default: 20 cruise, 60 wave, 40 emergency, shuffled by seed.
ScenarioSet make_scenario_set(std::uint64_t seed, int count = 120);

void to_json(nlohmann::json& j, const LeadSegment& s);
void from_json(const nlohmann::json& j, LeadSegment& s);
void to_json(nlohmann::json& j, const LeadProfile& p);
void from_json(const nlohmann::json& j, LeadProfile& p);
void to_json(nlohmann::json& j, const ScenarioSet& s);
void from_json(const nlohmann::json& j, ScenarioSet& s);

}  // namespace amdn
