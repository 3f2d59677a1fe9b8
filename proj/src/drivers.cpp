#include "amdn/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amdn {

void ExpertGains::validate() const {
  if (!(k_h > 0.0) || !(k_v > 0.0)) throw std::invalid_argument("ExpertGains: gains must be > 0");
  if (!(target_headway > 0.0)) throw std::invalid_argument("ExpertGains: target_headway must be > 0");
  if (noise_std < 0.0) throw std::invalid_argument("ExpertGains: noise_std must be >= 0");
}

double expert_pedal(const Observation& obs, const ExpertGains& gains, Rng& rng, bool noisy) {
  double pedal = gains.k_h * (obs.t_h - gains.target_headway) + gains.k_v * obs.v_rel;
  if (noisy && gains.noise_std > 0.0) {
    pedal += std::normal_distribution<double>(0.0, gains.noise_std)(rng);
  }
  return std::clamp(pedal, -1.0, 1.0);
}

std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::kCruise:
      return "cruise";
    case ProfileKind::kWave:
      return "wave";
    case ProfileKind::kEmergency:
      return "emergency";
  }
  return "cruise";
}

ProfileKind profile_kind_from_string(std::string_view name) {
  if (name == "cruise") return ProfileKind::kCruise;
  if (name == "wave") return ProfileKind::kWave;
  if (name == "emergency") return ProfileKind::kEmergency;
  throw std::invalid_argument("unknown lead profile kind: " + std::string(name));
}

double LeadProfile::cycle_duration() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.hold_duration;
  return total;
}

void LeadProfile::validate() const {
  if (segments.empty()) throw std::invalid_argument("LeadProfile: no segments");
  auto in_range = [](double v) { return v >= kNaturalisticVMin && v <= kNaturalisticVMax; };
  if (!in_range(initial_velocity)) throw std::invalid_argument("LeadProfile: initial velocity out of range");
  for (const auto& s : segments) {
    if (!in_range(s.target_velocity)) throw std::invalid_argument("LeadProfile: target velocity out of range");
    if (std::abs(s.accel) > 6.0) throw std::invalid_argument("LeadProfile: |accel| exceeds 6 m/s^2");
    if (!(s.hold_duration > 0.0)) throw std::invalid_argument("LeadProfile: hold_duration must be > 0");
  }
}

namespace {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

LeadProfile gen_lead_profile(ProfileKind kind, Rng& rng) {
  LeadProfile p;
  p.kind = kind;
  switch (kind) {
    case ProfileKind::kCruise: {
      p.initial_velocity = uniform(rng, kNaturalisticVMin, kNaturalisticVMax);
      p.segments.push_back({p.initial_velocity, 0.0, 300.0});
      break;
    }
    case ProfileKind::kWave: {
      p.initial_velocity = uniform(rng, kNaturalisticVMin, kNaturalisticVMax);
      const int n = std::uniform_int_distribution<int>(3, 7)(rng);
      double previous = p.initial_velocity;
      for (int i = 0; i <= n; ++i) {
        // The last segment returns to the start so the profile loops seamlessly.
        const double target =
            i == n ? p.initial_velocity : uniform(rng, kNaturalisticVMin, kNaturalisticVMax);
        const double magnitude = uniform(rng, 0.5, 3.0);
        const double accel = target >= previous ? magnitude : -magnitude;
        p.segments.push_back({target, accel, uniform(rng, 15.0, 45.0)});
        previous = target;
      }
      break;
    }
    case ProfileKind::kEmergency: {
      p.initial_velocity = uniform(rng, 22.0, kNaturalisticVMax);
      const double low = std::max(kNaturalisticVMin, p.initial_velocity - uniform(rng, 5.0, 12.0));
      p.segments.push_back({p.initial_velocity, 0.0, uniform(rng, 20.0, 60.0)});
      p.segments.push_back({low, uniform(rng, -6.0, -4.0), uniform(rng, 10.0, 30.0)});
      p.segments.push_back({p.initial_velocity, uniform(rng, 0.5, 2.0), uniform(rng, 30.0, 60.0)});
      break;
    }
  }
  return p;
}

double profile_accel(const LeadProfile& profile, double t, double v_lead_current, double dt) {
  if (t < 0.0) throw std::invalid_argument("profile_accel: t must be >= 0");
  const double cycle = profile.cycle_duration();
  if (profile.segments.empty() || !(cycle > 0.0)) return 0.0;
  double local = std::fmod(t, cycle);
  const LeadSegment* active = &profile.segments.back();
  for (const auto& s : profile.segments) {
    if (local < s.hold_duration) {
      active = &s;
      break;
    }
    local -= s.hold_duration;
  }
  const double gap = active->target_velocity - v_lead_current;
  if (active->accel == 0.0 || gap == 0.0) return 0.0;
  const double accel = gap > 0.0 ? std::abs(active->accel) : -std::abs(active->accel);
  if (std::abs(accel) * dt > std::abs(gap)) return gap / dt;
  return accel;
}

ScenarioSet make_scenario_set(std::uint64_t seed, int count) {
  if (count < 1) throw std::invalid_argument("make_scenario_set: count must be >= 1");
  ScenarioSet set;
  set.seed = seed;
  Rng rng(seed);
  std::vector<ProfileKind> kinds;
  for (int i = 0; i < count; ++i) {
    // 1 cruise : 3 wave : 2 emergency
    const int slot = i % 6;
    kinds.push_back(slot == 0 ? ProfileKind::kCruise
                              : (slot <= 3 ? ProfileKind::kWave : ProfileKind::kEmergency));
  }
  std::shuffle(kinds.begin(), kinds.end(), rng);
  for (const auto kind : kinds) set.profiles.push_back(gen_lead_profile(kind, rng));
  return set;
}

void to_json(nlohmann::json& j, const LeadSegment& s) {
  j = {{"target_velocity", s.target_velocity}, {"accel", s.accel}, {"hold_duration", s.hold_duration}};
}

void from_json(const nlohmann::json& j, LeadSegment& s) {
  j.at("target_velocity").get_to(s.target_velocity);
  j.at("accel").get_to(s.accel);
  j.at("hold_duration").get_to(s.hold_duration);
}

void to_json(nlohmann::json& j, const LeadProfile& p) {
  j = {{"kind", std::string(to_string(p.kind))},
       {"initial_velocity", p.initial_velocity},
       {"segments", p.segments}};
}

void from_json(const nlohmann::json& j, LeadProfile& p) {
  p.kind = profile_kind_from_string(j.at("kind").get<std::string>());
  j.at("initial_velocity").get_to(p.initial_velocity);
  j.at("segments").get_to(p.segments);
  p.validate();
}

void to_json(nlohmann::json& j, const ScenarioSet& s) {
  j = {{"format", "amdn-scenarios/1"}, {"seed", s.seed}, {"profiles", s.profiles}};
}

void from_json(const nlohmann::json& j, ScenarioSet& s) {
  j.at("seed").get_to(s.seed);
  j.at("profiles").get_to(s.profiles);
}

}  // namespace amdn
