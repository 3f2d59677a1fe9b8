#pragma once

// Fixed-step longitudinal world with one host (follower) and one lead vehicle.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "amdn/types.hpp"

namespace amdn {

struct SimConfig {
  double dt = 0.04;  // 25 steps per second
  double v_max = 40.0;
  double gas_accel_max = 2.5;
  double brake_decel_max_factor = 9.81;  // times friction
  double friction_min = 0.4;
  double friction_max = 1.0;
  std::int64_t episode_len = 7500;  // 5 minutes
  double headway_cap = 10.0;
  double v_eps = 0.1;

  void validate() const;
};

struct WorldState {
  double v_host = 0.0;
  double v_lead = 0.0;
  double x_rel = 0.0;  // bumper-to-bumper gap
  double friction = 1.0;
  std::int64_t step = 0;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

/// What the follower senses: host speed, lead minus host speed, time headway.
struct Observation {
  double v = 0.0;
  double v_rel = 0.0;
  double t_h = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct StepEvent {
  bool collided = false;
  bool episode_done = false;
  bool pedal_clipped = false;
};

struct StepResult {
  WorldState world;
  Observation observation;
  StepEvent event;
};

/// Initial speed range for an episode; both vehicles start at the same speed.
struct VelocityRange {
  double lo = 15.0;
  double hi = 35.0;
};

double headway(double x_rel, double v, const SimConfig& cfg);

/// Pedal in [-1, 1] to longitudinal acceleration; out-of-range pedals are clipped.
double pedal_to_accel(double pedal, double friction, const SimConfig& cfg);

Observation observe(const WorldState& world, const SimConfig& cfg);

/// Semi-implicit Euler: speeds first, then the gap with the new speeds.
StepResult step(const WorldState& world, double pedal, double lead_accel, const SimConfig& cfg);

/// Equal speeds drawn from `range`, gap set for a 2 s headway, friction ~ U(friction range).
WorldState init_episode(const SimConfig& cfg, Rng& rng, const VelocityRange& range);

/// One row of an exported episode trace.
struct LogRow {
  std::int64_t step = 0;
  double time_s = 0.0;
  double v_host = 0.0;
  double v_lead = 0.0;
  double v_rel = 0.0;
  double x_rel = 0.0;
  double t_h = 0.0;
  double pedal = 0.0;
  double lead_accel = 0.0;
  double friction = 0.0;
  bool collided = false;
};

using EpisodeLog = std::vector<LogRow>;

inline constexpr const char* kEpisodeLogHeader =
    "step,time_s,v_host,v_lead,v_rel,x_rel,t_h,pedal,lead_accel,friction,collided";

LogRow make_log_row(const StepResult& result, double pedal, double lead_accel,
                    const SimConfig& cfg);
void write_episode_log(const EpisodeLog& log, std::ostream& out);
void write_episode_log(const EpisodeLog& log, const std::string& path);

}  // namespace amdn
