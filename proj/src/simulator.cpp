#include "amdn/simulator.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "amdn/format.hpp"

namespace amdn {

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
  if (!(friction_min > 0.0 && friction_min <= friction_max && friction_max <= 1.0)) {
    throw std::invalid_argument("SimConfig: friction range must lie within (0, 1]");
  }
  if (episode_len < 1) throw std::invalid_argument("SimConfig: episode_len must be >= 1");
  if (!(v_max > 0.0) || !(v_eps > 0.0) || !(headway_cap > 0.0)) {
    throw std::invalid_argument("SimConfig: v_max, v_eps and headway_cap must be > 0");
  }
}

double headway(double x_rel, double v, const SimConfig& cfg) {
  return std::clamp(x_rel / std::max(v, cfg.v_eps), 0.0, cfg.headway_cap);
}

double pedal_to_accel(double pedal, double friction, const SimConfig& cfg) {
  const double p = std::clamp(pedal, -1.0, 1.0);
  if (p >= 0.0) return p * cfg.gas_accel_max;
  return p * cfg.brake_decel_max_factor * friction;
}

Observation observe(const WorldState& world, const SimConfig& cfg) {
  return {world.v_host, world.v_lead - world.v_host, headway(world.x_rel, world.v_host, cfg)};
}

StepResult step(const WorldState& world, double pedal, double lead_accel, const SimConfig& cfg) {
  StepResult result;
  result.event.pedal_clipped = pedal < -1.0 || pedal > 1.0;
  const double host_accel = pedal_to_accel(pedal, world.friction, cfg);

  WorldState next = world;
  next.v_host = std::clamp(world.v_host + host_accel * cfg.dt, 0.0, cfg.v_max);
  next.v_lead = std::clamp(world.v_lead + lead_accel * cfg.dt, 0.0, cfg.v_max);
  next.x_rel = world.x_rel + (next.v_lead - next.v_host) * cfg.dt;
  next.step = world.step + 1;

  result.event.collided = next.x_rel <= 0.0;
  result.event.episode_done = result.event.collided || next.step >= cfg.episode_len;
  result.world = next;
  result.observation = observe(next, cfg);
  return result;
}

WorldState init_episode(const SimConfig& cfg, Rng& rng, const VelocityRange& range) {
  if (range.hi < range.lo) throw std::invalid_argument("init_episode: empty velocity range");
  WorldState world;
  const double v = range.hi > range.lo
                       ? std::uniform_real_distribution<double>(range.lo, range.hi)(rng)
                       : range.lo;
  world.v_host = v;
  world.v_lead = v;
  world.x_rel = 2.0 * v;
  world.friction = std::uniform_real_distribution<double>(cfg.friction_min, cfg.friction_max)(rng);
  world.step = 0;
  return world;
}

LogRow make_log_row(const StepResult& result, double pedal, double lead_accel,
                    const SimConfig& cfg) {
  const WorldState& w = result.world;
  return {w.step,
          static_cast<double>(w.step) * cfg.dt,
          w.v_host,
          w.v_lead,
          w.v_lead - w.v_host,
          w.x_rel,
          result.observation.t_h,
          pedal,
          lead_accel,
          w.friction,
          result.event.collided};
}

void write_episode_log(const EpisodeLog& log, std::ostream& out) {
  out << kEpisodeLogHeader << '\n';
  for (const auto& r : log) {
    out << r.step << ',' << format_double(r.time_s) << ',' << format_double(r.v_host) << ','
        << format_double(r.v_lead) << ',' << format_double(r.v_rel) << ','
        << format_double(r.x_rel) << ',' << format_double(r.t_h) << ','
        << format_double(r.pedal) << ',' << format_double(r.lead_accel) << ','
        << format_double(r.friction) << ',' << (r.collided ? 1 : 0) << '\n';
  }
}

void write_episode_log(const EpisodeLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open episode log for writing: " + path);
  write_episode_log(log, out);
}

}  // namespace amdn
