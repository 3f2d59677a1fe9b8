#pragma once

// Naturalistic and adversarial test campaigns plus report emission.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "amdn/adversary.hpp"
#include "amdn/drivers.hpp"
#include "amdn/policy.hpp"
#include "amdn/simulator.hpp"

namespace amdn {

/// Aggregates over every simulated step of every episode.
/// max_abs_v_rel is max |v_lead - v_host|; mean_v_rel is the signed mean.
struct NatReport {
  double min_x_rel = 0.0;
  double mean_x_rel = 0.0;
  double max_abs_v_rel = 0.0;
  double mean_v_rel = 0.0;
  double min_t_h = 0.0;
  double mean_t_h = 0.0;
  std::int64_t collisions = 0;
  std::int64_t episodes = 0;
  std::int64_t steps = 0;
};

/// Streaming accumulator behind NatReport.
class NatAccumulator {
 public:
  void add_step(const WorldState& world, const Observation& obs);
  void end_episode(bool collided);
  NatReport report() const;

 private:
  double min_x_rel_ = 0.0;
  double sum_x_rel_ = 0.0;
  double max_abs_v_rel_ = 0.0;
  double sum_v_rel_ = 0.0;
  double min_t_h_ = 0.0;
  double sum_t_h_ = 0.0;
  std::int64_t steps_ = 0;
  std::int64_t collisions_ = 0;
  std::int64_t episodes_ = 0;
};

struct NatResult {
  NatReport report;
  std::vector<EpisodeLog> logs;  // filled only when requested
};

/// Drives the follower through every scenario for one full episode each.
/// Friction is drawn per episode from a stream derived from `seed`.
NatResult run_naturalistic(const PedalPolicy& follower, const ScenarioSet& scenarios,
                           const SimConfig& sim, std::uint64_t seed, bool keep_logs = false);

struct AdvTestConfig {
  int adversaries = 5;
  std::int64_t max_episodes = 200;
  AdvConfig adversary;
  AdvConstraints constraints;
};

struct AdvReport {
  int adversaries = 0;
  std::int64_t episodes_per_adversary = 0;
  std::int64_t collisions_total = 0;
  double collisions_mean = 0.0;  // per adversary
  /// Mean over adversaries that scored a collision; empty when none did.
  std::optional<double> episodes_until_first_collision;
  std::vector<std::optional<std::int64_t>> first_collision_episode;  // 1-based
  std::vector<std::vector<double>> min_headway;                      // [adversary][episode]

  /// Mean and population standard deviation across adversaries, per episode.
  std::vector<double> min_headway_mean() const;
  std::vector<double> min_headway_std() const;
};

/// Trains fresh adversaries online against the frozen follower.
AdvReport run_adversarial(const PedalPolicy& follower, const AdvTestConfig& config,
                          const SimConfig& sim, std::uint64_t seed);

nlohmann::json to_json(const NatReport& r);
NatReport nat_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AdvReport& r);
AdvReport adv_report_from_json(const nlohmann::json& j);

/// One column of the results table.
struct VariantReport {
  std::string label;
  std::optional<NatReport> naturalistic;
  std::optional<AdvReport> adversarial;
};

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

inline constexpr const char* kMetricsHeader =
    "variant,min_x_rel,mean_x_rel,max_abs_v_rel,mean_v_rel,min_t_h,mean_t_h,nat_collisions,"
    "nat_episodes,adv_collisions_mean,adv_collisions_total,adv_episodes_until_collision,"
    "adversaries,adv_episodes";

struct ReportFiles {
  std::string metrics_csv;
  std::string headway_csv;
  std::string table_md;
};

/// Writes metrics.csv (one row per variant), headway.csv (per-episode mean/std
/// of the adversaries' minimum headway per variant) and table.md (parameters as
/// rows, variants as columns).
ReportFiles emit_report(const std::vector<VariantReport>& reports, const std::string& out_dir,
                        const Provenance& provenance);

}  // namespace amdn
