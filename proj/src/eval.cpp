#include "amdn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "amdn/format.hpp"

namespace amdn {

void NatAccumulator::add_step(const WorldState& world, const Observation& obs) {
  const double gap = std::max(world.x_rel, 0.0);
  const double v_rel = world.v_lead - world.v_host;
  if (steps_ == 0) {
    min_x_rel_ = gap;
    min_t_h_ = obs.t_h;
  }
  min_x_rel_ = std::min(min_x_rel_, gap);
  min_t_h_ = std::min(min_t_h_, obs.t_h);
  max_abs_v_rel_ = std::max(max_abs_v_rel_, std::abs(v_rel));
  sum_x_rel_ += gap;
  sum_v_rel_ += v_rel;
  sum_t_h_ += obs.t_h;
  ++steps_;
}

void NatAccumulator::end_episode(bool collided) {
  ++episodes_;
  if (collided) {
    ++collisions_;
    min_t_h_ = 0.0;
    min_x_rel_ = 0.0;
  }
}

NatReport NatAccumulator::report() const {
  NatReport r;
  r.episodes = episodes_;
  r.collisions = collisions_;
  r.steps = steps_;
  if (steps_ > 0) {
    const double n = static_cast<double>(steps_);
    r.min_x_rel = min_x_rel_;
    r.mean_x_rel = sum_x_rel_ / n;
    r.max_abs_v_rel = max_abs_v_rel_;
    r.mean_v_rel = sum_v_rel_ / n;
    r.min_t_h = min_t_h_;
    r.mean_t_h = sum_t_h_ / n;
  }
  return r;
}

NatResult run_naturalistic(const PedalPolicy& follower, const ScenarioSet& scenarios,
                           const SimConfig& sim, std::uint64_t seed, bool keep_logs) {
  sim.validate();
  NatResult result;
  NatAccumulator acc;
  for (std::size_t i = 0; i < scenarios.profiles.size(); ++i) {
    const LeadProfile& profile = scenarios.profiles[i];
    Rng rng(derive_seed(seed, i));
    WorldState world = init_episode(sim, rng, {profile.initial_velocity, profile.initial_velocity});
    Observation obs = observe(world, sim);
    EpisodeLog log;
    bool collided = false;
    while (true) {
      const double pedal = follower(obs, rng);
      const double t = static_cast<double>(world.step) * sim.dt;
      const double lead_accel = profile_accel(profile, t, world.v_lead, sim.dt);
      const StepResult next = step(world, pedal, lead_accel, sim);
      acc.add_step(next.world, next.observation);
      if (keep_logs) log.push_back(make_log_row(next, pedal, lead_accel, sim));
      world = next.world;
      obs = next.observation;
      if (next.event.episode_done) {
        collided = next.event.collided;
        break;
      }
    }
    acc.end_episode(collided);
    if (keep_logs) result.logs.push_back(std::move(log));
  }
  result.report = acc.report();
  return result;
}

std::vector<double> AdvReport::min_headway_mean() const {
  std::vector<double> mean(static_cast<std::size_t>(episodes_per_adversary), 0.0);
  if (min_headway.empty()) return mean;
  for (std::size_t e = 0; e < mean.size(); ++e) {
    double total = 0.0;
    for (const auto& series : min_headway) total += series[e];
    mean[e] = total / static_cast<double>(min_headway.size());
  }
  return mean;
}

std::vector<double> AdvReport::min_headway_std() const {
  const std::vector<double> mean = min_headway_mean();
  std::vector<double> sd(mean.size(), 0.0);
  if (min_headway.empty()) return sd;
  for (std::size_t e = 0; e < mean.size(); ++e) {
    double total = 0.0;
    for (const auto& series : min_headway) total += (series[e] - mean[e]) * (series[e] - mean[e]);
    sd[e] = std::sqrt(total / static_cast<double>(min_headway.size()));
  }
  return sd;
}

AdvReport run_adversarial(const PedalPolicy& follower, const AdvTestConfig& config,
                          const SimConfig& sim, std::uint64_t seed) {
  if (config.adversaries < 1 || config.max_episodes < 1) {
    throw std::invalid_argument("run_adversarial: need at least one adversary and one episode");
  }
  AdvReport report;
  report.adversaries = config.adversaries;
  report.episodes_per_adversary = config.max_episodes;
  double first_sum = 0.0;
  int first_count = 0;
  for (int a = 0; a < config.adversaries; ++a) {
    // Streams 1000+ keep these agents distinct from any collection pool.
    AdvPolicy adversary = AdvPolicy::create(config.adversary, config.constraints,
                                            derive_seed(seed, 1000 + static_cast<std::uint64_t>(a)));
    Rng rng(derive_seed(seed, 2000 + static_cast<std::uint64_t>(a)));
    std::vector<double> series;
    series.reserve(static_cast<std::size_t>(config.max_episodes));
    std::optional<std::int64_t> first;
    for (std::int64_t e = 0; e < config.max_episodes; ++e) {
      const AdvEpisodeResult r = adv_train_episode(adversary, follower, sim, rng);
      series.push_back(r.min_headway);
      if (r.collided) {
        ++report.collisions_total;
        if (!first) first = e + 1;
      }
    }
    if (first) {
      first_sum += static_cast<double>(*first);
      ++first_count;
    }
    report.first_collision_episode.push_back(first);
    report.min_headway.push_back(std::move(series));
  }
  report.collisions_mean =
      static_cast<double>(report.collisions_total) / static_cast<double>(config.adversaries);
  if (first_count > 0) report.episodes_until_first_collision = first_sum / first_count;
  return report;
}

nlohmann::json to_json(const NatReport& r) {
  return {{"min_x_rel", r.min_x_rel},         {"mean_x_rel", r.mean_x_rel},
          {"max_abs_v_rel", r.max_abs_v_rel}, {"mean_v_rel", r.mean_v_rel},
          {"min_t_h", r.min_t_h},             {"mean_t_h", r.mean_t_h},
          {"collisions", r.collisions},       {"episodes", r.episodes},
          {"steps", r.steps}};
}

NatReport nat_report_from_json(const nlohmann::json& j) {
  NatReport r;
  j.at("min_x_rel").get_to(r.min_x_rel);
  j.at("mean_x_rel").get_to(r.mean_x_rel);
  j.at("max_abs_v_rel").get_to(r.max_abs_v_rel);
  j.at("mean_v_rel").get_to(r.mean_v_rel);
  j.at("min_t_h").get_to(r.min_t_h);
  j.at("mean_t_h").get_to(r.mean_t_h);
  j.at("collisions").get_to(r.collisions);
  j.at("episodes").get_to(r.episodes);
  r.steps = j.value("steps", std::int64_t{0});
  return r;
}

nlohmann::json to_json(const AdvReport& r) {
  nlohmann::json first = nlohmann::json::array();
  for (const auto& f : r.first_collision_episode) first.push_back(f ? nlohmann::json(*f) : nlohmann::json());
  return {{"adversaries", r.adversaries},
          {"episodes_per_adversary", r.episodes_per_adversary},
          {"collisions_total", r.collisions_total},
          {"collisions_mean", r.collisions_mean},
          {"episodes_until_first_collision",
           r.episodes_until_first_collision ? nlohmann::json(*r.episodes_until_first_collision)
                                            : nlohmann::json()},
          {"first_collision_episode", first},
          {"min_headway", r.min_headway}};
}

AdvReport adv_report_from_json(const nlohmann::json& j) {
  AdvReport r;
  j.at("adversaries").get_to(r.adversaries);
  j.at("episodes_per_adversary").get_to(r.episodes_per_adversary);
  j.at("collisions_total").get_to(r.collisions_total);
  j.at("collisions_mean").get_to(r.collisions_mean);
  const auto& until = j.at("episodes_until_first_collision");
  if (!until.is_null()) r.episodes_until_first_collision = until.get<double>();
  for (const auto& f : j.at("first_collision_episode")) {
    r.first_collision_episode.push_back(f.is_null() ? std::nullopt
                                                    : std::optional<std::int64_t>(f.get<std::int64_t>()));
  }
  j.at("min_headway").get_to(r.min_headway);
  return r;
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
  return quoted + "\"";
}

std::string fixed(double x, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << x;
  return s.str();
}

}  // namespace

ReportFiles emit_report(const std::vector<VariantReport>& reports, const std::string& out_dir,
                        const Provenance& provenance) {
  if (reports.empty()) throw std::invalid_argument("emit_report: no reports");
  std::filesystem::create_directories(out_dir);
  ReportFiles files{(std::filesystem::path(out_dir) / "metrics.csv").string(),
                    (std::filesystem::path(out_dir) / "headway.csv").string(),
                    (std::filesystem::path(out_dir) / "table.md").string()};

  std::ofstream metrics(files.metrics_csv);
  if (!metrics) throw std::runtime_error("cannot write " + files.metrics_csv);
  metrics << "# max_abs_v_rel = max |v_lead - v_host|; mean_v_rel = signed mean of v_lead - v_host\n";
  metrics << "# config_hash=" << provenance.config_hash << " seed=" << provenance.seed << '\n';
  metrics << kMetricsHeader << '\n';
  for (const auto& r : reports) {
    metrics << csv_field(r.label);
    if (r.naturalistic) {
      const NatReport& n = *r.naturalistic;
      metrics << ',' << format_double(n.min_x_rel) << ',' << format_double(n.mean_x_rel) << ','
              << format_double(n.max_abs_v_rel) << ',' << format_double(n.mean_v_rel) << ','
              << format_double(n.min_t_h) << ',' << format_double(n.mean_t_h) << ','
              << n.collisions << ',' << n.episodes;
    } else {
      metrics << ",,,,,,,,";
    }
    if (r.adversarial) {
      const AdvReport& a = *r.adversarial;
      metrics << ',' << format_double(a.collisions_mean) << ',' << a.collisions_total << ','
              << (a.episodes_until_first_collision ? format_double(*a.episodes_until_first_collision)
                                                   : std::string())
              << ',' << a.adversaries << ',' << a.episodes_per_adversary;
    } else {
      metrics << ",,,,,";
    }
    metrics << '\n';
  }
  if (!metrics) throw std::runtime_error("failed writing " + files.metrics_csv);

  // Per-episode headway series, one mean/std column pair per variant that has one.
  std::vector<const VariantReport*> with_adv;
  std::int64_t rows = 0;
  for (const auto& r : reports) {
    if (r.adversarial) {
      with_adv.push_back(&r);
      rows = std::max(rows, r.adversarial->episodes_per_adversary);
    }
  }
  std::ofstream headway(files.headway_csv);
  if (!headway) throw std::runtime_error("cannot write " + files.headway_csv);
  headway << "episode";
  for (const auto* r : with_adv) headway << ',' << csv_field(r->label + " mean") << ',' << csv_field(r->label + " std");
  headway << '\n';
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> sds;
  for (const auto* r : with_adv) {
    means.push_back(r->adversarial->min_headway_mean());
    sds.push_back(r->adversarial->min_headway_std());
  }
  for (std::int64_t e = 0; e < rows; ++e) {
    headway << (e + 1);
    for (std::size_t k = 0; k < with_adv.size(); ++k) {
      const auto idx = static_cast<std::size_t>(e);
      if (idx < means[k].size()) {
        headway << ',' << format_double(means[k][idx]) << ',' << format_double(sds[k][idx]);
      } else {
        headway << ",,";
      }
    }
    headway << '\n';
  }
  if (!headway) throw std::runtime_error("failed writing " + files.headway_csv);

  std::ofstream table(files.table_md);
  if (!table) throw std::runtime_error("cannot write " + files.table_md);
  table << "| Testing Framework | Parameter |";
  for (const auto& r : reports) table << ' ' << r.label << " |";
  table << "\n|---|---|";
  for (std::size_t i = 0; i < reports.size(); ++i) table << "---|";
  table << '\n';
  auto nat_row = [&](const char* name, auto getter) {
    table << "| Nat. Testing | " << name << " |";
    for (const auto& r : reports) table << ' ' << (r.naturalistic ? getter(*r.naturalistic) : "-") << " |";
    table << '\n';
  };
  nat_row("min. x_rel [m]", [](const NatReport& n) { return fixed(n.min_x_rel, 2); });
  nat_row("mean x_rel [m]", [](const NatReport& n) { return fixed(n.mean_x_rel, 2); });
  nat_row("max. v_rel [m/s]", [](const NatReport& n) { return fixed(n.max_abs_v_rel, 2); });
  nat_row("mean v_rel [m/s]", [](const NatReport& n) { return fixed(n.mean_v_rel, 4); });
  nat_row("min. t_h [s]", [](const NatReport& n) { return fixed(n.min_t_h, 2); });
  nat_row("mean t_h [s]", [](const NatReport& n) { return fixed(n.mean_t_h, 2); });
  nat_row("collisions", [](const NatReport& n) { return std::to_string(n.collisions); });
  auto adv_row = [&](const char* name, auto getter) {
    table << "| Adv. Testing | " << name << " |";
    for (const auto& r : reports) table << ' ' << (r.adversarial ? getter(*r.adversarial) : "-") << " |";
    table << '\n';
  };
  adv_row("collisions against adversaries", [](const AdvReport& a) { return fixed(a.collisions_mean, 1); });
  adv_row("episodes until collision", [](const AdvReport& a) {
    return a.episodes_until_first_collision ? fixed(*a.episodes_until_first_collision, 0) : std::string("-");
  });
  table << "\nconfig_hash " << provenance.config_hash << ", seed " << provenance.seed << '\n';
  if (!table) throw std::runtime_error("failed writing " + files.table_md);
  return files;
}

}  // namespace amdn
