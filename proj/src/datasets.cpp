#include "amdn/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "amdn/format.hpp"

namespace amdn {

std::string_view to_string(DatasetKind kind) {
  return kind == DatasetKind::kExpert ? "expert" : "collision";
}

void Dataset::validate_for_training() const {
  if (rows.empty()) {
    throw std::invalid_argument(std::string(to_string(kind)) + " dataset is empty");
  }
  if (kind == DatasetKind::kCollision && rows.size() % kCollisionWindow != 0) {
    throw std::invalid_argument("collision dataset length is not a multiple of 25");
  }
}

Eigen::Vector3d normalize(const Observation& obs) {
  return {std::clamp(obs.v / kFeatureScale[0], -1.0, 1.0),
          std::clamp(obs.v_rel / kFeatureScale[1], -1.0, 1.0),
          std::clamp(obs.t_h / kFeatureScale[2], -1.0, 1.0)};
}

MatrixXd feature_matrix(const Dataset& ds, const std::vector<std::size_t>& indices) {
  MatrixXd x(static_cast<Eigen::Index>(indices.size()), 3);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = normalize(ds.rows[indices[i]].observation()).transpose();
  }
  return x;
}

VectorXd action_vector(const Dataset& ds, const std::vector<std::size_t>& indices) {
  VectorXd a(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    a(static_cast<Eigen::Index>(i)) = ds.rows[indices[i]].action;
  }
  return a;
}

Split split_80_20(const Dataset& ds, std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (n < 5) throw std::invalid_argument("split_80_20: need at least 5 transitions");
  Rng rng(seed);
  Split split;
  if (ds.kind == DatasetKind::kCollision) {
    if (n % kCollisionWindow != 0) {
      throw std::invalid_argument("split_80_20: collision dataset is not window-aligned");
    }
    std::vector<std::size_t> windows(n / kCollisionWindow);
    std::iota(windows.begin(), windows.end(), 0);
    std::shuffle(windows.begin(), windows.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(windows.size())));
    for (std::size_t w = 0; w < windows.size(); ++w) {
      auto& target = w < n_train ? split.train : split.validation;
      for (int k = 0; k < kCollisionWindow; ++k) target.push_back(windows[w] * kCollisionWindow + k);
    }
    return split;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

void write_csv(const Dataset& ds, std::ostream& out) {
  out << kDatasetHeader << '\n';
  for (const auto& t : ds.rows) {
    out << t.episode << ',' << t.step << ',' << format_double(t.v) << ',' << format_double(t.v_rel)
        << ',' << format_double(t.t_h) << ',' << format_double(t.action) << '\n';
  }
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open dataset for writing: " + path);
  write_csv(ds, out);
  if (!out) throw std::runtime_error("failed writing dataset: " + path);
}

Dataset read_csv(std::istream& in, DatasetKind kind) {
  Dataset ds;
  ds.kind = kind;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw DatasetFormatError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetHeader) {
    throw DatasetFormatError(1, "unexpected header, expected '" + std::string(kDatasetHeader) + "'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 6) {
      throw DatasetFormatError(line_no, "expected 6 fields, found " + std::to_string(fields.size()));
    }
    Transition t;
    long long episode = 0;
    long long step = 0;
    if (!parse_int(fields[0], episode) || !parse_int(fields[1], step) ||
        !parse_double(fields[2], t.v) || !parse_double(fields[3], t.v_rel) ||
        !parse_double(fields[4], t.t_h) || !parse_double(fields[5], t.action)) {
      throw DatasetFormatError(line_no, "malformed number");
    }
    t.episode = episode;
    t.step = step;
    if (!(t.action >= -1.0 && t.action <= 1.0)) {
      throw DatasetFormatError(line_no, "action outside [-1, 1]");
    }
    if (!(t.t_h >= 0.0 && t.t_h <= 10.0)) {
      throw DatasetFormatError(line_no, "t_h outside [0, 10]");
    }
    if (!std::isfinite(t.v) || !std::isfinite(t.v_rel)) {
      throw DatasetFormatError(line_no, "non-finite observation");
    }
    ds.rows.push_back(t);
  }
  return ds;
}

Dataset read_csv(const std::string& path, DatasetKind kind) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  return read_csv(in, kind);
}

nlohmann::json to_json(const DatasetMeta& meta) {
  return {{"kind", std::string(to_string(meta.kind))},
          {"seed", meta.seed},
          {"scale", meta.scale},
          {"transitions", meta.transitions},
          {"generator_config_hash", meta.generator_config_hash},
          {"feature_scale", kFeatureScale}};
}

}  // namespace amdn

namespace amdn {

Dataset generate_expert_dataset(const SimConfig& sim, const ExpertGains& gains,
                                const ExpertDataConfig& data, std::uint64_t seed) {
  sim.validate();
  gains.validate();
  if (data.transitions == 0 || data.episode_steps < 1) {
    throw std::invalid_argument("generate_expert_dataset: empty request");
  }
  Dataset ds;
  ds.kind = DatasetKind::kExpert;
  ds.seed = seed;
  ds.rows.reserve(data.transitions);
  Rng rng(seed);
  std::discrete_distribution<int> kind_dist({1.0, 3.0, 2.0});
  SimConfig episode_cfg = sim;
  episode_cfg.episode_len = data.episode_steps;
  for (std::int64_t episode = 0; ds.rows.size() < data.transitions; ++episode) {
    const auto kind = static_cast<ProfileKind>(kind_dist(rng));
    const LeadProfile profile = gen_lead_profile(kind, rng);
    WorldState world = init_episode(
        episode_cfg, rng, {profile.initial_velocity, profile.initial_velocity});
    Observation obs = observe(world, episode_cfg);
    while (ds.rows.size() < data.transitions) {
      const double pedal = expert_pedal(obs, gains, rng, true);
      const double t = static_cast<double>(world.step) * episode_cfg.dt;
      const double lead_accel = profile_accel(profile, t, world.v_lead, episode_cfg.dt);
      ds.rows.push_back({episode, world.step, obs.v, obs.v_rel, obs.t_h, pedal});
      const StepResult next = step(world, pedal, lead_accel, episode_cfg);
      world = next.world;
      obs = next.observation;
      if (next.event.episode_done) break;
    }
  }
  return ds;
}

}  // namespace amdn
