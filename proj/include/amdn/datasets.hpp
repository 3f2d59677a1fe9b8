#pragma once

// Observation-action datasets: recording, normalization, splits and CSV I/O.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "amdn/drivers.hpp"
#include "amdn/simulator.hpp"
#include "amdn/types.hpp"

namespace amdn {

inline constexpr int kCollisionWindow = 25;  // steps, one second at 25 Hz

/// Input scaling for (v, v_rel, t_h).
inline constexpr std::array<double, 3> kFeatureScale{40.0, 20.0, 10.0};

struct Transition {
  std::int64_t episode = 0;
  std::int64_t step = 0;
  double v = 0.0;
  double v_rel = 0.0;
  double t_h = 0.0;
  double action = 0.0;

  Observation observation() const { return {v, v_rel, t_h}; }

  friend bool operator==(const Transition&, const Transition&) = default;
};

enum class DatasetKind { kExpert, kCollision };

std::string_view to_string(DatasetKind kind);

struct Dataset {
  DatasetKind kind = DatasetKind::kExpert;
  std::uint64_t seed = 0;
  std::vector<Transition> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  /// Throws unless the dataset is usable for training.
  void validate_for_training() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Raised for malformed dataset files; carries the 1-based line number.
class DatasetFormatError : public std::runtime_error {
 public:
  DatasetFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// (v/40, v_rel/20, t_h/10), each clipped to [-1, 1].
Eigen::Vector3d normalize(const Observation& obs);

/// Normalized features for the given rows, one row per sample.
MatrixXd feature_matrix(const Dataset& ds, const std::vector<std::size_t>& indices);
VectorXd action_vector(const Dataset& ds, const std::vector<std::size_t>& indices);

/// Seeded 80/20 split. Collision datasets are split by whole windows.
Split split_80_20(const Dataset& ds, std::uint64_t seed);

inline constexpr const char* kDatasetHeader = "episode,step,v,v_rel,t_h,action";

void write_csv(const Dataset& ds, std::ostream& out);
void write_csv(const Dataset& ds, const std::string& path);
Dataset read_csv(std::istream& in, DatasetKind kind = DatasetKind::kExpert);
Dataset read_csv(const std::string& path, DatasetKind kind = DatasetKind::kExpert);

/// Sidecar metadata written next to a dataset CSV.
struct DatasetMeta {
  DatasetKind kind = DatasetKind::kExpert;
  std::uint64_t seed = 0;
  double scale = 1.0;
  std::size_t transitions = 0;
  std::string generator_config_hash;
};

nlohmann::json to_json(const DatasetMeta& meta);

struct ExpertDataConfig {
  std::size_t transitions = 15000;
  std::int64_t episode_steps = 1500;  // 60 s per recorded drive
};

/// Records the noisy scripted expert following random naturalistic profiles.
Dataset generate_expert_dataset(const SimConfig& sim, const ExpertGains& gains,
                                const ExpertDataConfig& data, std::uint64_t seed);

}  // namespace amdn
