#pragma once

// Run configuration, content hashing and output manifests for the CLI.
//
// Config files are JSON. Every key is optional; unknown keys are rejected so a
// typo never silently falls back to a default.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "amdn/adversary.hpp"
#include "amdn/datasets.hpp"
#include "amdn/drivers.hpp"
#include "amdn/eval.hpp"
#include "amdn/simulator.hpp"
#include "amdn/trainer.hpp"

namespace amdn {

inline constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NaturalisticConfig {
  std::uint64_t scenario_seed = 7;
  int scenarios = 120;
};

struct RunConfig {
  std::uint64_t seed = 1;
  double scale = 1.0;  // multiplies dataset sizes
  std::string out = "out";
  SimConfig sim;
  ExpertGains expert;
  ExpertDataConfig expert_data;
  Hyperparams trainer;
  AdvConfig adversary;
  CollectionConfig collection;
  NaturalisticConfig naturalistic;
  AdvTestConfig adversarial;

  void validate() const;

  /// Dataset sizes after applying `scale`, never below one unit.
  std::size_t expert_transitions() const;
  std::size_t collision_count() const;
};

/// Parses config text over the defaults. `source` names the file in errors.
/// Syntax errors report line and column; semantic errors name the field path.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

nlohmann::json to_json(const RunConfig& c);

/// SHA-256 of the canonical (sorted, compact) JSON form.
std::string config_hash(const RunConfig& c);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

struct ManifestEntry {
  std::string name;
  std::string path;
  std::string sha256;
};

/// Written next to every command's outputs. Holds no timestamps, so reruns
/// with identical inputs produce identical bytes.
struct Manifest {
  std::string command;
  std::vector<std::string> arguments;  // effective flags, enough to re-run
  RunConfig config;
  std::vector<ManifestEntry> inputs;
  std::vector<ManifestEntry> outputs;  // paths relative to the output dir
};

nlohmann::json to_json(const Manifest& m);

/// Hashes the listed files and writes `<out_dir>/<command>.manifest.json`, so
/// several commands can share one output directory. Returns the manifest path.
std::string write_manifest(const std::string& out_dir, Manifest manifest);

}  // namespace amdn
