#include "amdn/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace amdn {

namespace {

using nlohmann::json;

// Binds the members of one JSON object to C++ fields, tracking which keys
// were consumed so leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  void number(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  template <typename Int>
  void integer(const char* key, Int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(field(key), "expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned()) {
          out = static_cast<Int>(v->get<std::uint64_t>());
          return;
        }
        if (v->get<std::int64_t>() < 0) fail(field(key), "expected a non-negative integer");
      }
      out = static_cast<Int>(v->get<std::int64_t>());
    }
  }

  void string(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <typename Fn>
  void section(const char* key, Fn&& fn) {
    if (const json* v = take(key)) {
      Section child(*v, field(key));
      fn(child);
      child.finish();
    }
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (seen_.count(key) == 0) fail(field(key.c_str()), "unknown key");
    }
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw ConfigError("field '" + field + "': " + what);
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void bind(Section& s, SimConfig& c) {
  s.number("dt", c.dt);
  s.number("v_max", c.v_max);
  s.number("gas_accel_max", c.gas_accel_max);
  s.number("brake_decel_max_factor", c.brake_decel_max_factor);
  s.number("friction_min", c.friction_min);
  s.number("friction_max", c.friction_max);
  s.integer("episode_len", c.episode_len);
  s.number("headway_cap", c.headway_cap);
  s.number("v_eps", c.v_eps);
}

void bind(Section& s, ExpertGains& g) {
  s.number("k_h", g.k_h);
  s.number("k_v", g.k_v);
  s.number("target_headway", g.target_headway);
  s.number("noise_std", g.noise_std);
}

void bind(Section& s, Hyperparams& h) {
  s.number("eta_s", h.eta_s);
  s.number("eta_c", h.eta_c);
  s.number("eta_kl", h.eta_kl);
  s.integer("batch_size", h.batch_size);
  s.integer("training_steps", h.training_steps);
  s.integer("log_interval", h.log_interval);
  s.integer("hidden_layers", h.trunk.hidden_layers);
  s.integer("hidden_width", h.trunk.hidden_width);
}

void bind(Section& s, AdvConfig& a) {
  s.integer("hidden_layers", a.actor.hidden_layers);
  s.integer("hidden_width", a.actor.hidden_width);
  a.critic.hidden_layers = a.actor.hidden_layers;
  a.critic.hidden_width = a.actor.hidden_width;
  s.number("gamma", a.gamma);
  s.number("lr_actor", a.lr_actor);
  s.number("lr_critic", a.lr_critic);
  s.number("entropy_weight", a.entropy_weight);
  s.number("reward_scale", a.reward_scale);
  s.integer("episode_steps", a.episode_steps);
  s.integer("action_repeat", a.action_repeat);
}

void bind(Section& s, CollectionConfig& c) {
  s.integer("n_collisions", c.n_collisions);
  s.integer("max_episodes", c.max_episodes);
  s.integer("rate_check_after", c.rate_check_after);
  s.number("min_collision_rate", c.min_collision_rate);
}

void bind(Section& s, NaturalisticConfig& n) {
  s.integer("scenario_seed", n.scenario_seed);
  s.integer("scenarios", n.scenarios);
}

void bind(Section& s, AdvTestConfig& a) {
  s.integer("adversaries", a.adversaries);
  s.integer("episodes", a.max_episodes);
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// The training seed is derived from the run seed, so it is not a config key.
json trainer_json(const Hyperparams& h) {
  json j = to_json(h);
  j.erase("seed");
  return j;
}

std::size_t scaled(std::size_t base, double scale) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(base) * scale)));
}

}  // namespace

void RunConfig::validate() const {
  try {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("field 'scale': must be > 0");
    if (out.empty()) throw ConfigError("field 'out': must not be empty");
    sim.validate();
    expert.validate();
    if (expert_data.transitions == 0 || expert_data.episode_steps < 1) {
      throw ConfigError("field 'expert_data': transitions and episode_steps must be >= 1");
    }
    trainer.validate();
    adversary.validate();
    if (collection.n_collisions == 0 || collection.max_episodes < 1) {
      throw ConfigError("field 'collection': n_collisions and max_episodes must be >= 1");
    }
    if (naturalistic.scenarios < 1) throw ConfigError("field 'naturalistic.scenarios': must be >= 1");
    if (adversarial.adversaries < 1 || adversarial.max_episodes < 1) {
      throw ConfigError("field 'adversarial': adversaries and episodes must be >= 1");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::size_t RunConfig::expert_transitions() const { return scaled(expert_data.transitions, scale); }
std::size_t RunConfig::collision_count() const { return scaled(collection.n_collisions, scale); }

RunConfig parse_config(std::string_view text, const std::string& source) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_and_column(text, e.byte);
    std::ostringstream msg;
    msg << source << ":" << line << ":" << column << ": syntax error";
    throw ConfigError(msg.str());
  }

  RunConfig c;
  try {
    Section s(root, "");
    s.integer("seed", c.seed);
    s.number("scale", c.scale);
    s.string("out", c.out);
    s.section("sim", [&](Section& x) { bind(x, c.sim); });
    s.section("expert", [&](Section& x) { bind(x, c.expert); });
    s.section("expert_data", [&](Section& x) {
      x.integer("transitions", c.expert_data.transitions);
      x.integer("episode_steps", c.expert_data.episode_steps);
    });
    s.section("trainer", [&](Section& x) { bind(x, c.trainer); });
    s.section("adversary", [&](Section& x) {
      bind(x, c.adversary);
      c.adversarial.adversary = c.adversary;
    });
    s.section("collection", [&](Section& x) { bind(x, c.collection); });
    s.section("naturalistic", [&](Section& x) { bind(x, c.naturalistic); });
    s.section("adversarial", [&](Section& x) { bind(x, c.adversarial); });
    s.finish();
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

json to_json(const RunConfig& c) {
  const auto& s = c.sim;
  return {
      {"seed", c.seed},
      {"scale", c.scale},
      {"out", c.out},
      {"sim",
       {{"dt", s.dt},
        {"v_max", s.v_max},
        {"gas_accel_max", s.gas_accel_max},
        {"brake_decel_max_factor", s.brake_decel_max_factor},
        {"friction_min", s.friction_min},
        {"friction_max", s.friction_max},
        {"episode_len", s.episode_len},
        {"headway_cap", s.headway_cap},
        {"v_eps", s.v_eps}}},
      {"expert",
       {{"k_h", c.expert.k_h},
        {"k_v", c.expert.k_v},
        {"target_headway", c.expert.target_headway},
        {"noise_std", c.expert.noise_std}}},
      {"expert_data",
       {{"transitions", c.expert_data.transitions}, {"episode_steps", c.expert_data.episode_steps}}},
      {"trainer", trainer_json(c.trainer)},
      {"adversary", to_json(c.adversary)},
      {"collection",
       {{"n_collisions", c.collection.n_collisions},
        {"max_episodes", c.collection.max_episodes},
        {"rate_check_after", c.collection.rate_check_after},
        {"min_collision_rate", c.collection.min_collision_rate}}},
      {"naturalistic",
       {{"scenario_seed", c.naturalistic.scenario_seed}, {"scenarios", c.naturalistic.scenarios}}},
      {"adversarial", {{"adversaries", c.adversarial.adversaries}, {"episodes", c.adversarial.max_episodes}}},
  };
}

std::string config_hash(const RunConfig& c) { return sha256_hex(to_json(c).dump()); }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

json to_json(const Manifest& m) {
  auto entries = [](const std::vector<ManifestEntry>& list) {
    json out = json::array();
    for (const auto& e : list) out.push_back({{"name", e.name}, {"path", e.path}, {"sha256", e.sha256}});
    return out;
  };
  return {{"command", m.command},
          {"arguments", m.arguments},
          {"version", kVersion},
          {"seed", m.config.seed},
          {"config_hash", config_hash(m.config)},
          {"config", to_json(m.config)},
          {"inputs", entries(m.inputs)},
          {"outputs", entries(m.outputs)}};
}

std::string write_manifest(const std::string& out_dir, Manifest manifest) {
  namespace fs = std::filesystem;
  for (auto& e : manifest.inputs) {
    if (e.sha256.empty()) e.sha256 = sha256_file(e.path);
  }
  for (auto& e : manifest.outputs) {
    if (e.sha256.empty()) e.sha256 = sha256_file((fs::path(out_dir) / e.path).string());
  }
  const std::string path = (fs::path(out_dir) / (manifest.command + ".manifest.json")).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(manifest).dump(2) << "\n";
  return path;
}

}  // namespace amdn
