// amdn: command-line driver for the data, training and evaluation pipeline.
//
// Every command reads an optional JSON config, applies flag overrides, writes
// its outputs into --out together with <command>.manifest.json, and reports
// failures as a single JSON line on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "amdn/config.hpp"
#include "amdn/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError {
  std::string kind;
  std::string message;
  std::string input;  // artifact name for missing/invalid inputs
};

[[noreturn]] void fail(std::string kind, std::string message, std::string input = {}) {
  throw CliError{std::move(kind), std::move(message), std::move(input)};
}

int report_error(const CliError& e) {
  json line = {{"error", e.kind}, {"message", e.message}};
  if (!e.input.empty()) line["input"] = e.input;
  std::cerr << line.dump() << std::endl;
  return e.kind == "usage" ? 2 : 1;
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> scale;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file (defaults apply when absent)");
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--scale", c.scale, "Dataset scale factor")->check(CLI::PositiveNumber);
}

amdn::RunConfig effective_config(const Common& c) {
  amdn::RunConfig config;
  if (!c.config_path.empty()) {
    if (!fs::exists(c.config_path)) fail("missing_input", "config file not found: " + c.config_path, "config");
    config = amdn::load_config(c.config_path);
  }
  if (c.seed) config.seed = *c.seed;
  if (c.out) config.out = *c.out;
  if (c.scale) config.scale = *c.scale;
  config.validate();
  fs::create_directories(config.out);
  return config;
}

void require(const std::string& path, const std::string& name, const std::string& flag) {
  if (path.empty()) fail("missing_input", "required input '" + name + "' not given (use " + flag + ")", name);
  if (!fs::exists(path)) fail("missing_input", "input '" + name + "' not found: " + path, name);
}

std::string out_file(const amdn::RunConfig& config, const std::string& name) {
  return (fs::path(config.out) / name).string();
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("io", "cannot write " + path);
  out << j.dump(2) << "\n";
}

json read_json(const std::string& path, const std::string& name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("missing_input", "cannot open " + path, name);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail("invalid_input", path + ": " + e.what(), name);
  }
}

amdn::Dataset load_dataset(const std::string& path, const std::string& name, amdn::DatasetKind kind) {
  try {
    return amdn::read_csv(path, kind);
  } catch (const amdn::DatasetFormatError& e) {
    fail("invalid_input", path + ": " + e.what(), name);
  }
}

amdn::Model load_follower(const std::string& path, const std::string& name) {
  try {
    return amdn::load_model(path);
  } catch (const std::exception& e) {
    fail("invalid_input", path + ": " + e.what(), name);
  }
}

// A follower for evaluation: either a checkpoint or the scripted expert.
struct Follower {
  std::string label;
  amdn::PedalPolicy policy;
  std::vector<amdn::ManifestEntry> inputs;
};

Follower make_follower(const amdn::RunConfig& config, const std::string& checkpoint,
                       bool scripted_expert, const std::string& inference) {
  if (scripted_expert) {
    if (!checkpoint.empty()) fail("usage", "--checkpoint and --scripted-expert are exclusive");
    return {"Expert", amdn::make_expert_policy(config.expert), {}};
  }
  require(checkpoint, "checkpoint", "--checkpoint or --scripted-expert");
  amdn::Model model = load_follower(checkpoint, "checkpoint");
  model.variant.inference = amdn::inference_mode_from_string(inference);
  const std::string label = model.variant.label();
  return {label, amdn::make_model_policy(std::move(model), amdn::inference_mode_from_string(inference)),
          {{"checkpoint", checkpoint, ""}}};
}

amdn::Manifest manifest_for(const std::string& command, const std::vector<std::string>& args,
                            const amdn::RunConfig& config) {
  amdn::Manifest m;
  m.command = command;
  m.arguments = args;
  m.config = config;
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial mixture density network pipeline for longitudinal car following"};
  app.require_subcommand(1);
  const std::vector<std::string> args(argv + 1, argv + argc);

  Common common;
  std::string model_name = "amdn";
  std::string inference = "mean";
  std::string expert_path;
  std::string collisions_path;
  std::string follower_path;
  std::string checkpoint_path;
  std::optional<std::int64_t> steps;
  std::optional<int> episodes;
  std::optional<int> adversaries;
  bool scripted_expert = false;
  bool keep_logs = false;
  std::vector<std::string> report_inputs;

  const std::vector<std::string> models{"ffn", "mdn", "amdn-nokl", "amdn"};
  const std::vector<std::string> modes{"mean", "sampling"};

  auto* gen_expert = app.add_subcommand("gen-expert", "Record the scripted expert dataset");
  add_common(gen_expert, common);

  auto* train_cmd = app.add_subcommand("train", "Train a follower model");
  add_common(train_cmd, common);
  train_cmd->add_option("--model", model_name, "Model variant")->check(CLI::IsMember(models));
  train_cmd->add_option("--expert", expert_path, "Expert dataset CSV");
  train_cmd->add_option("--collisions", collisions_path, "Collision dataset CSV (amdn variants)");
  train_cmd->add_option("--steps", steps, "Training steps override")->check(CLI::NonNegativeNumber);

  auto* gen_collisions = app.add_subcommand("gen-collisions", "Collect collision windows with adversaries");
  add_common(gen_collisions, common);
  gen_collisions->add_option("--follower", follower_path, "Imitation follower checkpoint");
  gen_collisions->add_option("--inference", inference, "Follower inference mode")->check(CLI::IsMember(modes));

  auto* eval_nat = app.add_subcommand("eval-nat", "Naturalistic test suite");
  auto* eval_adv = app.add_subcommand("eval-adv", "Adversarial test campaign");
  for (auto* cmd : {eval_nat, eval_adv}) {
    add_common(cmd, common);
    cmd->add_option("--checkpoint", checkpoint_path, "Follower checkpoint");
    cmd->add_flag("--scripted-expert", scripted_expert, "Evaluate the scripted expert instead");
    cmd->add_option("--inference", inference, "Inference mode")->check(CLI::IsMember(modes));
    cmd->add_option("--episodes", episodes, "Scenarios (eval-nat) or episodes per adversary (eval-adv)")
        ->check(CLI::PositiveNumber);
  }
  eval_nat->add_flag("--logs", keep_logs, "Write one CSV trace per scenario");
  eval_adv->add_option("--adversaries", adversaries, "Number of adversaries")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Merge evaluation outputs into the results table");
  add_common(report, common);
  report->add_option("--input", report_inputs, "Evaluation output directory (repeatable, one per variant)");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      fail("usage", e.what());
    }

    const amdn::RunConfig config = effective_config(common);
    const std::string command = app.get_subcommands().front()->get_name();
    amdn::Manifest manifest = manifest_for(command, args, config);

    if (command == "gen-expert") {
      const amdn::Dataset ds = amdn::stage_expert_dataset(config);
      amdn::write_csv(ds, out_file(config, "expert.csv"));
      amdn::DatasetMeta meta{ds.kind, ds.seed, config.scale, ds.size(), amdn::config_hash(config)};
      write_json(amdn::to_json(meta), out_file(config, "expert.meta.json"));
      manifest.outputs = {{"expert", "expert.csv", ""}, {"expert_meta", "expert.meta.json", ""}};

    } else if (command == "train") {
      const amdn::ModelVariant variant{amdn::model_tag_from_string(model_name), amdn::InferenceMode::kMean};
      require(expert_path, "expert", "--expert");
      if (amdn::uses_collisions(variant.tag)) require(collisions_path, "collisions", "--collisions");
      const amdn::Dataset expert = load_dataset(expert_path, "expert", amdn::DatasetKind::kExpert);
      manifest.inputs.push_back({"expert", expert_path, ""});
      std::optional<amdn::Dataset> collisions;
      if (amdn::uses_collisions(variant.tag)) {
        collisions = load_dataset(collisions_path, "collisions", amdn::DatasetKind::kCollision);
        manifest.inputs.push_back({"collisions", collisions_path, ""});
      }
      amdn::RunConfig train_config = config;
      if (steps) train_config.trainer.training_steps = *steps;
      manifest.config = train_config;
      const amdn::TrainResult result =
          amdn::stage_train(train_config, variant, expert, collisions ? &*collisions : nullptr);
      amdn::save_model(result.model, out_file(config, "checkpoint.json"));
      amdn::write_train_log(result.log, out_file(config, "train_log.csv"));
      manifest.outputs = {{"checkpoint", "checkpoint.json", ""}, {"train_log", "train_log.csv", ""}};

    } else if (command == "gen-collisions") {
      require(follower_path, "follower", "--follower");
      const amdn::Model follower = load_follower(follower_path, "follower");
      manifest.inputs.push_back({"follower", follower_path, ""});
      amdn::CollectionStats stats;
      const amdn::Dataset ds = amdn::stage_collisions(
          config, amdn::make_model_policy(follower, amdn::inference_mode_from_string(inference)), &stats);
      amdn::write_csv(ds, out_file(config, "collisions.csv"));
      json meta = amdn::to_json(amdn::DatasetMeta{ds.kind, ds.seed, config.scale, ds.size(),
                                                  amdn::config_hash(config)});
      meta["episodes"] = stats.episodes;
      meta["collisions"] = stats.collisions;
      meta["collisions_per_adversary"] = stats.collisions_per_adversary;
      write_json(meta, out_file(config, "collisions.meta.json"));
      manifest.outputs = {{"collisions", "collisions.csv", ""}, {"collisions_meta", "collisions.meta.json", ""}};

    } else if (command == "eval-nat") {
      const Follower f = make_follower(config, checkpoint_path, scripted_expert, inference);
      manifest.inputs = f.inputs;
      const amdn::ScenarioSet scenarios = amdn::stage_scenarios(config, episodes.value_or(0));
      const amdn::NatResult result = amdn::stage_naturalistic(config, f.policy, scenarios, keep_logs);
      write_json({{"label", f.label}, {"report", amdn::to_json(result.report)}},
                 out_file(config, "nat_report.json"));
      write_json(scenarios, out_file(config, "scenarios.json"));
      manifest.outputs = {{"nat_report", "nat_report.json", ""}, {"scenarios", "scenarios.json", ""}};
      if (keep_logs) {
        fs::create_directories(fs::path(config.out) / "logs");
        for (std::size_t i = 0; i < result.logs.size(); ++i) {
          const std::string name = "logs/scenario_" + std::to_string(i) + ".csv";
          amdn::write_episode_log(result.logs[i], out_file(config, name));
          manifest.outputs.push_back({"log", name, ""});
        }
      }

    } else if (command == "eval-adv") {
      const Follower f = make_follower(config, checkpoint_path, scripted_expert, inference);
      manifest.inputs = f.inputs;
      amdn::RunConfig adv_config = config;
      if (episodes) adv_config.adversarial.max_episodes = *episodes;
      if (adversaries) adv_config.adversarial.adversaries = *adversaries;
      manifest.config = adv_config;
      const amdn::AdvReport result = amdn::stage_adversarial(adv_config, f.policy);
      write_json({{"label", f.label}, {"report", amdn::to_json(result)}}, out_file(config, "adv_report.json"));
      manifest.outputs = {{"adv_report", "adv_report.json", ""}};

    } else if (command == "report") {
      if (report_inputs.empty()) fail("missing_input", "required input 'reports' not given (use --input)", "reports");
      std::vector<amdn::VariantReport> reports;
      auto find_label = [&](const std::string& label) -> amdn::VariantReport& {
        for (auto& r : reports) {
          if (r.label == label) return r;
        }
        reports.push_back({label, std::nullopt, std::nullopt});
        return reports.back();
      };
      for (const auto& dir : report_inputs) {
        const std::string nat_path = (fs::path(dir) / "nat_report.json").string();
        const std::string adv_path = (fs::path(dir) / "adv_report.json").string();
        const bool has_nat = fs::exists(nat_path);
        const bool has_adv = fs::exists(adv_path);
        if (!has_nat && !has_adv) fail("missing_input", "no nat_report.json or adv_report.json in " + dir, "reports");
        if (has_nat) {
          const json j = read_json(nat_path, "reports");
          find_label(j.at("label").get<std::string>()).naturalistic = amdn::nat_report_from_json(j.at("report"));
          manifest.inputs.push_back({"nat_report", nat_path, ""});
        }
        if (has_adv) {
          const json j = read_json(adv_path, "reports");
          find_label(j.at("label").get<std::string>()).adversarial = amdn::adv_report_from_json(j.at("report"));
          manifest.inputs.push_back({"adv_report", adv_path, ""});
        }
      }
      amdn::emit_report(reports, config.out, {amdn::config_hash(config), config.seed});
      manifest.outputs = {{"metrics", "metrics.csv", ""}, {"headway", "headway.csv", ""}, {"table", "table.md", ""}};
    }

    const std::string path = amdn::write_manifest(config.out, manifest);
    std::cout << path << std::endl;
    return 0;
  } catch (const CliError& e) {
    return report_error(e);
  } catch (const amdn::ConfigError& e) {
    return report_error({"config", e.what(), "config"});
  } catch (const amdn::CollectionBudgetError& e) {
    return report_error({"collection_budget", e.what(), ""});
  } catch (const amdn::AdversaryDivergedError& e) {
    return report_error({"diverged", e.what(), ""});
  } catch (const amdn::NonFiniteLossError& e) {
    return report_error({"non_finite_loss", e.what(), ""});
  } catch (const std::invalid_argument& e) {
    return report_error({"invalid_input", e.what(), ""});
  } catch (const json::exception& e) {
    return report_error({"invalid_input", e.what(), ""});
  } catch (const std::exception& e) {
    return report_error({"internal", e.what(), ""});
  }
}
