#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "amdn/config.hpp"

using namespace amdn;
namespace fs = std::filesystem;

namespace {

std::string error_of(std::string_view text) {
  try {
    parse_config(text, "run.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
  const RunConfig c = parse_config("{}");
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.trainer.eta_kl, 1e-9);
  EXPECT_EQ(c.trainer.batch_size, 100);
  EXPECT_EQ(c.sim.dt, 0.04);
  EXPECT_EQ(c.expert_transitions(), 15000u);
  EXPECT_EQ(c.collision_count(), 440u);
  EXPECT_EQ(c.naturalistic.scenarios, 120);
}

TEST(Config, OverridesAreApplied) {
  const RunConfig c = parse_config(R"({"seed": 9, "scale": 0.5,
    "trainer": {"training_steps": 10, "eta_s": 0.001},
    "adversary": {"action_repeat": 5, "hidden_width": 16},
    "adversarial": {"episodes": 3}})");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.trainer.training_steps, 10);
  EXPECT_EQ(c.trainer.eta_s, 0.001);
  EXPECT_EQ(c.adversary.action_repeat, 5);
  EXPECT_EQ(c.adversary.critic.hidden_width, 16);
  EXPECT_EQ(c.adversarial.max_episodes, 3);
  EXPECT_EQ(c.expert_transitions(), 7500u);
  EXPECT_EQ(c.collision_count(), 220u);
}

TEST(Config, ScaledSizesNeverReachZero) {
  const RunConfig c = parse_config(R"({"scale": 1e-9})");
  EXPECT_EQ(c.expert_transitions(), 1u);
  EXPECT_EQ(c.collision_count(), 1u);
}

TEST(Config, UnknownKeysNameTheFieldPath) {
  EXPECT_NE(error_of(R"({"trainer": {"eta_kll": 1}})").find("trainer.eta_kll"), std::string::npos);
  EXPECT_NE(error_of(R"({"bogus": 1})").find("unknown key"), std::string::npos);
}

TEST(Config, TypeErrorsNameTheFieldPath) {
  const std::string e = error_of(R"({"sim": {"dt": "fast"}})");
  EXPECT_NE(e.find("sim.dt"), std::string::npos);
  EXPECT_NE(e.find("expected a number"), std::string::npos);
  EXPECT_NE(error_of(R"({"trainer": {"batch_size": 1.5}})").find("expected an integer"), std::string::npos);
}

TEST(Config, SyntaxErrorsReportLineAndColumn) {
  const std::string e = error_of("{\n  \"seed\": 1,\n  oops\n}");
  EXPECT_NE(e.find("run.json:3:"), std::string::npos) << e;
}

TEST(Config, SemanticValidation) {
  EXPECT_FALSE(error_of(R"({"scale": 0})").empty());
  EXPECT_FALSE(error_of(R"({"sim": {"friction_min": 2.0}})").empty());
  EXPECT_FALSE(error_of(R"({"trainer": {"batch_size": 0}})").empty());
}

TEST(Config, JsonRoundTripPreservesHash) {
  const RunConfig c = parse_config(R"({"seed": 4, "trainer": {"eta_kl": 1e-7}})");
  const RunConfig back = parse_config(to_json(c).dump());
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_NE(config_hash(c), config_hash(RunConfig{}));
}

TEST(Config, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, ManifestIsStableAndHashesOutputs) {
  const fs::path dir = fs::temp_directory_path() / "amdn_manifest_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "a.txt") << "abc";
  Manifest m{"train", {"--model", "amdn"}, RunConfig{}, {}, {{"a", "a.txt", ""}}};
  const std::string path = write_manifest(dir.string(), m);
  EXPECT_EQ(fs::path(path).filename(), "train.manifest.json");
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("outputs").at(0).at("sha256"), sha256_hex("abc"));
  EXPECT_EQ(j.at("config_hash"), config_hash(RunConfig{}));
  EXPECT_EQ(j.at("version"), kVersion);
  const std::string first = nlohmann::json(j).dump();
  write_manifest(dir.string(), m);
  std::ifstream again(path);
  EXPECT_EQ(nlohmann::json::parse(again).dump(), first);
  fs::remove_all(dir);
}

TEST(Config, LoadConfigReportsMissingFile) {
  EXPECT_THROW(load_config("/nonexistent/amdn.json"), std::exception);
}
