#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "adarec/pipeline.hpp"
#include "fixtures.hpp"

using namespace adarec;
using pipeline::CliError;
using pipeline::RunConfig;

namespace {

CliError::Kind config_kind(const nlohmann::json& doc) {
  try {
    RunConfig::from_json(doc, "/tmp").validate();
  } catch (const CliError& e) {
    return e.code();
  }
  FAIL("no CliError thrown for " << doc.dump());
  return CliError::Kind::IoError;
}

}  // namespace

TEST_CASE("config parsing resolves paths and keeps defaults") {
  const auto c = RunConfig::from_json({{"train", "d/train.csv"}, {"test", "/abs/test.csv"}, {"eta1", 50}, {"eta2", 20}},
                                      "/base");
  CHECK(c.train == std::filesystem::path("/base/d/train.csv"));
  CHECK(c.test == std::filesystem::path("/abs/test.csv"));
  CHECK(c.k == 5);
  CHECK(c.p == 15);
  CHECK(c.alpha == doctest::Approx(0.1));
  CHECK(c.backend == "mock");
  const auto again = RunConfig::from_json(c.to_json(), "/base");
  CHECK(again.to_json() == c.to_json());
}

TEST_CASE("config errors") {
  CHECK(config_kind({{"api_key", "sk-123"}}) == CliError::Kind::ConfigError);
  CHECK(config_kind({{"colour", "blue"}}) == CliError::Kind::ConfigError);
  CHECK(config_kind({{"eta1", 10}, {"eta2", 10}}) == CliError::Kind::ConfigError);
  CHECK(config_kind({{"eta1", 10}, {"eta2", 4}, {"k", 5}}) == CliError::Kind::ConfigError);
  CHECK(config_kind({{"alpha", 1.5}}) == CliError::Kind::ConfigError);
  CHECK(config_kind({{"backend", "replay"}}) == CliError::Kind::ConfigError);
  CHECK(config_kind({{"backend", "carrier-pigeon"}}) == CliError::Kind::ConfigError);
  CHECK(config_kind({{"eta1", "many"}}) == CliError::Kind::ConfigError);
}

TEST_CASE("live backend requires a base url") {
  auto c = RunConfig::from_json({{"backend", "live"}});
  CHECK_THROWS_AS(pipeline::make_backend(c), CliError);
}

TEST_CASE("stats and synth commands write their artifacts") {
  testing::TempDir dir;
  synth::FixtureOptions fo;
  fo.n_train = 120;
  fo.n_test = 20;
  auto c = testing::pipeline_config(dir.path(), fo, 100, 50);
  std::ostringstream log;
  pipeline::run_stats(c, log);
  CHECK(std::filesystem::exists(c.out / "summaries.json"));
  const auto manifest = nlohmann::json::parse(testing::read_text(c.out / "manifest.json"));
  CHECK(manifest.at("command") == "stats");
  CHECK(manifest.at("version") == pipeline::kVersion);
  CHECK_FALSE(manifest.contains("timestamp"));

  c.out = dir.path() / "synth";
  c.fixture = fo;
  pipeline::run_synth(c, log);
  for (const char* f : {"train.csv", "test.csv", "schema.json", "dag.json", "scm.json"})
    CHECK(std::filesystem::exists(c.out / f));
  const auto schema = dataset::FeatureSchema::load(c.out / "schema.json");
  CHECK(dataset::load_csv(c.out / "train.csv", schema).size() == 120);
}

TEST_CASE("users file restricts the test users") {
  testing::TempDir dir;
  synth::FixtureOptions fo;
  fo.n_train = 120;
  fo.n_test = 20;
  auto c = testing::pipeline_config(dir.path(), fo, 100, 50);
  testing::write_text(dir.path() / "users.txt", "u00125\n\nu00122\n");
  c.users = dir.path() / "users.txt";
  const auto in = pipeline::load_inputs(c);
  CHECK(pipeline::selected_users(c, in.test) == std::vector<std::string>{"u00122", "u00125"});
  testing::write_text(dir.path() / "users.txt", "nobody\n");
  CHECK_THROWS_AS(pipeline::selected_users(c, in.test), CliError);
}

TEST_CASE("recommend without signal scores near chance") {
  testing::TempDir dir;
  synth::FixtureOptions fo;
  fo.n_train = 400;
  fo.n_test = 200;
  fo.causal_weight = 0.0;
  fo.label_signal = 0.0;
  auto c = testing::pipeline_config(dir.path(), fo, 300, 150);
  c.ablation.factor = false;
  std::ostringstream log;
  pipeline::run_recommend(c, log);
  const auto m = pipeline::run_evaluate_binary(c, c.out / "predictions.json", log);
  CHECK(m.n == 200);
  CHECK(nlohmann::json::parse(testing::read_text(c.out / "metrics.json")).at("n_failed") == 0);
  CHECK(m.f1 > 38.0);
  CHECK(m.f1 < 62.0);
}

TEST_CASE("missing prediction artifact") {
  testing::TempDir dir;
  synth::FixtureOptions fo;
  fo.n_train = 60;
  fo.n_test = 10;
  auto c = testing::pipeline_config(dir.path(), fo, 50, 20);
  std::ostringstream log;
  try {
    pipeline::run_evaluate(c, log);
    FAIL("expected MissingArtifact");
  } catch (const CliError& e) {
    CHECK(e.code() == CliError::Kind::MissingArtifact);
  }
}
