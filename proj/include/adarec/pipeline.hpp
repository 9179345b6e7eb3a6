#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adarec/causal.hpp"
#include "adarec/dataset.hpp"
#include "adarec/error.hpp"
#include "adarec/evaluation.hpp"
#include "adarec/importance.hpp"
#include "adarec/llm_client.hpp"
#include "adarec/profiling.hpp"
#include "adarec/reasoning.hpp"
#include "adarec/retrieval.hpp"
#include "adarec/synth.hpp"

namespace adarec::pipeline {

class CliError : public Error {
 public:
  enum class Kind { ConfigError, IoError, MissingArtifact };
  CliError(Kind kind, const std::string& message);
  Kind code() const noexcept { return code_; }

 private:
  Kind code_;
};

inline constexpr const char* kVersion = "1.0.0";

struct RunConfig {
  // Paths; relative entries are resolved against the config file's directory.
  std::filesystem::path train, test, schema;
  std::filesystem::path profiles;         // generated narrative profiles (JSON lines), optional
  std::filesystem::path expert_profiles;  // optional
  std::filesystem::path cassette;         // replay / record backends
  std::filesystem::path out = "out";
  std::filesystem::path users;  // optional newline-separated test user ids
  std::filesystem::path scm;    // synth: optional SCM spec; the pipeline fixture otherwise

  reasoning::TaskSpec task = reasoning::default_binary_task();

  std::size_t k = 5;
  std::size_t eta1 = 2000;
  std::size_t eta2 = 1000;
  double alpha = 0.1;
  std::size_t p = 15;
  int bins = 10;
  int max_depth = 3;
  int max_path_length = -1;
  int retries = 2;
  bool standardize = true;
  reasoning::Ablation ablation;

  // backend: mock | live | replay | record
  std::string backend = "mock";
  std::string base_url;
  std::string model = "mock-model";
  int timeout_secs = 60;
  std::size_t max_in_flight = 4;
  std::string mock_mode = "neighbor_majority";
  std::string record_inner = "live";  // backend consulted by `record` on a miss
  double temperature = 0.0;
  int max_tokens = 1000;

  unsigned threads = 1;
  std::uint64_t seed = 42;
  synth::FixtureOptions fixture;

  void validate() const;
  static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Backend stack described by the config (bounded by max_in_flight). The live
// backend reads its key from ADAREC_API_KEY.
std::shared_ptr<llm::Backend> make_backend(const RunConfig& config);

struct Inputs {
  dataset::FeatureSchema schema;
  dataset::Dataset train;
  dataset::Dataset test;
};
Inputs load_inputs(const RunConfig& config);

// Test users selected by the config's users file (all test users otherwise),
// in test-set order.
std::vector<std::string> selected_users(const RunConfig& config, const dataset::Dataset& test);

// Everything the reasoning prompt needs about one query user except profiles.
struct UserAnalysis {
  std::string user_id;
  retrieval::Stages stages;
  std::vector<importance::MIScore> mi;
  causal::PartialAncestralGraph pag{std::vector<std::string>{}};
  causal::CausalFeatureSet features;
  retrieval::NeighborSet cases;
};

class Context {
 public:
  Context(const RunConfig& config, Inputs inputs);

  const RunConfig& config() const noexcept { return config_; }
  const Inputs& inputs() const noexcept { return inputs_; }

  // Retrieval stages, MI on the eta1 pool, FCI on the eta2 set, cases.
  UserAnalysis analyze(const std::string& user_id, bool with_causal = true) const;

 private:
  RunConfig config_;
  Inputs inputs_;
  retrieval::VectorLayout layout_;
  std::vector<retrieval::NumericVector> train_vectors_;
  retrieval::LabelMap labels_;
};

// Each command writes its artifacts plus manifest.json under config.out and
// prints a short summary to `log`.
void run_stats(const RunConfig& config, std::ostream& log);
void run_profile(const RunConfig& config, std::ostream& log);
void run_causal(const RunConfig& config, std::ostream& log);
void run_recommend(const RunConfig& config, std::ostream& log);
evaluation::BinaryMetrics run_evaluate_binary(const RunConfig& config, const std::filesystem::path& predictions,
                                               std::ostream& log);
void run_evaluate(const RunConfig& config, std::ostream& log);
void run_synth(const RunConfig& config, std::ostream& log);

struct ArmResult {
  std::string name;
  reasoning::Ablation ablation;
  double score = 0.0;  // macro F1 or expected CTR
};
std::vector<ArmResult> run_ablate(const RunConfig& config, std::ostream& log);

// Writes out/manifest.json: command, config digest, input digests, version.
void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::filesystem::path>& inputs);

std::string file_sha256(const std::filesystem::path& path);

}  // namespace adarec::pipeline
