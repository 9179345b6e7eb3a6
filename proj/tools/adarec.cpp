// adarec command line: stats | profile | causal | recommend | evaluate | synth | ablate

#include <iostream>

#include <CLI11.hpp>

#include "adarec/pipeline.hpp"

namespace {

using adarec::pipeline::RunConfig;

struct Overrides {
  std::string config;
  std::string out;
  std::string users;
  std::string backend;
  std::string cassette;
  std::string mock_mode;
  unsigned threads = 0;
};

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig::from_json(nlohmann::json::object()) : RunConfig::load(o.config);
  if (!o.out.empty()) c.out = o.out;
  if (!o.users.empty()) c.users = o.users;
  if (!o.backend.empty()) c.backend = o.backend;
  if (!o.cassette.empty()) c.cassette = o.cassette;
  if (!o.mock_mode.empty()) c.mock_mode = o.mock_mode;
  if (o.threads) c.threads = o.threads;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive in-context recommendation pipeline"};
  app.require_subcommand(1);

  app.set_version_flag("--version", adarec::pipeline::kVersion);
  Overrides o;

  auto add = [&](const std::string& name, const std::string& help, bool needs_config = true) {
    auto* sub = app.add_subcommand(name, help);
    auto* config = sub->add_option("--config", o.config, "JSON run configuration");
    if (needs_config) config->required();
    sub->add_option("--out", o.out, "output directory (overrides config)");
    sub->add_option("--users", o.users, "file with one test user id per line");
    sub->add_option("--backend", o.backend, "mock | live | replay | record");
    sub->add_option("--cassette", o.cassette, "cassette file for replay/record");
    sub->add_option("--mock-mode", o.mock_mode, "mock responder");
    sub->add_option("--threads", o.threads, "worker threads for CPU-bound stages");
    return sub;
  };
  auto* stats = add("stats", "feature distribution summaries");
  auto* profile = add("profile", "narrative profiles for the selected users and their cases");
  auto* causal = add("causal", "per-user PAG and causal feature set");
  auto* recommend = add("recommend", "decision log and predictions");
  auto* evaluate = add("evaluate", "metrics for out/predictions.json");
  auto* synth = add("synth", "synthetic fixture or SCM sample", false);
  auto* ablate = add("ablate", "profile-only, +factor and +factor+pattern arms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const RunConfig config = resolve(o);
    if (stats->parsed()) adarec::pipeline::run_stats(config, std::cout);
    else if (profile->parsed()) adarec::pipeline::run_profile(config, std::cout);
    else if (causal->parsed()) adarec::pipeline::run_causal(config, std::cout);
    else if (recommend->parsed()) adarec::pipeline::run_recommend(config, std::cout);
    else if (evaluate->parsed()) adarec::pipeline::run_evaluate(config, std::cout);
    else if (synth->parsed()) adarec::pipeline::run_synth(config, std::cout);
    else if (ablate->parsed()) adarec::pipeline::run_ablate(config, std::cout);
  } catch (const adarec::Error& e) {
    std::cerr << "error: " << e.module() << ": " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: Exception: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
