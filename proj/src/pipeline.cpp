#include "adarec/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "adarec/mock_responders.hpp"
#include "adarec/text.hpp"

namespace adarec::pipeline {

namespace fs = std::filesystem;

namespace {

const char* kind_name(CliError::Kind kind) {
  switch (kind) {
    case CliError::Kind::ConfigError: return "ConfigError";
    case CliError::Kind::IoError: return "IoError";
    case CliError::Kind::MissingArtifact: return "MissingArtifact";
  }
  return "CliError";
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(CliError::Kind::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError(CliError::Kind::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw CliError(CliError::Kind::IoError, "write failed for " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw CliError(CliError::Kind::ConfigError, path.string() + ": " + e.what());
  }
}

std::vector<nlohmann::json> read_json_lines(const fs::path& path) {
  std::vector<nlohmann::json> out;
  std::istringstream in(read_file(path));
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw CliError(CliError::Kind::IoError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; the first exception
// (lowest index) is rethrown after all workers finish.
template <typename Fn>
void for_each_user(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

profiling::ProfileMap load_optional_profiles(const fs::path& path, bool expert) {
  if (path.empty() || !fs::exists(path)) return {};
  return expert ? profiling::load_expert_profiles(path) : profiling::load_profiles(path);
}

fs::path narrative_profiles_path(const RunConfig& c) {
  if (!c.profiles.empty()) return c.profiles;
  return c.out / "profiles.jsonl";
}

std::string profile_text_for(const std::string& id, const profiling::ProfileMap& narrative,
                             const profiling::ProfileMap& expert, const dataset::Record& rec,
                             const dataset::FeatureSchema& schema) {
  if (auto it = narrative.find(id); it != narrative.end() && !it->second.text.empty()) return it->second.text;
  if (auto it = expert.find(id); it != expert.end() && !it->second.text.empty()) return it->second.text;
  return profiling::render_raw_values(rec, schema);
}

const dataset::Record& test_record(const Inputs& in, const std::string& id) {
  const auto* rec = in.test.find(id);
  if (!rec) throw CliError(CliError::Kind::ConfigError, "user '" + id + "' is not in the test set");
  return *rec;
}

std::map<std::string, causal::CausalFeatureSet> load_causal_artifact(const fs::path& path) {
  std::map<std::string, causal::CausalFeatureSet> out;
  if (path.empty() || !fs::exists(path)) return out;
  for (const auto& doc : read_json_lines(path))
    out.emplace(doc.at("user_id").get<std::string>(), causal::causal_features_from_json(doc.at("features")));
  return out;
}

fs::path causal_artifact_path(const RunConfig& c) { return c.out / "causal.jsonl"; }

}  // namespace

CliError::CliError(Kind kind, const std::string& message) : Error("cli", kind_name(kind), message), code_(kind) {}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw CliError(CliError::Kind::ConfigError, m); };
  if (!(eta2 < eta1)) fail("eta2 must be smaller than eta1");
  if (k == 0 || k > eta2) fail("k must be in [1, eta2]");
  if (p < 1) fail("p must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must be in (0, 1)");
  if (bins < 2) fail("bins must be >= 2");
  if (max_depth < 0) fail("max_depth must be >= 0");
  if (retries < 0) fail("retries must be >= 0");
  if (max_in_flight == 0) fail("max_in_flight must be >= 1");
  static const std::set<std::string> backends = {"mock", "live", "replay", "record"};
  if (!backends.count(backend)) fail("unknown backend '" + backend + "'");
  if ((backend == "replay" || backend == "record") && cassette.empty()) fail("backend '" + backend + "' needs a cassette");
  if (backend == "record" && record_inner != "live" && record_inner != "mock") fail("record_inner must be live or mock");
  task.validate();
}

RunConfig RunConfig::from_json(const nlohmann::json& doc, const fs::path& base) {
  if (!doc.is_object()) throw CliError(CliError::Kind::ConfigError, "config must be a JSON object");
  static const std::set<std::string> known = {
      "train", "test", "schema", "profiles", "expert_profiles", "cassette", "out", "users", "scm", "task",
      "k", "eta1", "eta2", "alpha", "p", "bins", "max_depth", "max_path_length", "retries", "standardize",
      "factor", "pattern", "backend", "base_url", "model", "timeout_secs", "max_in_flight", "mock_mode",
      "record_inner", "temperature", "max_tokens", "threads", "seed", "fixture", "api_key"};
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) throw CliError(CliError::Kind::ConfigError, "unknown config key '" + key + "'");
  if (doc.contains("api_key"))
    throw CliError(CliError::Kind::ConfigError, "credentials are not accepted in config files; set ADAREC_API_KEY");

  RunConfig c;
  try {
    auto path = [&](const char* key, fs::path& dst) {
      if (doc.contains(key) && !doc.at(key).is_null()) dst = resolve(base, doc.at(key).get<std::string>());
    };
    path("train", c.train);
    path("test", c.test);
    path("schema", c.schema);
    path("profiles", c.profiles);
    path("expert_profiles", c.expert_profiles);
    path("cassette", c.cassette);
    path("users", c.users);
    path("scm", c.scm);
    c.out = doc.contains("out") ? resolve(base, doc.at("out").get<std::string>()) : resolve(base, "out");
    if (doc.contains("task")) c.task = reasoning::TaskSpec::from_json(doc.at("task"));
    c.k = doc.value("k", c.k);
    c.eta1 = doc.value("eta1", c.eta1);
    c.eta2 = doc.value("eta2", c.eta2);
    c.alpha = doc.value("alpha", c.alpha);
    c.p = doc.value("p", c.p);
    c.bins = doc.value("bins", c.bins);
    c.max_depth = doc.value("max_depth", c.max_depth);
    c.max_path_length = doc.value("max_path_length", c.max_path_length);
    c.retries = doc.value("retries", c.retries);
    c.standardize = doc.value("standardize", c.standardize);
    c.ablation.factor = doc.value("factor", c.ablation.factor);
    c.ablation.pattern = doc.value("pattern", c.ablation.pattern);
    c.backend = doc.value("backend", c.backend);
    c.base_url = doc.value("base_url", c.base_url);
    c.model = doc.value("model", c.model);
    c.timeout_secs = doc.value("timeout_secs", c.timeout_secs);
    c.max_in_flight = doc.value("max_in_flight", c.max_in_flight);
    c.mock_mode = doc.value("mock_mode", c.mock_mode);
    c.record_inner = doc.value("record_inner", c.record_inner);
    c.temperature = doc.value("temperature", c.temperature);
    c.max_tokens = doc.value("max_tokens", c.max_tokens);
    c.threads = doc.value("threads", c.threads);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("fixture")) {
      const auto& f = doc.at("fixture");
      c.fixture.n_train = f.value("n_train", c.fixture.n_train);
      c.fixture.n_test = f.value("n_test", c.fixture.n_test);
      c.fixture.n_features = f.value("n_features", c.fixture.n_features);
      c.fixture.n_correlates = f.value("n_correlates", c.fixture.n_correlates);
      c.fixture.causal_weight = f.value("causal_weight", c.fixture.causal_weight);
      c.fixture.label_signal = f.value("label_signal", c.fixture.label_signal);
    }
    c.fixture.seed = c.seed;
  } catch (const nlohmann::json::exception& e) {
    throw CliError(CliError::Kind::ConfigError, std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) { return from_json(read_json(path), path.parent_path()); }

nlohmann::json RunConfig::to_json() const {
  auto s = [](const fs::path& p) { return p.empty() ? nlohmann::json() : nlohmann::json(p.generic_string()); };
  return {{"train", s(train)},
          {"test", s(test)},
          {"schema", s(schema)},
          {"profiles", s(profiles)},
          {"expert_profiles", s(expert_profiles)},
          {"cassette", s(cassette)},
          {"out", s(out)},
          {"users", s(users)},
          {"scm", s(scm)},
          {"task", task.to_json()},
          {"k", k},
          {"eta1", eta1},
          {"eta2", eta2},
          {"alpha", alpha},
          {"p", p},
          {"bins", bins},
          {"max_depth", max_depth},
          {"max_path_length", max_path_length},
          {"retries", retries},
          {"standardize", standardize},
          {"factor", ablation.factor},
          {"pattern", ablation.pattern},
          {"backend", backend},
          {"base_url", base_url},
          {"model", model},
          {"timeout_secs", timeout_secs},
          {"max_in_flight", max_in_flight},
          {"mock_mode", mock_mode},
          {"record_inner", record_inner},
          {"temperature", temperature},
          {"max_tokens", max_tokens},
          {"threads", threads},
          {"seed", seed},
          {"fixture",
           {{"n_train", fixture.n_train},
            {"n_test", fixture.n_test},
            {"n_features", fixture.n_features},
            {"n_correlates", fixture.n_correlates},
            {"causal_weight", fixture.causal_weight},
            {"label_signal", fixture.label_signal}}}};
}

std::shared_ptr<llm::Backend> make_backend(const RunConfig& config) {
  auto live = [&]() -> std::shared_ptr<llm::Backend> {
    const char* key = std::getenv("ADAREC_API_KEY");
    if (config.base_url.empty()) throw CliError(CliError::Kind::ConfigError, "live backend needs base_url");
    llm::LiveConfig lc;
    lc.base_url = config.base_url;
    lc.api_key = key ? key : "";
    lc.timeout = std::chrono::seconds(config.timeout_secs);
    return std::make_shared<llm::LiveBackend>(lc);
  };
  auto mock = [&]() -> std::shared_ptr<llm::Backend> {
    return std::make_shared<llm::MockBackend>(mock::responder(config.mock_mode));
  };
  std::shared_ptr<llm::Backend> inner;
  if (config.backend == "mock") inner = mock();
  else if (config.backend == "live") inner = live();
  else if (config.backend == "replay") inner = std::make_shared<llm::ReplayBackend>(config.cassette);
  else inner = std::make_shared<llm::RecordBackend>(config.cassette, config.record_inner == "mock" ? mock() : live());
  return std::make_shared<llm::BoundedBackend>(inner, config.max_in_flight);
}

Inputs load_inputs(const RunConfig& config) {
  if (config.schema.empty() || config.train.empty() || config.test.empty())
    throw CliError(CliError::Kind::ConfigError, "config needs schema, train and test paths");
  auto schema = dataset::FeatureSchema::load(config.schema);
  auto train = dataset::load_csv(config.train, schema, dataset::Role::Train);
  auto test = dataset::load_csv(config.test, schema, dataset::Role::Test);
  return {std::move(schema), std::move(train), std::move(test)};
}

std::vector<std::string> selected_users(const RunConfig& config, const dataset::Dataset& test) {
  std::vector<std::string> out;
  if (config.users.empty()) {
    for (const auto& r : test.records()) out.push_back(r.user_id);
    return out;
  }
  std::set<std::string> wanted;
  std::istringstream in(read_file(config.users));
  for (std::string line; std::getline(in, line);)
    if (auto t = text::trim(line); !t.empty()) wanted.insert(t);
  for (const auto& id : wanted)
    if (!test.find(id)) throw CliError(CliError::Kind::ConfigError, "user '" + id + "' is not in the test set");
  for (const auto& r : test.records())
    if (wanted.count(r.user_id)) out.push_back(r.user_id);
  return out;
}

Context::Context(const RunConfig& config, Inputs inputs)
    : config_(config),
      inputs_(std::move(inputs)),
      layout_(retrieval::VectorLayout::fit(inputs_.train, config.standardize)),
      train_vectors_(layout_.encode(inputs_.train)),
      labels_(retrieval::labels_of(inputs_.train)) {}

UserAnalysis Context::analyze(const std::string& user_id, bool with_causal) const {
  const auto& rec = test_record(inputs_, user_id);
  UserAnalysis a;
  a.user_id = user_id;
  a.stages = retrieval::select_stages(train_vectors_, layout_.encode(rec), config_.eta1, config_.eta2, 1);
  a.cases = retrieval::select_representative_cases(a.stages.eta2, labels_, config_.k, inputs_.schema.target_kind());
  if (!with_causal) return a;

  a.mi = importance::rank_features(inputs_.train.subset(a.stages.eta1.ids()), config_.bins);
  const auto reference = inputs_.train.subset(a.stages.eta2.ids());
  const auto matrix = causal::DataMatrix::from_dataset(reference, true);
  const causal::MixedCiTest test(matrix, config_.alpha);
  causal::FciOptions options;
  options.max_depth = config_.max_depth;
  options.max_path_length = config_.max_path_length;
  a.pag = causal::fci(test, options);
  a.features = causal::causal_features(a.pag, inputs_.schema.target_name(), a.mi, config_.p);
  return a;
}

std::string file_sha256(const fs::path& path) { return llm::sha256_hex(read_file(path)); }

void write_manifest(const RunConfig& config, const std::string& command, const std::vector<fs::path>& inputs) {
  nlohmann::json digests = nlohmann::json::object();
  for (const auto& p : inputs)
    if (!p.empty() && fs::exists(p)) digests[p.generic_string()] = file_sha256(p);
  const auto cfg = config.to_json();
  nlohmann::json manifest = {{"command", command},
                             {"version", kVersion},
                             {"compiler", __VERSION__},
                             {"config_sha256", llm::sha256_hex(cfg.dump())},
                             {"config", cfg},
                             {"inputs", digests}};
  write_file(config.out / "manifest.json", manifest.dump(2) + "\n");
}

void run_stats(const RunConfig& config, std::ostream& log) {
  const auto schema = dataset::FeatureSchema::load(config.schema);
  const auto train = dataset::load_csv(config.train, schema);
  const auto summaries = dataset::compute_summaries(train);
  write_file(config.out / "summaries.json", dataset::summaries_to_json(summaries).dump(2) + "\n");
  write_manifest(config, "stats", {config.schema, config.train});
  log << "stats: " << summaries.size() << " features over " << train.size() << " users -> "
      << (config.out / "summaries.json").string() << "\n";
}

void run_profile(const RunConfig& config, std::ostream& log) {
  Context ctx(config, load_inputs(config));
  const auto& in = ctx.inputs();
  const auto users = selected_users(config, in.test);

  // Query users plus every train user that serves as one of their cases.
  std::vector<const dataset::Record*> targets;
  std::set<std::string> seen;
  for (const auto& id : users) {
    targets.push_back(&test_record(in, id));
    seen.insert(id);
  }
  std::vector<retrieval::NeighborSet> case_sets(users.size());
  for_each_user(users.size(), config.threads, [&](std::size_t i) { case_sets[i] = ctx.analyze(users[i], false).cases; });
  for (const auto& cs : case_sets)
    for (const auto& id : cs.ids())
      if (seen.insert(id).second) targets.push_back(in.train.find(id));

  const auto distribution = profiling::render_distribution_text(dataset::compute_summaries(in.train));
  auto backend = make_backend(config);
  profiling::GenerationOptions opts{config.model, config.temperature, config.max_tokens};
  std::vector<profiling::NarrativeProfile> made(targets.size());
  for_each_user(targets.size(), config.max_in_flight, [&](std::size_t i) {
    const auto prompt = profiling::build_profiling_prompt(distribution, *targets[i], in.schema);
    made[i] = profiling::generate_profile(*backend, targets[i]->user_id, prompt, opts);
  });
  profiling::ProfileMap profiles;
  for (auto& p : made) profiles.emplace(p.user_id, std::move(p));
  const auto path = config.out / "profiles.jsonl";
  fs::create_directories(config.out);
  profiling::save_profiles(profiles, path);
  write_manifest(config, "profile", {config.schema, config.train, config.test, config.users, config.cassette});
  log << "profile: " << profiles.size() << " profiles -> " << path.string() << "\n";
}

void run_causal(const RunConfig& config, std::ostream& log) {
  Context ctx(config, load_inputs(config));
  const auto users = selected_users(config, ctx.inputs().test);
  std::vector<std::string> lines(users.size());
  for_each_user(users.size(), config.threads, [&](std::size_t i) {
    const auto a = ctx.analyze(users[i], true);
    nlohmann::json doc = {{"user_id", a.user_id},
                          {"features", causal::to_json(a.features)},
                          {"mi", importance::to_json(a.mi)},
                          {"pag", a.pag.to_json()}};
    lines[i] = doc.dump();
  });
  std::string content;
  for (const auto& l : lines) content += l + "\n";
  write_file(causal_artifact_path(config), content);
  write_manifest(config, "causal", {config.schema, config.train, config.test, config.users});
  log << "causal: " << users.size() << " users -> " << causal_artifact_path(config).string() << "\n";
}

void run_recommend(const RunConfig& config, std::ostream& log) {
  Context ctx(config, load_inputs(config));
  const auto& in = ctx.inputs();
  const auto users = selected_users(config, in.test);
  const auto narrative = load_optional_profiles(narrative_profiles_path(config), false);
  const auto expert = load_optional_profiles(config.expert_profiles, true);
  const auto stored_causal = load_causal_artifact(causal_artifact_path(config));
  auto backend = make_backend(config);

  reasoning::RecommendOptions opts{config.model, config.temperature, config.max_tokens, config.retries};
  std::vector<reasoning::Decision> decisions(users.size());
  // Analysis is CPU bound (config.threads); completions are bounded by the backend.
  for_each_user(users.size(), std::max<std::size_t>(config.threads, config.max_in_flight), [&](std::size_t i) {
    const auto& id = users[i];
    auto stored = stored_causal.find(id);
    const bool need_causal = config.ablation.factor && stored == stored_causal.end();
    auto a = ctx.analyze(id, need_causal);
    if (config.ablation.factor && stored != stored_causal.end()) a.features = stored->second;
    std::vector<reasoning::PatternCase> cases;
    if (config.ablation.pattern) cases = reasoning::build_pattern_cases(a.cases, narrative, expert, in.train);
    const auto profile = profile_text_for(id, narrative, expert, test_record(in, id), in.schema);
    const auto bundle = reasoning::assemble_prompt(config.task, a.features, cases, profile, config.ablation);
    decisions[i] = reasoning::recommend_logged(*backend, config.task, bundle, id, opts);
  });

  std::string log_lines;
  nlohmann::json predictions = nlohmann::json::object();
  std::size_t failed = 0;
  for (const auto& d : decisions) {
    log_lines += d.to_json().dump() + "\n";
    if (!d.parsed) {
      ++failed;
      continue;
    }
    if (d.parsed->label) predictions[d.user_id] = *d.parsed->label;
    else predictions[d.user_id] = d.parsed->brands;
  }
  write_file(config.out / "decisions.jsonl", log_lines);
  const nlohmann::json doc = {{"task", config.task.to_json().at("kind")}, {"n_failed", failed}, {"predictions", predictions}};
  write_file(config.out / "predictions.json", doc.dump(2) + "\n");
  write_manifest(config, "recommend",
                 {config.schema, config.train, config.test, config.users, config.cassette, narrative_profiles_path(config),
                  config.expert_profiles, causal_artifact_path(config)});
  log << "recommend: " << (users.size() - failed) << "/" << users.size() << " users answered -> "
      << (config.out / "predictions.json").string() << "\n";
}

namespace {

struct Loaded {
  nlohmann::json predictions;
  dataset::Dataset test;
  std::size_t n_failed = 0;  // users whose completions never parsed; not scored
};

Loaded load_predictions(const RunConfig& config, const fs::path& path) {
  if (!fs::exists(path)) throw CliError(CliError::Kind::MissingArtifact, "no predictions at " + path.string());
  const auto doc = read_json(path);
  const auto schema = dataset::FeatureSchema::load(config.schema);
  return {doc.at("predictions"), dataset::load_csv(config.test, schema, dataset::Role::Test),
          doc.value("n_failed", std::size_t{0})};
}

std::map<std::string, int> binary_truths(const dataset::Dataset& test, const nlohmann::json& predictions) {
  std::map<std::string, int> truths;
  for (const auto& [id, _] : predictions.items()) {
    const auto* rec = test.find(id);
    if (rec && rec->label) truths[id] = std::get<int>(*rec->label);
  }
  return truths;
}

}  // namespace

evaluation::BinaryMetrics run_evaluate_binary(const RunConfig& config, const fs::path& path, std::ostream& log) {
  const auto loaded = load_predictions(config, path);
  std::map<std::string, int> preds;
  for (const auto& [id, v] : loaded.predictions.items()) preds[id] = v.get<int>();
  const auto metrics = evaluation::binary_metrics(preds, binary_truths(loaded.test, loaded.predictions));
  auto report = evaluation::report_json(metrics);
  report["n_failed"] = loaded.n_failed;
  write_file(config.out / "metrics.json", report.dump(2) + "\n");
  log << evaluation::table(metrics);
  if (loaded.n_failed > 0) log << loaded.n_failed << " users without a parsed answer were not scored\n";
  return metrics;
}

void run_evaluate(const RunConfig& config, std::ostream& log) {
  const auto path = config.out / "predictions.json";
  if (config.task.kind == reasoning::TaskKind::BinaryResponse) {
    run_evaluate_binary(config, path, log);
  } else {
    const auto loaded = load_predictions(config, path);
    std::map<std::string, std::vector<std::string>> preds;
    std::map<std::string, dataset::BrandSet> clicked;
    for (const auto& [id, v] : loaded.predictions.items()) {
      preds[id] = v.get<std::vector<std::string>>();
      const auto* rec = loaded.test.find(id);
      if (rec && rec->label) clicked[id] = std::get<dataset::BrandSet>(*rec->label);
    }
    const auto r = evaluation::expected_ctr(preds, clicked, config.task.top_n);
    auto report = evaluation::report_json(r);
    report["n_failed"] = loaded.n_failed;
    write_file(config.out / "metrics.json", report.dump(2) + "\n");
    log << evaluation::table(r);
    if (loaded.n_failed > 0) log << loaded.n_failed << " users without a parsed answer were not scored\n";
  }
  write_manifest(config, "evaluate", {config.schema, config.test, path});
}

void run_synth(const RunConfig& config, std::ostream& log) {
  fs::create_directories(config.out);
  if (!config.scm.empty()) {
    auto spec = synth::ScmSpec::from_json(read_json(config.scm));
    const auto data = synth::generate(spec, config.threads);
    write_file(config.out / "data.csv", synth::to_csv(data));
    write_file(config.out / "dag.json", data.dag.to_json().dump(2) + "\n");
    write_manifest(config, "synth", {config.scm});
    log << "synth: " << data.rows() << " rows -> " << (config.out / "data.csv").string() << "\n";
    return;
  }
  const auto spec = synth::pipeline_spec(config.fixture);
  const auto data = synth::generate(spec, config.threads);
  const auto train = synth::to_dataset(data, 0, config.fixture.n_train, dataset::Role::Train);
  const auto test = synth::to_dataset(data, config.fixture.n_train, data.rows(), dataset::Role::Test);
  dataset::write_csv(train, config.out / "train.csv");
  dataset::write_csv(test, config.out / "test.csv");
  write_file(config.out / "schema.json", train.schema().to_json().dump(2) + "\n");
  write_file(config.out / "dag.json", data.dag.to_json().dump(2) + "\n");
  write_file(config.out / "scm.json", spec.to_json().dump(2) + "\n");
  write_manifest(config, "synth", {});
  log << "synth: " << train.size() << " train / " << test.size() << " test users -> " << config.out.string() << "\n";
}

std::vector<ArmResult> run_ablate(const RunConfig& config, std::ostream& log) {
  std::vector<ArmResult> arms = {{"profile_only", {false, false}, 0.0},
                                 {"factor", {true, false}, 0.0},
                                 {"factor_pattern", {true, true}, 0.0}};
  if (!fs::exists(causal_artifact_path(config))) run_causal(config, log);
  std::ostringstream sink;
  for (auto& arm : arms) {
    RunConfig c = config;
    c.ablation = arm.ablation;
    c.out = config.out / "ablate" / arm.name;
    if (c.profiles.empty() && fs::exists(config.out / "profiles.jsonl")) c.profiles = config.out / "profiles.jsonl";
    fs::create_directories(c.out);
    if (fs::exists(causal_artifact_path(config)))
      fs::copy_file(causal_artifact_path(config), causal_artifact_path(c), fs::copy_options::overwrite_existing);
    run_recommend(c, sink);
    if (c.task.kind == reasoning::TaskKind::BinaryResponse) {
      arm.score = run_evaluate_binary(c, c.out / "predictions.json", sink).f1;
    } else {
      run_evaluate(c, sink);
      arm.score = read_json(c.out / "metrics.json").at("metrics").at("expected_ctr").get<double>();
    }
  }
  const char* metric = config.task.kind == reasoning::TaskKind::BinaryResponse ? "macro_f1" : "expected_ctr";
  nlohmann::json table = nlohmann::json::array();
  log << std::left << std::setw(18) << "arm" << metric << "\n";
  for (const auto& arm : arms) {
    table.push_back({{"arm", arm.name}, {"factor", arm.ablation.factor}, {"pattern", arm.ablation.pattern}, {metric, arm.score}});
    log << std::left << std::setw(18) << arm.name << text::fixed(arm.score, 2) << "\n";
  }
  write_file(config.out / "ablation.json", table.dump(2) + "\n");
  write_manifest(config, "ablate", {config.schema, config.train, config.test, config.users, config.cassette});
  return arms;
}

}  // namespace adarec::pipeline
