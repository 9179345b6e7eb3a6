#include <doctest.h>

#include "adarec/reasoning.hpp"

using namespace adarec;
using reasoning::ReasoningError;

namespace {

reasoning::TaskSpec brand_task() {
  return reasoning::default_brand_task({{"nike", "Sportswear"},
                                        {"adidas", "Sportswear"},
                                        {"lego", "Toys"},
                                        {"sony", "Electronics"},
                                        {"coca-cola", "Drinks"}});
}

ReasoningError::Kind parse_kind(const std::string& completion, const reasoning::TaskSpec& task) {
  try {
    reasoning::parse_response(completion, task);
  } catch (const ReasoningError& e) {
    CHECK(e.raw() == completion);
    return e.code();
  }
  FAIL("no ReasoningError thrown");
  return ReasoningError::Kind::InvalidTask;
}

causal::CausalFeatureSet two_features() {
  return {{{"age", 0.1234, causal::Mark::Arrow}, {"tenure", 0.05, causal::Mark::Circle}}, 15};
}

}  // namespace

TEST_CASE("parse brand answers in the requested format") {
  const auto task = brand_task();
  const auto r = reasoning::parse_response(
      "Sure! {'brand': 'Nike, lego,  SONY', 'confidence': 0.8, 'reason': 'they're active'} hope it helps", task);
  CHECK(r.brands == std::vector<std::string>{"nike", "lego", "sony"});
  CHECK(r.confidence == doctest::Approx(0.8));
  CHECK(r.reason == "they're active");
  CHECK(std::get<dataset::BrandSet>(r.as_label()) == dataset::BrandSet{"lego", "nike", "sony"});
}

TEST_CASE("brand answer errors") {
  const auto task = brand_task();
  CHECK(parse_kind("no json here", task) == ReasoningError::Kind::NoJsonFound);
  CHECK(parse_kind("{'brand': 'nike, lego, pepsi', 'confidence': 1}", task) == ReasoningError::Kind::UnknownBrand);
  CHECK(parse_kind("{'brand': 'nike, lego', 'confidence': 1}", task) == ReasoningError::Kind::WrongBrandCount);
  CHECK(parse_kind("{'brand': 'nike, nike, lego', 'confidence': 1}", task) == ReasoningError::Kind::WrongBrandCount);
}

TEST_CASE("parse binary answers") {
  const auto task = reasoning::default_binary_task();
  CHECK(reasoning::parse_response("{'label': 1, 'confidence': 0.9, 'reason': 'x'}", task).label == 1);
  CHECK(reasoning::parse_response(R"({"label": "0", "confidence": 75, "reason": "y"})", task).label == 0);
  CHECK(reasoning::parse_response(R"({"label": "0", "confidence": 75})", task).confidence == doctest::Approx(0.75));
  CHECK(reasoning::parse_response("{label: yes, confidence: 0.5}", task).label == 1);
  CHECK(parse_kind("{'label': 2, 'confidence': 0.5}", task) == ReasoningError::Kind::BadLabel);
  CHECK(parse_kind("{'confidence': 0.5}", task) == ReasoningError::Kind::BadLabel);
}

TEST_CASE("render and reparse are inverse") {
  const auto task = brand_task();
  const auto r = reasoning::parse_response("{'brand': 'coca-cola, adidas, lego', 'confidence': 0.4, 'reason': 'a, b'}",
                                           task);
  const auto again = reasoning::parse_response(reasoning::render_recommendation(r, task), task);
  CHECK(again.brands == r.brands);
  CHECK(again.confidence == r.confidence);
  CHECK(again.reason == r.reason);
}

TEST_CASE("find_json_object skips braces in strings") {
  CHECK(reasoning::find_json_object("a {'x': '}'} b") == std::optional<std::string>("{'x': '}'}"));
  CHECK(reasoning::find_json_object("{'a': {'b': 1}} tail") == std::optional<std::string>("{'a': {'b': 1}}"));
  CHECK_FALSE(reasoning::find_json_object("{ unbalanced").has_value());
}

TEST_CASE("prompt blocks keep their order and ablation drops them") {
  const auto task = reasoning::default_binary_task();
  const std::vector<reasoning::PatternCase> cases = {{"c1", "Buys often.", 1}, {"c2", "Rarely visits.", 0}};
  const auto full = reasoning::assemble_prompt(task, two_features(), cases, "Query profile.");
  const auto text = full.render();
  const auto f = text.find(reasoning::kFactorHeader), p = text.find(reasoning::kPatternHeader),
             q = text.find("Narrative Profile:\nQuery profile."), i = text.find("JSON format");
  CHECK(f < p);
  CHECK(p < q);
  CHECK(q < i);
  CHECK(text.find("1. age (MI 0.123)") != std::string::npos);
  CHECK(text.find("Customer Profile: Rarely visits.\nObserved outcome: 0") != std::string::npos);
  CHECK(text.find(reasoning::kLabelFormat) != std::string::npos);

  const auto bare = reasoning::assemble_prompt(task, two_features(), cases, "Query profile.", {false, false});
  CHECK(bare.factor.empty());
  CHECK(bare.pattern.empty());
  CHECK(bare.render() == full.task + "\n\n" + full.profile + "\n\n" + full.instruction);
}

TEST_CASE("pattern case text precedence") {
  dataset::FeatureSchema schema({{"age"}}, "label", dataset::TargetKind::Binary);
  const dataset::Dataset train(schema, {{"a", {30.0}, 1}, {"b", {40.0}, 0}, {"c", {50.0}, 1}}, dataset::Role::Train);
  retrieval::NeighborSet set{"q", {{"a", 0.9, 1}, {"b", 0.8, 0}, {"c", 0.7, 1}}, retrieval::Stage::Cases};
  profiling::ProfileMap narrative{{"a", {"a", "Narrative A.", profiling::ProfileSource::Generated, std::nullopt}}};
  profiling::ProfileMap expert{{"a", {"a", "Expert A.", profiling::ProfileSource::Expert, std::nullopt}},
                               {"b", {"b", "Expert B.", profiling::ProfileSource::Expert, std::nullopt}}};
  const auto cases = reasoning::build_pattern_cases(set, narrative, expert, train);
  REQUIRE(cases.size() == 3);
  CHECK(cases[0].profile_text == "Narrative A.");
  CHECK(cases[1].profile_text == "Expert B.");
  CHECK(cases[2].profile_text == "age is 50.");
}

TEST_CASE("retries re-issue the same prompt") {
  const auto task = reasoning::default_binary_task();
  const auto bundle = reasoning::assemble_prompt(task, two_features(), {}, "P.");
  const std::string good = "{'label': 1, 'confidence': 0.9, 'reason': 'ok'}";

  llm::MockBackend first_ok(std::vector<std::string>{good});
  CHECK(reasoning::recommend(first_ok, task, bundle, "u").attempts() == 1);

  llm::MockBackend second_ok(std::vector<std::string>{"garbage", good});
  const auto d = reasoning::recommend(second_ok, task, bundle, "u", {"m", 0.0, 100, 2});
  CHECK(second_ok.calls() == 2);
  CHECK(d.parsed->label == 1);
  CHECK(d.prompt_sha256 == llm::sha256_hex(bundle.render()));

  llm::MockBackend never([](const llm::CompletionRequest&) { return std::string("still garbage"); });
  try {
    reasoning::recommend(never, task, bundle, "u", {"m", 0.0, 100, 1});
    FAIL("expected ExhaustedRetries");
  } catch (const ReasoningError& e) {
    CHECK(e.code() == ReasoningError::Kind::ExhaustedRetries);
    CHECK(e.raw() == "still garbage");
  }
  CHECK(never.calls() == 2);

  const auto logged = reasoning::recommend_logged(never, task, bundle, "u", {"m", 0.0, 100, 0});
  CHECK(logged.error.has_value());
  CHECK_FALSE(logged.parsed.has_value());
  CHECK(logged.to_json().at("attempts") == 1);
}

TEST_CASE("task spec validation") {
  auto task = brand_task();
  task.top_n = 9;
  CHECK_THROWS_AS(task.validate(), ReasoningError);
  const auto back = reasoning::TaskSpec::from_json(brand_task().to_json());
  CHECK(back.to_json() == brand_task().to_json());
  CHECK_THROWS_AS(reasoning::TaskSpec::from_json({{"kind", "poetry"}}), ReasoningError);
}
