#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adarec/causal.hpp"
#include "adarec/dataset.hpp"
#include "adarec/error.hpp"
#include "adarec/llm_client.hpp"
#include "adarec/profiling.hpp"
#include "adarec/retrieval.hpp"

namespace adarec::reasoning {

class ReasoningError : public Error {
 public:
  enum class Kind { NoJsonFound, UnknownBrand, WrongBrandCount, BadLabel, ExhaustedRetries, MissingCaseProfile, InvalidTask };
  ReasoningError(Kind kind, const std::string& message, std::string raw = {});
  Kind code() const noexcept { return code_; }
  // The completion that failed to parse (empty for non-parse errors).
  const std::string& raw() const noexcept { return raw_; }

 private:
  Kind code_;
  std::string raw_;
};

inline constexpr const char* kFactorHeader =
    "Reference: Factors and their importance ranking that affect brand recommendations based on historical data.";
inline constexpr const char* kPatternHeader = "Reference: Below are preferences from similar customer profiles.";
inline constexpr const char* kBrandFormat = "{'brand': 'brand1, brand2, brand3', 'confidence': confidence, 'reason': reason}";
inline constexpr const char* kLabelFormat = "{'label': label, 'confidence': confidence, 'reason': reason}";

enum class TaskKind { BinaryResponse, BrandRecommendation };

struct Brand {
  std::string token;
  std::string description;
};

struct TaskSpec {
  TaskKind kind = TaskKind::BinaryResponse;
  std::string description;
  std::vector<Brand> brands;  // brand task only
  std::size_t top_n = 1;

  // Throws InvalidTask when the catalog/kind/top_n combination is inconsistent.
  void validate() const;
  static TaskSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

// Default task preambles used when a config gives none.
TaskSpec default_binary_task();
TaskSpec default_brand_task(std::vector<Brand> brands);

struct Ablation {
  bool factor = true;
  bool pattern = true;
};

struct PatternCase {
  std::string user_id;
  std::string profile_text;
  dataset::Label outcome;
};

struct PromptBundle {
  std::string task;
  std::string factor;   // empty when ablated
  std::string pattern;  // empty when ablated
  std::string profile;
  std::string instruction;

  // Non-empty blocks joined by blank lines, always in the order above.
  std::string render() const;
};

// Outcome text for a case: "1"/"0" or the comma-separated clicked brands.
std::string outcome_text(const dataset::Label& label);

PromptBundle assemble_prompt(const TaskSpec& task, const causal::CausalFeatureSet& causal,
                             const std::vector<PatternCase>& cases, const std::string& profile_text,
                             const Ablation& ablation = {});

// Case text precedence: generated narrative profile, then expert profile,
// then a raw feature listing from `train`. Every case needs a label.
std::vector<PatternCase> build_pattern_cases(const retrieval::NeighborSet& cases, const profiling::ProfileMap& narrative,
                                             const profiling::ProfileMap& expert, const dataset::Dataset& train);

struct Recommendation {
  std::optional<int> label;         // binary task
  std::vector<std::string> brands;  // brand task, catalog tokens in answer order
  double confidence = 0.0;          // in [0, 1]
  std::string reason;
  std::string raw;

  dataset::Label as_label() const;
};

// First balanced {...} region of `text`, or nullopt.
std::optional<std::string> find_json_object(const std::string& text);

Recommendation parse_response(const std::string& completion, const TaskSpec& task);

// Serializes in the same single-quoted format the output instruction asks for.
std::string render_recommendation(const Recommendation& rec, const TaskSpec& task);

nlohmann::json to_json(const Recommendation& rec);

struct RecommendOptions {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1000;
  int retries = 2;
};

struct Decision {
  std::string user_id;
  std::string prompt_sha256;
  std::vector<std::string> completions;  // every raw completion, in call order
  std::optional<Recommendation> parsed;
  std::optional<std::string> error;  // set when all attempts failed
  std::size_t attempts() const noexcept { return completions.size(); }

  nlohmann::json to_json() const;
};

// Issues the rendered prompt; on a parse failure the identical request is
// re-issued up to `retries` more times. Throws ExhaustedRetries (carrying the
// last completion) when no attempt parses. Transport errors propagate.
Decision recommend(llm::Backend& client, const TaskSpec& task, const PromptBundle& bundle, const std::string& user_id,
                   const RecommendOptions& options = {});

// As above but never throws on parse failure: the returned decision has
// `error` set and no parsed value.
Decision recommend_logged(llm::Backend& client, const TaskSpec& task, const PromptBundle& bundle,
                          const std::string& user_id, const RecommendOptions& options = {});

}  // namespace adarec::reasoning
