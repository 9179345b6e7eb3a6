#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adarec/dataset.hpp"
#include "adarec/error.hpp"
#include "adarec/llm_client.hpp"

namespace adarec::profiling {

class ProfilingError : public Error {
 public:
  enum class Kind { EmptyCompletion, ParseError, IoError, InvalidInput };
  ProfilingError(Kind kind, const std::string& message);
  Kind code() const noexcept { return code_; }
  std::optional<std::size_t> line;  // ParseError: 1-based line

 private:
  Kind code_;
};

enum class ProfileSource { Generated, Expert };

struct NarrativeProfile {
  std::string user_id;
  std::string text;
  ProfileSource source = ProfileSource::Generated;
  std::optional<std::string> generator_model;
};

using ProfileMap = std::map<std::string, NarrativeProfile>;

inline constexpr const char* kProfilingPreamble =
    "You are a customer profile generator. Below is the data distribution for each feature:";
inline constexpr const char* kProfilingInstruction =
    "Using this information, generate a clear and cohesive profile for the customer. For non-numerical features, "
    "emphasize specific values. For numerical features, describe relative trends without exact numbers. Present as "
    "a single fluid paragraph without extra formatting.";
inline constexpr const char* kProfilingTrailer = "Customer Profile:";

// One sentence block per feature, joined by single spaces.
std::string render_distribution_text(const std::vector<dataset::DistributionSummary>& summaries);

// `<display> is <value>.` per feature, joined by single spaces. Missing -> "is missing".
std::string render_raw_values(const dataset::Record& record, const dataset::FeatureSchema& schema);

std::string build_profiling_prompt(const std::string& summaries_text, const dataset::Record& record,
                                   const dataset::FeatureSchema& schema);

struct GenerationOptions {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1000;
};

NarrativeProfile generate_profile(llm::Backend& client, const std::string& user_id, const std::string& prompt,
                                  const GenerationOptions& options = {});

// JSON-lines `{"user_id":..., "text":...}`; source is set to expert.
ProfileMap load_expert_profiles(const std::filesystem::path& path);
// Same format, any source. `source` / `generator_model` are read when present.
ProfileMap load_profiles(const std::filesystem::path& path);
void save_profiles(const ProfileMap& profiles, const std::filesystem::path& path);

}  // namespace adarec::profiling
