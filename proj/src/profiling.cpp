#include "adarec/profiling.hpp"

#include <fstream>

#include "adarec/text.hpp"

namespace adarec::profiling {

namespace {

const char* kind_name(ProfilingError::Kind kind) {
  switch (kind) {
    case ProfilingError::Kind::EmptyCompletion: return "EmptyCompletion";
    case ProfilingError::Kind::ParseError: return "ParseError";
    case ProfilingError::Kind::IoError: return "IoError";
    case ProfilingError::Kind::InvalidInput: return "InvalidInput";
  }
  return "ProfilingError";
}

std::string numeric_sentence(const std::string& name, const dataset::NumericStats& s) {
  using text::fixed1;
  return "'" + name + "' has a mean value of " + fixed1(s.mean) + " with a standard deviation of " + fixed1(s.std_dev) +
         ". The minimum observed value is " + fixed1(s.min) + ", while the maximum is " + fixed1(s.max) +
         ". Approximately 25% of values are below " + fixed1(s.q25) + ", the median (50th percentile) is " +
         fixed1(s.median) + ", and 75% fall below " + fixed1(s.q75) + ".";
}

std::string categorical_sentence(const dataset::DistributionSummary& s) {
  std::string out = "'" + s.display() + "' takes " + std::to_string(s.frequencies.size()) + " distinct values; ";
  std::vector<std::string> top;
  for (std::size_t i = 0; i < s.frequencies.size() && i < 3; ++i) {
    const auto& [token, count] = s.frequencies[i];
    const double pct = 100.0 * static_cast<double>(count) / static_cast<double>(s.n_present);
    top.push_back(token + " (" + text::fixed1(pct) + "%)");
  }
  return out + "the most common are " + text::join(top, ", ") + ".";
}

std::string value_text(const dataset::FeatureValue& v) {
  if (const double* d = std::get_if<double>(&v)) return text::shortest(*d);
  if (const std::string* s = std::get_if<std::string>(&v)) return *s;
  return "missing";
}

ProfileMap read_jsonl(const std::filesystem::path& path, std::optional<ProfileSource> force_source) {
  std::ifstream in(path);
  if (!in) throw ProfilingError(ProfilingError::Kind::IoError, "cannot open " + path.string());
  ProfileMap out;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    ProfilingError e(ProfilingError::Kind::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + why);
    e.line = lineno;
    return e;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    NarrativeProfile p;
    try {
      const auto j = nlohmann::json::parse(line);
      p.user_id = j.at("user_id").get<std::string>();
      p.text = text::normalize_whitespace(j.at("text").get<std::string>());
      if (force_source) {
        p.source = *force_source;
      } else {
        p.source = j.value("source", "generated") == "expert" ? ProfileSource::Expert : ProfileSource::Generated;
      }
      if (j.contains("generator_model") && j["generator_model"].is_string())
        p.generator_model = j["generator_model"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw fail(e.what());
    }
    if (p.text.empty()) throw fail("empty profile text for '" + p.user_id + "'");
    if (out.count(p.user_id)) throw fail("duplicate user_id '" + p.user_id + "'");
    out.emplace(p.user_id, std::move(p));
  }
  return out;
}

}  // namespace

ProfilingError::ProfilingError(Kind kind, const std::string& message)
    : Error("profiling", kind_name(kind), message), code_(kind) {}

std::string render_distribution_text(const std::vector<dataset::DistributionSummary>& summaries) {
  if (summaries.empty()) throw ProfilingError(ProfilingError::Kind::InvalidInput, "no summaries to render");
  std::vector<std::string> blocks;
  blocks.reserve(summaries.size());
  for (const auto& s : summaries) {
    if (s.n_present == 0) {
      blocks.push_back("'" + s.display() + "' has no observed values.");
    } else if (s.kind == dataset::FeatureKind::Numeric) {
      blocks.push_back(numeric_sentence(s.display(), *s.numeric));
    } else {
      blocks.push_back(categorical_sentence(s));
    }
  }
  return text::join(blocks, " ");
}

std::string render_raw_values(const dataset::Record& record, const dataset::FeatureSchema& schema) {
  std::vector<std::string> parts;
  parts.reserve(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i)
    parts.push_back(schema.features()[i].display() + " is " + value_text(record.values.at(i)) + ".");
  return text::join(parts, " ");
}

std::string build_profiling_prompt(const std::string& summaries_text, const dataset::Record& record,
                                   const dataset::FeatureSchema& schema) {
  if (record.values.size() != schema.size())
    throw ProfilingError(ProfilingError::Kind::InvalidInput, "record '" + record.user_id + "' does not match schema");
  std::string prompt = kProfilingPreamble;
  prompt += "\n";
  prompt += summaries_text;
  prompt += "\n\n";
  prompt += kProfilingInstruction;
  prompt += "\n\n";
  prompt += render_raw_values(record, schema);
  prompt += "\n\n";
  prompt += kProfilingTrailer;
  return prompt;
}

NarrativeProfile generate_profile(llm::Backend& client, const std::string& user_id, const std::string& prompt,
                                  const GenerationOptions& options) {
  llm::CompletionRequest request;
  request.model = options.model;
  request.user = prompt;
  request.temperature = options.temperature;
  request.max_tokens = options.max_tokens;
  auto response = client.complete(request);
  NarrativeProfile p;
  p.user_id = user_id;
  p.text = text::normalize_whitespace(response.text);
  if (p.text.empty())
    throw ProfilingError(ProfilingError::Kind::EmptyCompletion, "backend returned an empty profile for '" + user_id + "'");
  p.source = ProfileSource::Generated;
  p.generator_model = response.model.empty() ? options.model : response.model;
  return p;
}

ProfileMap load_expert_profiles(const std::filesystem::path& path) { return read_jsonl(path, ProfileSource::Expert); }

ProfileMap load_profiles(const std::filesystem::path& path) { return read_jsonl(path, std::nullopt); }

void save_profiles(const ProfileMap& profiles, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ProfilingError(ProfilingError::Kind::IoError, "cannot write " + path.string());
  for (const auto& [id, p] : profiles) {
    nlohmann::json j = {{"user_id", id},
                        {"text", p.text},
                        {"source", p.source == ProfileSource::Expert ? "expert" : "generated"}};
    if (p.generator_model) j["generator_model"] = *p.generator_model;
    out << j.dump() << '\n';
  }
}

}  // namespace adarec::profiling
