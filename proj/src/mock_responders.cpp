#include "adarec/mock_responders.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

#include "adarec/profiling.hpp"
#include "adarec/text.hpp"

namespace adarec::mock {

namespace {

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string profile_reply(const std::string& prompt) {
  const std::string trailer = profiling::kProfilingTrailer;
  const std::string instruction = profiling::kProfilingInstruction;
  auto start = prompt.find(instruction);
  auto end = prompt.rfind(trailer);
  std::string facts;
  if (start != std::string::npos && end != std::string::npos && end > start)
    facts = text::trim(prompt.substr(start + instruction.size(), end - start - instruction.size()));
  return "This customer has the following record. " + facts;
}

std::string binary_reply(const std::vector<std::string>& outcomes) {
  int ones = 0;
  for (const auto& o : outcomes) ones += o == "1" ? 1 : 0;
  const int zeros = static_cast<int>(outcomes.size()) - ones;
  const int label = ones > zeros ? 1 : 0;
  const double confidence = outcomes.empty() ? 0.5 : static_cast<double>(std::max(ones, zeros)) / outcomes.size();
  return "{'label': " + std::to_string(label) + ", 'confidence': " + text::shortest(confidence) +
         ", 'reason': 'majority outcome of " + std::to_string(outcomes.size()) + " similar customers'}";
}

std::string brand_reply(const std::vector<std::string>& outcomes, const std::vector<std::string>& catalog,
                        std::size_t top_n) {
  std::map<std::string, int> counts;
  for (const auto& o : outcomes)
    for (const auto& b : text::split(o, ','))
      if (auto t = text::trim(b); !t.empty() && t != "none") ++counts[t];
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> picks;
  for (const auto& [b, _] : ranked)
    if (picks.size() < top_n && std::find(catalog.begin(), catalog.end(), b) != catalog.end()) picks.push_back(b);
  for (const auto& b : catalog)
    if (picks.size() < top_n && std::find(picks.begin(), picks.end(), b) == picks.end()) picks.push_back(b);
  return "{'brand': '" + text::join(picks, ", ") + "', 'confidence': 0.5, 'reason': 'most frequent brands among similar customers'}";
}

}  // namespace

std::string neighbor_majority(const llm::CompletionRequest& request) {
  const std::string& prompt = request.user;
  if (starts_with(prompt, profiling::kProfilingPreamble)) return profile_reply(prompt);

  std::vector<std::string> outcomes;
  std::vector<std::string> catalog;
  bool in_catalog = false;
  for (const auto& line : lines_of(prompt)) {
    if (starts_with(line, "Observed outcome: ")) outcomes.push_back(text::trim(line.substr(18)));
    if (line == "Available brands:") {
      in_catalog = true;
      continue;
    }
    if (in_catalog) {
      if (line.empty()) {
        in_catalog = false;
        continue;
      }
      catalog.push_back(text::trim(line.substr(0, line.find(':'))));
    }
  }
  if (catalog.empty()) return binary_reply(outcomes);
  std::size_t top_n = 3;
  auto pos = prompt.find("please recommend ");
  if (pos != std::string::npos) {
    static const std::vector<std::string> words = {"zero", "one", "two", "three", "four", "five",
                                                   "six", "seven", "eight", "nine", "ten"};
    const std::string word = prompt.substr(pos + 17, prompt.find(' ', pos + 17) - pos - 17);
    auto it = std::find(words.begin(), words.end(), word);
    if (it != words.end()) top_n = static_cast<std::size_t>(it - words.begin());
  }
  return brand_reply(outcomes, catalog, top_n);
}

llm::MockBackend::Responder responder(const std::string& mode) {
  if (mode == "neighbor_majority") return neighbor_majority;
  throw llm::LlmError(llm::LlmError::Kind::ConfigError, "unknown mock_mode '" + mode + "'");
}

}  // namespace adarec::mock
