#include "adarec/reasoning.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "adarec/text.hpp"

namespace adarec::reasoning {

namespace {

const char* kind_name(ReasoningError::Kind kind) {
  switch (kind) {
    case ReasoningError::Kind::NoJsonFound: return "NoJsonFound";
    case ReasoningError::Kind::UnknownBrand: return "UnknownBrand";
    case ReasoningError::Kind::WrongBrandCount: return "WrongBrandCount";
    case ReasoningError::Kind::BadLabel: return "BadLabel";
    case ReasoningError::Kind::ExhaustedRetries: return "ExhaustedRetries";
    case ReasoningError::Kind::MissingCaseProfile: return "MissingCaseProfile";
    case ReasoningError::Kind::InvalidTask: return "InvalidTask";
  }
  return "ReasoningError";
}

// Parser for the loosely JSON-like objects models tend to emit: single or
// double quoted strings, bare keys and words, numbers, lists, nested objects.
// "they're" inside a single-quoted value: the apostrophe does not close it.
bool inner_apostrophe(std::string_view s, std::size_t i) {
  return s[i] == '\'' && i > 0 && i + 1 < s.size() && std::isalnum(static_cast<unsigned char>(s[i - 1])) &&
         std::isalnum(static_cast<unsigned char>(s[i + 1]));
}

class LenientParser {
 public:
  explicit LenientParser(std::string_view text) : s_(text) {}

  std::optional<nlohmann::json> object() {
    skip_ws();
    if (!eat('{')) return std::nullopt;
    nlohmann::json out = nlohmann::json::object();
    while (true) {
      skip_ws();
      if (eat('}')) return out;
      auto key = scalar_text(":");
      if (!key) return std::nullopt;
      skip_ws();
      if (!eat(':')) return std::nullopt;
      auto value = this->value();
      if (!value) return std::nullopt;
      out[text::to_lower(text::trim(*key))] = std::move(*value);
      skip_ws();
      if (eat(',')) continue;
      if (eat('}')) return out;
      return std::nullopt;
    }
  }

 private:
  std::optional<nlohmann::json> value() {
    skip_ws();
    if (i_ >= s_.size()) return std::nullopt;
    const char c = s_[i_];
    if (c == '{') return object();
    if (c == '[') {
      ++i_;
      nlohmann::json list = nlohmann::json::array();
      while (true) {
        skip_ws();
        if (eat(']')) return list;
        auto v = value();
        if (!v) return std::nullopt;
        list.push_back(std::move(*v));
        skip_ws();
        if (eat(',')) continue;
        if (eat(']')) return list;
        return std::nullopt;
      }
    }
    const bool quoted = c == '\'' || c == '"';
    auto word = scalar_text(",}]");
    if (!word) return std::nullopt;
    if (quoted) return nlohmann::json(*word);
    const std::string trimmed = text::trim(*word);
    double number = 0;
    const auto* end = trimmed.data() + trimmed.size();
    auto [ptr, ec] = std::from_chars(trimmed.data(), end, number);
    if (ec == std::errc() && ptr == end && !trimmed.empty()) return nlohmann::json(number);
    return nlohmann::json(trimmed);
  }

  // Quoted string (escapes honoured) or raw text up to one of `stops`.
  std::optional<std::string> scalar_text(std::string_view stops) {
    skip_ws();
    if (i_ >= s_.size()) return std::nullopt;
    const char q = s_[i_];
    std::string out;
    if (q == '\'' || q == '"') {
      ++i_;
      while (i_ < s_.size() && (s_[i_] != q || inner_apostrophe(s_, i_))) {
        if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
          ++i_;
          const char e = s_[i_];
          out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
        } else {
          out += s_[i_];
        }
        ++i_;
      }
      if (i_ >= s_.size()) return std::nullopt;
      ++i_;
      return out;
    }
    while (i_ < s_.size() && stops.find(s_[i_]) == std::string_view::npos) out += s_[i_++];
    if (out.empty()) return std::nullopt;
    return out;
  }

  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

std::optional<double> as_number(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) return std::nullopt;
  std::string s = text::trim(v.get<std::string>());
  if (!s.empty() && s.back() == '%') s.pop_back();
  double d = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return d;
}

std::string describe_label_value(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

int parse_label(const nlohmann::json& v, const std::string& raw) {
  if (auto d = as_number(v)) {
    if (*d == 0.0) return 0;
    if (*d == 1.0) return 1;
  }
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_string()) {
    const auto s = text::to_lower(text::trim(v.get<std::string>()));
    if (s == "yes" || s == "true") return 1;
    if (s == "no" || s == "false") return 0;
  }
  throw ReasoningError(ReasoningError::Kind::BadLabel, "label value '" + describe_label_value(v) + "'", raw);
}

std::vector<std::string> brand_tokens(const nlohmann::json& v) {
  std::vector<std::string> out;
  auto add = [&](const std::string& s) {
    for (auto& part : text::split(s, ',')) {
      auto t = text::trim(part);
      while (!t.empty() && (t.front() == '\'' || t.front() == '"')) t.erase(t.begin());
      while (!t.empty() && (t.back() == '\'' || t.back() == '"')) t.pop_back();
      t = text::trim(t);
      if (!t.empty()) out.push_back(t);
    }
  };
  if (v.is_array()) {
    for (const auto& item : v) add(item.is_string() ? item.get<std::string>() : item.dump());
  } else if (v.is_string()) {
    add(v.get<std::string>());
  } else {
    add(v.dump());
  }
  return out;
}

std::string quote_single(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

std::string brand_format(std::size_t top_n) {
  if (top_n == 3) return kBrandFormat;
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= top_n; ++i) names.push_back("brand" + std::to_string(i));
  return "{'brand': '" + text::join(names, ", ") + "', 'confidence': confidence, 'reason': reason}";
}

std::string count_word(std::size_t n) {
  static const char* words[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
  return n <= 10 ? words[n] : std::to_string(n);
}

}  // namespace

ReasoningError::ReasoningError(Kind kind, const std::string& message, std::string raw)
    : Error("reasoning", kind_name(kind), message), code_(kind), raw_(std::move(raw)) {}

void TaskSpec::validate() const {
  if (kind == TaskKind::BinaryResponse) {
    if (!brands.empty()) throw ReasoningError(ReasoningError::Kind::InvalidTask, "binary task must not carry a brand catalog");
    if (top_n != 1) throw ReasoningError(ReasoningError::Kind::InvalidTask, "binary task requires top_n = 1");
    return;
  }
  if (brands.empty()) throw ReasoningError(ReasoningError::Kind::InvalidTask, "brand task requires a brand catalog");
  if (top_n == 0 || top_n > brands.size())
    throw ReasoningError(ReasoningError::Kind::InvalidTask,
                         "top_n " + std::to_string(top_n) + " outside catalog of " + std::to_string(brands.size()));
  std::set<std::string> seen;
  for (const auto& b : brands)
    if (!seen.insert(text::to_lower(b.token)).second)
      throw ReasoningError(ReasoningError::Kind::InvalidTask, "duplicate brand token '" + b.token + "'");
}

TaskSpec TaskSpec::from_json(const nlohmann::json& doc) {
  try {
    const auto kind = doc.at("kind").get<std::string>();
    TaskSpec t;
    if (kind == "binary_response") {
      t = default_binary_task();
    } else if (kind == "brand_recommendation") {
      std::vector<Brand> brands;
      for (const auto& b : doc.at("brands"))
        brands.push_back({b.at("token").get<std::string>(), b.value("description", std::string())});
      t = default_brand_task(std::move(brands));
    } else {
      throw ReasoningError(ReasoningError::Kind::InvalidTask, "unknown task kind '" + kind + "'");
    }
    if (doc.contains("description")) t.description = doc.at("description").get<std::string>();
    if (doc.contains("top_n")) t.top_n = doc.at("top_n").get<std::size_t>();
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ReasoningError(ReasoningError::Kind::InvalidTask, std::string("malformed task: ") + e.what());
  }
}

nlohmann::json TaskSpec::to_json() const {
  nlohmann::json doc = {{"kind", kind == TaskKind::BinaryResponse ? "binary_response" : "brand_recommendation"},
                        {"description", description},
                        {"top_n", top_n}};
  if (kind == TaskKind::BrandRecommendation) {
    doc["brands"] = nlohmann::json::array();
    for (const auto& b : brands) doc["brands"].push_back({{"token", b.token}, {"description", b.description}});
  }
  return doc;
}

TaskSpec default_binary_task() {
  TaskSpec t;
  t.kind = TaskKind::BinaryResponse;
  t.description =
      "As the Senior Marketing Manager, your task is to predict whether a customer will respond to the current "
      "promotional campaign. Based on a customer profile, please predict the response as 1 (responds) or 0 (does not "
      "respond).";
  t.top_n = 1;
  return t;
}

TaskSpec default_brand_task(std::vector<Brand> brands) {
  TaskSpec t;
  t.kind = TaskKind::BrandRecommendation;
  t.description =
      "As the Senior Marketing Manager, your task is to recommend three brands for the promotional carousel. Based on "
      "a customer profile, please recommend three brand names for the customer.";
  t.brands = std::move(brands);
  t.top_n = 3;
  return t;
}

std::string PromptBundle::render() const {
  std::vector<std::string> parts;
  for (const auto* block : {&task, &factor, &pattern, &profile, &instruction})
    if (!block->empty()) parts.push_back(*block);
  return text::join(parts, "\n\n");
}

std::string outcome_text(const dataset::Label& label) {
  if (const int* v = std::get_if<int>(&label)) return std::to_string(*v);
  const auto& set = std::get<dataset::BrandSet>(label);
  return set.empty() ? std::string("none") : text::join(set, ", ");
}

PromptBundle assemble_prompt(const TaskSpec& task, const causal::CausalFeatureSet& causal,
                             const std::vector<PatternCase>& cases, const std::string& profile_text,
                             const Ablation& ablation) {
  task.validate();
  PromptBundle b;

  std::ostringstream t;
  t << task.description;
  if (task.kind == TaskKind::BrandRecommendation) {
    t << "\nAvailable brands:";
    for (const auto& brand : task.brands) {
      t << "\n" << brand.token;
      if (!brand.description.empty()) t << ": " << brand.description;
    }
  }
  b.task = t.str();

  if (ablation.factor) {
    std::ostringstream f;
    f << kFactorHeader;
    std::size_t rank = 1;
    for (const auto& e : causal.entries) f << "\n" << rank++ << ". " << e.name << " (MI " << text::fixed(e.mi_score, 3) << ")";
    b.factor = f.str();
  }

  if (ablation.pattern) {
    std::ostringstream p;
    p << kPatternHeader << "\nReference Cases:";
    for (const auto& c : cases) {
      if (text::trim(c.profile_text).empty())
        throw ReasoningError(ReasoningError::Kind::MissingCaseProfile, "case '" + c.user_id + "' has no profile text");
      p << "\nCustomer Profile: " << c.profile_text << "\nObserved outcome: " << outcome_text(c.outcome);
    }
    b.pattern = p.str();
  }

  b.profile = "Narrative Profile:\n" + profile_text;

  if (task.kind == TaskKind::BrandRecommendation) {
    b.instruction = "Based on the information above, please recommend " + count_word(task.top_n) +
                    " brand names in the following JSON format: " + brand_format(task.top_n);
  } else {
    b.instruction =
        "Based on the information above, please predict the customer's response (1 or 0) in the following JSON "
        "format: " +
        std::string(kLabelFormat);
  }
  return b;
}

std::vector<PatternCase> build_pattern_cases(const retrieval::NeighborSet& cases, const profiling::ProfileMap& narrative,
                                             const profiling::ProfileMap& expert, const dataset::Dataset& train) {
  std::vector<PatternCase> out;
  for (const auto& n : cases.entries) {
    PatternCase c;
    c.user_id = n.user_id;
    const dataset::Record* rec = train.find(n.user_id);
    if (n.label) {
      c.outcome = *n.label;
    } else if (rec && rec->label) {
      c.outcome = *rec->label;
    } else {
      throw ReasoningError(ReasoningError::Kind::MissingCaseProfile, "case '" + n.user_id + "' has no observed outcome");
    }
    if (auto it = narrative.find(n.user_id); it != narrative.end() && !it->second.text.empty()) {
      c.profile_text = it->second.text;
    } else if (auto jt = expert.find(n.user_id); jt != expert.end() && !jt->second.text.empty()) {
      c.profile_text = jt->second.text;
    } else if (rec) {
      c.profile_text = profiling::render_raw_values(*rec, train.schema());
    } else {
      throw ReasoningError(ReasoningError::Kind::MissingCaseProfile, "no profile or record for case '" + n.user_id + "'");
    }
    out.push_back(std::move(c));
  }
  return out;
}

dataset::Label Recommendation::as_label() const {
  if (label) return *label;
  return dataset::make_brand_set(brands);
}

std::optional<std::string> find_json_object(const std::string& text) {
  for (std::size_t start = text.find('{'); start != std::string::npos; start = text.find('{', start + 1)) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (quote) {
        if (c == '\\') {
          ++i;
        } else if (c == quote && !inner_apostrophe(text, i)) {
          quote = 0;
        }
        continue;
      }
      if (c == '\'' || c == '"') {
        // An apostrophe inside a bare word is not a string delimiter.
        const char prev = i > start ? text[i - 1] : ' ';
        if (c == '\'' && std::isalnum(static_cast<unsigned char>(prev))) continue;
        quote = c;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) return text.substr(start, i - start + 1);
      }
    }
  }
  return std::nullopt;
}

Recommendation parse_response(const std::string& completion, const TaskSpec& task) {
  auto region = find_json_object(completion);
  if (!region) throw ReasoningError(ReasoningError::Kind::NoJsonFound, "no balanced {...} in completion", completion);
  auto obj = LenientParser(*region).object();
  if (!obj) throw ReasoningError(ReasoningError::Kind::NoJsonFound, "unparseable object " + *region, completion);

  Recommendation rec;
  rec.raw = completion;
  if (task.kind == TaskKind::BinaryResponse) {
    if (!obj->contains("label")) throw ReasoningError(ReasoningError::Kind::BadLabel, "no 'label' field", completion);
    rec.label = parse_label(obj->at("label"), completion);
  } else {
    if (!obj->contains("brand")) throw ReasoningError(ReasoningError::Kind::WrongBrandCount, "no 'brand' field", completion);
    std::map<std::string, std::string> catalog;
    for (const auto& b : task.brands) catalog.emplace(text::to_lower(b.token), b.token);
    std::set<std::string> seen;
    for (const auto& token : brand_tokens(obj->at("brand"))) {
      auto it = catalog.find(text::to_lower(token));
      if (it == catalog.end())
        throw ReasoningError(ReasoningError::Kind::UnknownBrand, "unknown brand '" + token + "'", completion);
      if (seen.insert(it->second).second) rec.brands.push_back(it->second);
    }
    if (rec.brands.size() != task.top_n)
      throw ReasoningError(ReasoningError::Kind::WrongBrandCount,
                           "got " + std::to_string(rec.brands.size()) + " distinct brands, want " +
                               std::to_string(task.top_n),
                           completion);
  }
  if (obj->contains("confidence")) {
    if (auto c = as_number(obj->at("confidence"))) {
      double v = *c > 1.0 ? *c / 100.0 : *c;
      rec.confidence = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    }
  }
  if (obj->contains("reason")) {
    const auto& r = obj->at("reason");
    rec.reason = r.is_string() ? r.get<std::string>() : r.dump();
  }
  return rec;
}

std::string render_recommendation(const Recommendation& rec, const TaskSpec& task) {
  std::string head;
  if (task.kind == TaskKind::BinaryResponse) {
    head = "'label': " + std::to_string(rec.label.value_or(0));
  } else {
    head = "'brand': " + quote_single(text::join(rec.brands, ", "));
  }
  return "{" + head + ", 'confidence': " + text::shortest(rec.confidence) + ", 'reason': " + quote_single(rec.reason) + "}";
}

nlohmann::json to_json(const Recommendation& rec) {
  nlohmann::json doc = {{"confidence", rec.confidence}, {"reason", rec.reason}};
  if (rec.label) doc["label"] = *rec.label;
  else doc["brands"] = rec.brands;
  return doc;
}

nlohmann::json Decision::to_json() const {
  nlohmann::json doc = {{"user_id", user_id},
                        {"prompt_sha256", prompt_sha256},
                        {"completion", completions.empty() ? std::string() : completions.back()},
                        {"parsed", parsed ? reasoning::to_json(*parsed) : nlohmann::json()},
                        {"attempts", attempts()}};
  if (completions.size() > 1) doc["completions"] = completions;
  if (error) doc["error"] = *error;
  return doc;
}

Decision recommend(llm::Backend& client, const TaskSpec& task, const PromptBundle& bundle, const std::string& user_id,
                   const RecommendOptions& options) {
  auto decision = recommend_logged(client, task, bundle, user_id, options);
  if (!decision.parsed)
    throw ReasoningError(ReasoningError::Kind::ExhaustedRetries,
                         "user '" + user_id + "' after " + std::to_string(decision.attempts()) + " attempts: " +
                             decision.error.value_or(""),
                         decision.completions.empty() ? std::string() : decision.completions.back());
  return decision;
}

Decision recommend_logged(llm::Backend& client, const TaskSpec& task, const PromptBundle& bundle,
                          const std::string& user_id, const RecommendOptions& options) {
  llm::CompletionRequest request;
  request.model = options.model;
  request.user = bundle.render();
  request.temperature = options.temperature;
  request.max_tokens = options.max_tokens;

  Decision d;
  d.user_id = user_id;
  d.prompt_sha256 = llm::sha256_hex(request.user);
  const int attempts = 1 + std::max(0, options.retries);
  for (int a = 0; a < attempts; ++a) {
    d.completions.push_back(client.complete(request).text);
    try {
      d.parsed = parse_response(d.completions.back(), task);
      d.error.reset();
      return d;
    } catch (const ReasoningError& e) {
      d.error = e.kind() + ": " + e.what();
    }
  }
  return d;
}

}  // namespace adarec::reasoning
