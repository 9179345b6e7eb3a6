#include "adarec/llm_client.hpp"

#include <array>
#include <cmath>
#include <ctime>
#include <fstream>
#include <thread>

#include <openssl/evp.h>

#include <httplib.h>

namespace adarec::llm {

namespace {

const char* kind_name(LlmError::Kind kind) {
  switch (kind) {
    case LlmError::Kind::Timeout: return "Timeout";
    case LlmError::Kind::HttpStatus: return "HttpStatus";
    case LlmError::Kind::Transport: return "Transport";
    case LlmError::Kind::BadResponse: return "BadResponse";
    case LlmError::Kind::CassetteMiss: return "CassetteMiss";
    case LlmError::Kind::ScriptExhausted: return "ScriptExhausted";
    case LlmError::Kind::ConfigError: return "ConfigError";
  }
  return "LlmError";
}

nlohmann::json number_json(double value) {
  if (std::isfinite(value) && value == std::floor(value) && std::fabs(value) < 1e15)
    return static_cast<long long>(value);
  return value;
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

CompletionResponse timed(std::string text, std::string model, std::chrono::steady_clock::time_point start) {
  CompletionResponse r;
  r.text = std::move(text);
  r.model = std::move(model);
  r.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return r;
}

std::map<std::string, std::string> read_entries(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (auto& e : load_cassette(path)) out.emplace(e.hash, std::move(e.response_text));
  return out;
}

}  // namespace

LlmError::LlmError(Kind kind, const std::string& message) : Error("llm_client", kind_name(kind), message), code_(kind) {}

nlohmann::json canonical_json(const CompletionRequest& request) {
  nlohmann::json j;
  j["max_tokens"] = request.max_tokens;
  j["model"] = request.model;
  if (request.system) j["system"] = *request.system;
  j["temperature"] = number_json(request.temperature);
  j["user"] = request.user;
  return j;
}

std::string canonical_string(const CompletionRequest& request) { return canonical_json(request).dump(); }

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string canonical_hash(const CompletionRequest& request) { return sha256_hex(canonical_string(request)); }

nlohmann::json chat_body(const CompletionRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  nlohmann::json body;
  body["model"] = request.model;
  body["messages"] = std::move(messages);
  body["temperature"] = number_json(request.temperature);
  body["max_tokens"] = request.max_tokens;
  return body;
}

CompletionResponse parse_chat_response(const std::string& body) {
  try {
    const auto doc = nlohmann::json::parse(body);
    const auto& choice = doc.at("choices").at(0);
    CompletionResponse r;
    if (choice.contains("message")) {
      r.text = choice.at("message").at("content").get<std::string>();
    } else {
      r.text = choice.at("text").get<std::string>();
    }
    r.model = doc.value("model", "");
    if (doc.contains("usage") && doc["usage"].is_object()) {
      Usage u;
      u.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
      u.completion_tokens = doc["usage"].value("completion_tokens", 0);
      r.usage = u;
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw LlmError(LlmError::Kind::BadResponse, std::string("unparseable chat response: ") + e.what());
  }
}

MockBackend::MockBackend(std::vector<std::string> fifo) : fifo_(fifo.begin(), fifo.end()) {}
MockBackend::MockBackend(Responder responder) : responder_(std::move(responder)) {}

void MockBackend::push(std::string completion) {
  std::lock_guard lock(mu_);
  fifo_.push_back(std::move(completion));
}

void MockBackend::set_keyed(const std::string& request_hash, std::string completion) {
  std::lock_guard lock(mu_);
  keyed_[request_hash] = std::move(completion);
}

void MockBackend::set_responder(Responder responder) {
  std::lock_guard lock(mu_);
  responder_ = std::move(responder);
}

CompletionResponse MockBackend::complete(const CompletionRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  Responder responder;
  {
    std::lock_guard lock(mu_);
    ++calls_;
    if (!keyed_.empty()) {
      if (auto it = keyed_.find(canonical_hash(request)); it != keyed_.end())
        return timed(it->second, request.model, start);
    }
    if (!fifo_.empty()) {
      std::string text = std::move(fifo_.front());
      fifo_.pop_front();
      return timed(std::move(text), request.model, start);
    }
    if (!responder_) throw LlmError(LlmError::Kind::ScriptExhausted, "mock script exhausted");
    responder = responder_;
  }
  return timed(responder(request), request.model, start);
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
  const auto& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw LlmError(LlmError::Kind::ConfigError, "base_url must include a scheme: '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

CompletionResponse LiveBackend::complete(const CompletionRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  const std::string body = chat_body(request).dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto backoff = config_.retry_backoff;
  for (int attempt = 0;; ++attempt) {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    auto res = client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      if (attempt == 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
        continue;
      }
      const auto kind = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                            ? LlmError::Kind::Timeout
                            : LlmError::Kind::Transport;
      throw LlmError(kind, "request to " + scheme_host_port_ + " failed: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300) {
      LlmError e(LlmError::Kind::HttpStatus,
                 "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
      e.status = res->status;
      throw e;
    }
    auto parsed = parse_chat_response(res->body);
    parsed.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    if (parsed.model.empty()) parsed.model = request.model;
    return parsed;
  }
}

std::vector<CassetteEntry> load_cassette(const std::filesystem::path& path) {
  std::vector<CassetteEntry> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CassetteEntry e;
      e.hash = j.at("hash").get<std::string>();
      e.request = j.value("request", nlohmann::json::object());
      e.response_text = j.at("response_text").get<std::string>();
      e.recorded_at = j.value("recorded_at", "");
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw LlmError(LlmError::Kind::BadResponse,
                     path.string() + ":" + std::to_string(lineno) + ": bad cassette entry: " + e.what());
    }
  }
  return out;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& cassette) : entries_(read_entries(cassette)) {}

CompletionResponse ReplayBackend::complete(const CompletionRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  const auto hash = canonical_hash(request);
  auto it = entries_.find(hash);
  if (it == entries_.end()) throw LlmError(LlmError::Kind::CassetteMiss, "no cassette entry for " + hash);
  return timed(it->second, request.model, start);
}

RecordBackend::RecordBackend(std::filesystem::path cassette, std::shared_ptr<Backend> inner)
    : path_(std::move(cassette)), inner_(std::move(inner)), entries_(read_entries(path_)) {}

CompletionResponse RecordBackend::complete(const CompletionRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  const auto hash = canonical_hash(request);
  {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(hash); it != entries_.end()) return timed(it->second, request.model, start);
  }
  auto response = inner_->complete(request);
  std::lock_guard lock(mu_);
  if (entries_.emplace(hash, response.text).second) {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw LlmError(LlmError::Kind::ConfigError, "cannot append to cassette " + path_.string());
    nlohmann::json entry = {{"hash", hash},
                            {"request", canonical_json(request)},
                            {"response_text", response.text},
                            {"recorded_at", utc_now()}};
    out << entry.dump() << '\n';
  }
  return response;
}

BoundedBackend::BoundedBackend(std::shared_ptr<Backend> inner, std::size_t max_in_flight)
    : inner_(std::move(inner)), limit_(max_in_flight == 0 ? 1 : max_in_flight) {}

CompletionResponse BoundedBackend::complete(const CompletionRequest& request) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return in_flight_ < limit_; });
    ++in_flight_;
  }
  struct Release {
    BoundedBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  return inner_->complete(request);
}

}  // namespace adarec::llm
