#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adarec/error.hpp"

namespace adarec::llm {

class LlmError : public Error {
 public:
  enum class Kind { Timeout, HttpStatus, Transport, BadResponse, CassetteMiss, ScriptExhausted, ConfigError };

  LlmError(Kind kind, const std::string& message);
  Kind code() const noexcept { return code_; }
  std::optional<int> status;  // HttpStatus only

 private:
  Kind code_;
};

struct CompletionRequest {
  std::string model;
  std::optional<std::string> system;
  std::string user;
  double temperature = 0.0;
  int max_tokens = 1000;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct CompletionResponse {
  std::string text;
  std::string model;
  std::chrono::milliseconds latency{0};
  std::optional<Usage> usage;
};

// Request fields with sorted keys; integral temperatures serialize as integers.
nlohmann::json canonical_json(const CompletionRequest& request);
// Compact dump of canonical_json.
std::string canonical_string(const CompletionRequest& request);
// Lower-case hex SHA-256 of canonical_string.
std::string canonical_hash(const CompletionRequest& request);
std::string sha256_hex(std::string_view data);

// Chat-completions request body: {model, messages, temperature, max_tokens}.
nlohmann::json chat_body(const CompletionRequest& request);
// Extracts choices[0].message.content (or choices[0].text) from a response body.
CompletionResponse parse_chat_response(const std::string& body);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Deterministic offline backend. Lookup order: keyed script by request hash,
// then the FIFO script, then the responder function.
class MockBackend : public Backend {
 public:
  using Responder = std::function<std::string(const CompletionRequest&)>;

  MockBackend() = default;
  explicit MockBackend(std::vector<std::string> fifo);
  explicit MockBackend(Responder responder);

  void push(std::string completion);
  void set_keyed(const std::string& request_hash, std::string completion);
  void set_responder(Responder responder);

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string name() const override { return "mock"; }
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::deque<std::string> fifo_;
  std::map<std::string, std::string> keyed_;
  Responder responder_;
  std::size_t calls_ = 0;
};

struct LiveConfig {
  std::string base_url;  // e.g. https://gateway.example.com/v1
  std::string api_key;
  std::chrono::seconds timeout{60};
  std::chrono::milliseconds retry_backoff{500};
};

// HTTP(S) chat-completions client. Retries once on transport failure.
class LiveBackend : public Backend {
 public:
  explicit LiveBackend(LiveConfig config);
  CompletionResponse complete(const CompletionRequest& request) override;
  std::string name() const override { return "live"; }

 private:
  LiveConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

struct CassetteEntry {
  std::string hash;
  nlohmann::json request;
  std::string response_text;
  std::string recorded_at;
};

std::vector<CassetteEntry> load_cassette(const std::filesystem::path& path);

// Serves completions from a cassette file; holds no network handle at all.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(const std::filesystem::path& cassette);
  CompletionResponse complete(const CompletionRequest& request) override;
  std::string name() const override { return "replay"; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
};

// Replays hits; on a miss asks `inner` and appends the exchange to the cassette.
class RecordBackend : public Backend {
 public:
  RecordBackend(std::filesystem::path cassette, std::shared_ptr<Backend> inner);
  CompletionResponse complete(const CompletionRequest& request) override;
  std::string name() const override { return "record"; }

 private:
  std::filesystem::path path_;
  std::shared_ptr<Backend> inner_;
  std::mutex mu_;
  std::map<std::string, std::string> entries_;
};

// Caps concurrent calls into `inner` at `max_in_flight`.
class BoundedBackend : public Backend {
 public:
  BoundedBackend(std::shared_ptr<Backend> inner, std::size_t max_in_flight);
  CompletionResponse complete(const CompletionRequest& request) override;
  std::string name() const override { return inner_->name(); }

 private:
  std::shared_ptr<Backend> inner_;
  std::size_t limit_;
  std::size_t in_flight_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace adarec::llm
