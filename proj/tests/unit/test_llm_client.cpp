#include <doctest.h>

#include <atomic>
#include <thread>

#include "adarec/llm_client.hpp"
#include "adarec/mock_responders.hpp"
#include "fixtures.hpp"

// After the Eigen-using headers: <resolv.h> defines a `_res` macro.
#include <httplib.h>

using namespace adarec;
using llm::LlmError;

namespace {

llm::CompletionRequest hello() {
  llm::CompletionRequest r;
  r.model = "test-model";
  r.user = "hello";
  return r;
}

LlmError::Kind llm_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const LlmError& e) {
    return e.code();
  }
  FAIL("no LlmError thrown");
  return LlmError::Kind::ConfigError;
}

}  // namespace

TEST_CASE("canonical request form and hash") {
  CHECK(llm::canonical_string(hello()) == R"({"max_tokens":1000,"model":"test-model","temperature":0,"user":"hello"})");
  CHECK(llm::canonical_hash(hello()) == "e002ca93bed9e779604550772717bce7adbe31819e73ce5c57b8500203a87c57");
  CHECK(llm::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  auto other = hello();
  other.temperature = 0.5;
  CHECK(llm::canonical_hash(other) != llm::canonical_hash(hello()));
}

TEST_CASE("chat body and response parsing") {
  auto r = hello();
  r.system = "be brief";
  const auto body = llm::chat_body(r);
  REQUIRE(body.at("messages").size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["content"] == "hello");
  CHECK(body["max_tokens"] == 1000);

  const auto resp = llm::parse_chat_response(
      R"({"model":"m","choices":[{"message":{"content":"hi"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}})");
  CHECK(resp.text == "hi");
  REQUIRE(resp.usage.has_value());
  CHECK(resp.usage->prompt_tokens == 3);
  CHECK(llm_kind([] { llm::parse_chat_response("{\"choices\":[]}"); }) == LlmError::Kind::BadResponse);
  CHECK(llm_kind([] { llm::parse_chat_response("<html>"); }) == LlmError::Kind::BadResponse);
}

TEST_CASE("mock backend lookup order") {
  llm::MockBackend mock([](const llm::CompletionRequest& r) { return "echo:" + r.user; });
  mock.push("first");
  mock.set_keyed(llm::canonical_hash(hello()), "keyed");
  CHECK(mock.complete(hello()).text == "keyed");
  auto other = hello();
  other.user = "x";
  CHECK(mock.complete(other).text == "first");
  CHECK(mock.complete(other).text == "echo:x");
  CHECK(mock.calls() == 3);

  llm::MockBackend empty;
  CHECK(llm_kind([&] { empty.complete(hello()); }) == LlmError::Kind::ScriptExhausted);
  CHECK(llm_kind([] { mock::responder("nonsense"); }) == LlmError::Kind::ConfigError);
}

TEST_CASE("record then replay through a cassette") {
  testing::TempDir dir;
  const auto path = dir.path() / "c.jsonl";
  auto inner = std::make_shared<llm::MockBackend>([](const llm::CompletionRequest& r) { return "re:" + r.user; });
  {
    llm::RecordBackend rec(path, inner);
    CHECK(rec.complete(hello()).text == "re:hello");
    CHECK(rec.complete(hello()).text == "re:hello");
  }
  CHECK(inner->calls() == 1);
  const auto entries = llm::load_cassette(path);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].hash == llm::canonical_hash(hello()));

  llm::ReplayBackend replay(path);
  CHECK(replay.size() == 1);
  CHECK(replay.complete(hello()).text == "re:hello");
  auto miss = hello();
  miss.user = "unseen";
  CHECK(llm_kind([&] { replay.complete(miss); }) == LlmError::Kind::CassetteMiss);
}

TEST_CASE("bounded backend caps concurrency") {
  std::atomic<int> now{0}, peak{0};
  auto inner = std::make_shared<llm::MockBackend>([&](const llm::CompletionRequest&) {
    const int v = ++now;
    int p = peak.load();
    while (v > p && !peak.compare_exchange_weak(p, v)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --now;
    return std::string("ok");
  });
  llm::BoundedBackend bounded(inner, 2);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { bounded.complete(hello()); });
  for (auto& t : threads) t.join();
  CHECK(peak.load() <= 2);
  CHECK(inner->calls() == 8);
}

TEST_CASE("live backend speaks chat completions over HTTP") {
  httplib::Server server;
  std::string seen_auth, seen_path;
  nlohmann::json seen_body;
  server.Post(R"(/v1/chat/completions)", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_path = req.path;
    seen_body = nlohmann::json::parse(req.body);
    res.set_content(R"({"model":"srv","choices":[{"message":{"role":"assistant","content":"pong"}}]})",
                    "application/json");
  });
  server.Post(R"(/err/chat/completions)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 429;
    res.set_content("slow down", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  llm::LiveBackend live({base + "/v1", "sk-test", std::chrono::seconds(5), std::chrono::milliseconds(1)});
  const auto resp = live.complete(hello());
  CHECK(resp.text == "pong");
  CHECK(seen_auth == "Bearer sk-test");
  CHECK(seen_path == "/v1/chat/completions");
  CHECK(seen_body["model"] == "test-model");
  CHECK(seen_body["messages"][0]["content"] == "hello");

  llm::LiveBackend failing({base + "/err", "", std::chrono::seconds(5), std::chrono::milliseconds(1)});
  try {
    failing.complete(hello());
    FAIL("expected HttpStatus");
  } catch (const LlmError& e) {
    CHECK(e.code() == LlmError::Kind::HttpStatus);
    CHECK(e.status == std::optional<int>(429));
  }
  server.stop();
  loop.join();

  llm::LiveBackend closed({base + "/v1", "", std::chrono::seconds(1), std::chrono::milliseconds(1)});
  const auto kind = llm_kind([&] { closed.complete(hello()); });
  CHECK((kind == LlmError::Kind::Transport || kind == LlmError::Kind::Timeout));
}
