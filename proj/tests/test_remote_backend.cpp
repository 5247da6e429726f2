#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include "aggrl/backends.hpp"
#include "aggrl/common.hpp"

using namespace aggrl::backend;
using nlohmann::json;

namespace {

// Local OpenAI-shaped endpoint. The handler runs on the server thread, so
// captured request state goes through a mutex.
struct FakeServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  std::mutex mu;
  std::vector<json> bodies;
  std::vector<std::string> auth_headers;

  explicit FakeServer(httplib::Server::Handler handler) {
    server.Post("/v1/chat/completions",
                [this, handler](const httplib::Request& req,
                                httplib::Response& res) {
                  {
                    std::lock_guard<std::mutex> lock(mu);
                    bodies.push_back(json::parse(req.body));
                    auth_headers.push_back(req.get_header_value("Authorization"));
                  }
                  handler(req, res);
                });
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~FakeServer() {
    server.stop();
    thread.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port) + "/v1";
  }

  int request_count() {
    std::lock_guard<std::mutex> lock(mu);
    return static_cast<int>(bodies.size());
  }
};

std::string chat_body(const std::vector<std::string>& contents) {
  json choices = json::array();
  for (const auto& c : contents)
    choices.push_back({{"message", {{"role", "assistant"}, {"content", c}}}});
  return json{{"choices", choices}}.dump();
}

BackendProfile fast_profile(const FakeServer& s) {
  BackendProfile p;
  p.endpoint_url = s.url();
  p.model_name = "test-model";
  p.auth_env_var = "AGGRL_TEST_TOKEN";
  p.retry.max_attempts = 3;
  p.retry.base_delay = std::chrono::milliseconds(5);
  return p;
}

}  // namespace

TEST_CASE("remote backend posts one user turn and returns the content") {
  FakeServer s([](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_body({"hello back"}), "application/json");
  });
  RemoteBackend backend(fast_profile(s));

  GenerationRequest req;
  req.prompt = "hello there";
  req.params.temperature = 0.7;
  req.params.top_p = 0.9;
  req.params.max_tokens = 256;
  CHECK(backend.generate(req) == std::vector<std::string>{"hello back"});

  std::lock_guard<std::mutex> lock(s.mu);
  REQUIRE(s.bodies.size() == 1);
  const json& body = s.bodies[0];
  CHECK(body["model"] == "test-model");
  REQUIRE(body["messages"].size() == 1);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "hello there");
  CHECK(body["temperature"] == 0.7);
  CHECK(body["top_p"] == 0.9);
  CHECK(body["max_tokens"] == 256);
  CHECK_FALSE(body.contains("top_k"));  // unset means absent, not 0
  CHECK_FALSE(body.contains("n"));      // count=1 never batches
}

TEST_CASE("top_k is forwarded when set") {
  FakeServer s([](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_body({"ok"}), "application/json");
  });
  RemoteBackend backend(fast_profile(s));
  GenerationRequest req;
  req.prompt = "p";
  req.params.top_k = 40;
  backend.generate(req);
  std::lock_guard<std::mutex> lock(s.mu);
  CHECK(s.bodies.at(0)["top_k"] == 40);
}

TEST_CASE("bearer token comes from the profile's env var") {
  setenv("AGGRL_TEST_TOKEN", "tok-sekrit-42", 1);
  {
    FakeServer s([](const httplib::Request&, httplib::Response& res) {
      res.set_content(chat_body({"ok"}), "application/json");
    });
    RemoteBackend backend(fast_profile(s));
    backend.generate({"p", {}, 1});
    std::lock_guard<std::mutex> lock(s.mu);
    CHECK(s.auth_headers.at(0) == "Bearer tok-sekrit-42");
  }
  unsetenv("AGGRL_TEST_TOKEN");
  {
    FakeServer s([](const httplib::Request&, httplib::Response& res) {
      res.set_content(chat_body({"ok"}), "application/json");
    });
    RemoteBackend backend(fast_profile(s));
    backend.generate({"p", {}, 1});
    std::lock_guard<std::mutex> lock(s.mu);
    CHECK(s.auth_headers.at(0).empty());  // no header when the var is unset
  }
}

TEST_CASE("5xx and 429 are retried until they succeed") {
  std::atomic<int> calls{0};
  FakeServer s([&](const httplib::Request&, httplib::Response& res) {
    int c = ++calls;
    if (c == 1) {
      res.status = 500;
      res.set_content("flaky", "text/plain");
    } else if (c == 2) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
    } else {
      res.set_content(chat_body({"finally"}), "application/json");
    }
  });
  RemoteBackend backend(fast_profile(s));
  CHECK(backend.generate({"p", {}, 1}) == std::vector<std::string>{"finally"});
  CHECK(calls == 3);
}

TEST_CASE("other 4xx fail immediately without retry") {
  FakeServer s([](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad request shape", "text/plain");
  });
  RemoteBackend backend(fast_profile(s));
  try {
    backend.generate({"p", {}, 1});
    FAIL("expected BackendError");
  } catch (const aggrl::TransportExhausted&) {
    FAIL("a 400 must not burn the retry budget");
  } catch (const aggrl::BackendError& e) {
    CHECK(std::string(e.what()).find("HTTP 400") != std::string::npos);
    CHECK(std::string(e.what()).find("bad request shape") != std::string::npos);
  }
  CHECK(s.request_count() == 1);
}

TEST_CASE("transport exhaustion reports every attempt and hides the token") {
  setenv("AGGRL_TEST_TOKEN", "tok-should-never-leak", 1);
  FakeServer s([](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("down", "text/plain");
  });
  RemoteBackend backend(fast_profile(s));
  try {
    backend.generate({"p", {}, 1});
    FAIL("expected TransportExhausted");
  } catch (const aggrl::TransportExhausted& e) {
    std::string msg = e.what();
    CHECK(msg.find("after 3 attempts") != std::string::npos);
    CHECK(msg.find("attempt 1") != std::string::npos);
    CHECK(msg.find("attempt 2") != std::string::npos);
    CHECK(msg.find("attempt 3") != std::string::npos);
    CHECK(msg.find("HTTP 503") != std::string::npos);
    CHECK(msg.find("tok-should-never-leak") == std::string::npos);
  }
  CHECK(s.request_count() == 3);
  unsetenv("AGGRL_TEST_TOKEN");
}

TEST_CASE("count>1 batches into a single call when n is supported") {
  FakeServer s([](const httplib::Request& req, httplib::Response& res) {
    int n = json::parse(req.body).value("n", 1);
    std::vector<std::string> contents;
    for (int i = 0; i < n; ++i) contents.push_back("c" + std::to_string(i));
    res.set_content(chat_body(contents), "application/json");
  });
  RemoteBackend backend(fast_profile(s));
  auto out = backend.generate({"p", {}, 3});
  CHECK(out == std::vector<std::string>{"c0", "c1", "c2"});
  CHECK(s.request_count() == 1);
  std::lock_guard<std::mutex> lock(s.mu);
  CHECK(s.bodies.at(0)["n"] == 3);
}

TEST_CASE("count>1 falls back to one call per completion without n") {
  std::atomic<int> calls{0};
  FakeServer s([&](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_body({"c" + std::to_string(calls++)}),
                    "application/json");
  });
  BackendProfile p = fast_profile(s);
  p.supports_n = false;
  RemoteBackend backend(p);
  auto out = backend.generate({"p", {}, 3});
  CHECK(out == std::vector<std::string>{"c0", "c1", "c2"});
  CHECK(s.request_count() == 3);
  std::lock_guard<std::mutex> lock(s.mu);
  for (const auto& body : s.bodies) CHECK_FALSE(body.contains("n"));
}

TEST_CASE("a short choice list is an error, not a silent truncation") {
  FakeServer s([](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_body({"only one"}), "application/json");
  });
  RemoteBackend backend(fast_profile(s));
  CHECK_THROWS_AS(backend.generate({"p", {}, 4}), aggrl::BackendError);
}

TEST_CASE("malformed response bodies are backend errors") {
  FakeServer s([](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json at all", "application/json");
  });
  RemoteBackend backend(fast_profile(s));
  CHECK_THROWS_AS(backend.generate({"p", {}, 1}), aggrl::BackendError);

  FakeServer s2([](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"choices\": []}", "application/json");
  });
  RemoteBackend b2(fast_profile(s2));
  CHECK_THROWS_AS(b2.generate({"p", {}, 1}), aggrl::BackendError);
}

TEST_CASE("max_in_flight caps concurrent wire calls") {
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  FakeServer s([&](const httplib::Request&, httplib::Response& res) {
    int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {}
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --active;
    res.set_content(chat_body({"ok"}), "application/json");
  });
  BackendProfile p = fast_profile(s);
  p.max_in_flight = 2;
  RemoteBackend backend(p);

  std::vector<std::thread> workers;
  for (int i = 0; i < 6; ++i)
    workers.emplace_back([&] { backend.generate({"p", {}, 1}); });
  for (auto& w : workers) w.join();
  CHECK(s.request_count() == 6);
  CHECK(peak.load() <= 2);
}

TEST_CASE("profile validation") {
  BackendProfile p;
  p.endpoint_url = "http://127.0.0.1:1/v1";
  p.max_in_flight = 0;
  CHECK_THROWS_AS(RemoteBackend{p}, std::invalid_argument);
  p.max_in_flight = 1;
  p.retry.max_attempts = 0;
  CHECK_THROWS_AS(RemoteBackend{p}, std::invalid_argument);
  p.retry.max_attempts = 1;
  p.endpoint_url = "no-scheme-here";
  CHECK_THROWS_AS(RemoteBackend{p}, aggrl::BackendError);
}
