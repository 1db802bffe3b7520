// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "clover/backend.hpp"
#include "clover/error.hpp"
#include "support/fixtures.hpp"

using namespace clover;
using namespace clover::gen;
using namespace std::chrono_literals;

namespace {

class FlakyServer {
 public:
  explicit FlakyServer(int failures, int status = 429) : failures_(failures), status_(status) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      if (calls_++ < failures_) {
        res.status = status_;
        res.set_content("{\"error\":\"slow down\"}", "application/json");
        return;
      }
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Question: a\nAnswer: b"}}],)"
                      R"("usage":{"prompt_tokens":120,"completion_tokens":30}})",
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FlakyServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int calls() const { return calls_; }
  std::string last_auth() const { return last_auth_; }
  std::string last_body() const { return last_body_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int failures_;
  int status_;
  std::atomic<int> calls_{0};
  std::string last_auth_, last_body_;
};

HttpBackendConfig live_config(const std::string& endpoint) {
  HttpBackendConfig c;
  c.endpoint = endpoint;
  c.model = "test-model";
  c.api_key = "sk-test";
  c.timeout = 5s;
  return c;
}

RetryPolicy recording_policy(std::vector<std::chrono::milliseconds>& waits, int max_retries = 5) {
  RetryPolicy p;
  p.max_retries = max_retries;
  p.sleep = [&waits](std::chrono::milliseconds d) { waits.push_back(d); };
  return p;
}

}  // namespace

TEST(CostModel, ExactArithmetic) {
  const auto rates = Rates::from_usd_per_1k(0.0005, 0.0015);
  EXPECT_EQ(rates.in_micro_per_1k, 500);
  EXPECT_EQ(rates.out_micro_per_1k, 1500);
  // 1000 prompt tokens at $0.0005/1k plus 2000 completion tokens at $0.0015/1k = $0.0035.
  EXPECT_EQ(cost_nanousd(1000, 2000, rates), 3'500'000);
  EXPECT_DOUBLE_EQ(nano_to_usd(cost_nanousd(1000, 2000, rates)), 0.0035);
  EXPECT_EQ(usd_to_nano(8.0), 8'000'000'000);
  EXPECT_THROW(Rates::from_usd_per_1k(-1, 0), ConfigError);
}

TEST(CostModel, TokenEstimateIsCeilingOfQuarterLength) {
  EXPECT_EQ(estimate_tokens(""), 0);
  EXPECT_EQ(estimate_tokens("abcd"), 1);
  EXPECT_EQ(estimate_tokens("abcde"), 2);
  const auto env = build_prompt("caption text", {});
  EXPECT_LE(estimate_prompt_tokens(env), prompt_token_ceiling(env));
}

TEST(RetryPolicy, ExponentialWithCap) {
  RetryPolicy p;
  EXPECT_EQ(p.delay(1), 1000ms);
  EXPECT_EQ(p.delay(2), 2000ms);
  EXPECT_EQ(p.delay(5), 16000ms);
  EXPECT_EQ(p.delay(10), 60000ms);
}

TEST(CostMeter, ReservationsNeverExceedBudget) {
  CostMeter m(100);
  EXPECT_TRUE(m.try_reserve(60));
  EXPECT_FALSE(m.try_reserve(50));
  m.settle(60, 40);
  EXPECT_EQ(m.spent(), 40);
  EXPECT_EQ(m.reserved(), 0);
  EXPECT_TRUE(m.try_reserve(60));
  m.release(60);
  EXPECT_EQ(m.spent(), 40);
  CostMeter resumed(100, 90);
  EXPECT_FALSE(resumed.try_reserve(11));
  EXPECT_TRUE(resumed.try_reserve(10));
}

TEST(MockBackend, ServesFixtureByDigest) {
  clover::testing::TempDir dir;
  const auto env = build_prompt("a caption", {});
  clover::testing::write_fixture(dir.path(), env, "Question: q\nAnswer: a");
  MockBackend mock(dir.path());
  EXPECT_EQ(mock.send(env, 512).text, "Question: q\nAnswer: a");
  EXPECT_FALSE(mock.is_live());

  try {
    mock.send(build_prompt("other caption", {}), 512);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.status(), 404);
    EXPECT_FALSE(e.transient());
  }
  EXPECT_THROW(mock.send(env, 2), BackendError);
  EXPECT_THROW(MockBackend(dir / "missing"), ConfigError);
}

TEST(Complete, ReceiptFromEstimatesWhenUsageMissing) {
  clover::testing::TempDir dir;
  const auto env = build_prompt("a caption", {});
  const std::string text = "Question: q\nAnswer: a";
  clover::testing::write_fixture(dir.path(), env, text);
  MockBackend mock(dir.path());
  const auto rates = Rates::from_usd_per_1k(0.0005, 0.0015);
  const auto c = complete(env, mock, RetryPolicy{}, rates, 512, nullptr, "img");
  EXPECT_EQ(c.text, text);
  EXPECT_FALSE(c.receipt.usage_reported);
  EXPECT_EQ(c.receipt.completion_tokens, static_cast<std::int64_t>((text.size() + 3) / 4));
  EXPECT_EQ(c.receipt.cost_nanousd,
            c.receipt.prompt_tokens * 500 + c.receipt.completion_tokens * 1500);
  EXPECT_EQ(receipt_from_json(to_json(c.receipt)), c.receipt);
}

TEST(Complete, BudgetGuardRefusesBeforeSending) {
  clover::testing::TempDir dir;
  const auto env = build_prompt("a caption", {});
  MockBackend mock(dir.path());  // no fixture: a send would fail with 404
  const auto rates = Rates::from_usd_per_1k(0.0005, 0.0015);
  const auto projected = projected_cost_nanousd(env, 512, rates);
  // Hand computation: (bytes of every message + 4 per message + 3) prompt tokens, 512 completion tokens.
  std::int64_t bytes = 0;
  for (const auto& m : env.messages()) bytes += static_cast<std::int64_t>(m.content.size());
  EXPECT_EQ(projected, (bytes + 4 * 2 + 3) * 500 + 512 * 1500);
  CostMeter meter(projected - 1);
  EXPECT_THROW(complete(env, mock, RetryPolicy{}, rates, 512, &meter, "img"), BudgetExceeded);
  EXPECT_EQ(meter.spent(), 0);
  EXPECT_EQ(meter.reserved(), 0);
}

TEST(HttpBackend, MissingCredentialFailsBeforeNetwork) {
  auto c = live_config("http://127.0.0.1:9/v1/chat/completions");
  c.api_key.clear();
  try {
    HttpBackend b(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("CLOVER_API_KEY"), std::string::npos);
  }
  c.api_key = "k";
  c.dialect = "other";
  EXPECT_THROW(HttpBackend{c}, ConfigError);
  c.dialect = "openai-chat";
  c.endpoint = "ftp://x";
  EXPECT_THROW(HttpBackend{c}, ConfigError);
}

TEST(HttpBackend, RetriesRateLimitThenSucceeds) {
  FlakyServer server(1, 429);
  HttpBackend backend(live_config(server.endpoint()));
  std::vector<std::chrono::milliseconds> waits;
  const auto rates = Rates::from_usd_per_1k(0.0005, 0.0015);
  const auto env = build_prompt("a caption", {});
  const auto c = complete(env, backend, recording_policy(waits), rates, 256, nullptr, "img");
  EXPECT_EQ(c.receipt.retries, 1);
  EXPECT_EQ(server.calls(), 2);
  EXPECT_EQ(waits, std::vector<std::chrono::milliseconds>{1000ms});
  EXPECT_TRUE(c.receipt.usage_reported);
  EXPECT_EQ(c.receipt.prompt_tokens, 120);
  EXPECT_EQ(c.receipt.completion_tokens, 30);
  EXPECT_EQ(c.receipt.cost_nanousd, 120 * 500 + 30 * 1500);
  EXPECT_EQ(server.last_auth(), "Bearer sk-test");
  const auto body = json::parse(server.last_body());
  EXPECT_EQ(body.at("model"), "test-model");
  EXPECT_EQ(body.at("max_tokens"), 256);
  EXPECT_EQ(body.at("messages").at(0).at("role"), "system");
}

TEST(HttpBackend, GivesUpAfterMaxRetries) {
  FlakyServer server(100, 503);
  HttpBackend backend(live_config(server.endpoint()));
  std::vector<std::chrono::milliseconds> waits;
  try {
    complete(build_prompt("c", {}), backend, recording_policy(waits, 3), Rates{}, 16, nullptr, "img");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.status(), 503);
    EXPECT_NE(std::string(e.what()).find("giving up after 3 retries"), std::string::npos);
  }
  EXPECT_EQ(server.calls(), 4);
  EXPECT_EQ(waits, (std::vector<std::chrono::milliseconds>{1000ms, 2000ms, 4000ms}));
}

TEST(HttpBackend, ClientErrorsAreNotRetried) {
  FlakyServer server(100, 400);
  HttpBackend backend(live_config(server.endpoint()));
  std::vector<std::chrono::milliseconds> waits;
  EXPECT_THROW(complete(build_prompt("c", {}), backend, recording_policy(waits), Rates{}, 16), BackendError);
  EXPECT_EQ(server.calls(), 1);
  EXPECT_TRUE(waits.empty());
}
