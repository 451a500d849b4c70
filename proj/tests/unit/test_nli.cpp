#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "test_support.hpp"
#include "vhm/nli.hpp"
#include "vhm/scoring.hpp"

using namespace vhm;
using nlohmann::json;

namespace {

/// In-process server speaking the /v1/nli wire format, backed by the stub heuristic.
class FakeNliServer {
public:
    explicit FakeNliServer(std::size_t max_batch, int fail_first = 0) : max_batch_(max_batch), fail_left_(fail_first) {
        server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok"})", "application/json");
        });
        server_.Post("/v1/nli", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests;
            if (fail_left_ > 0) {
                --fail_left_;
                res.status = 503;
                return;
            }
            const auto body = json::parse(req.body);
            const auto& pairs = body.at("pairs");
            if (pairs.size() > max_batch_) {
                res.status = 413;
                return;
            }
            json logits = json::array();
            json truncated = json::array();
            for (const auto& p : pairs) {
                if (p.at("premise").get<std::string>().empty()) {
                    res.status = 400;
                    return;
                }
                auto z = StubNliClient::heuristic({p.at("premise"), p.at("hypothesis")});
                logits.push_back({z.entail, z.neutral, z.contra});
                truncated.push_back(false);
            }
            res.set_content(json{{"model_id", body.at("model_id")}, {"logits", logits}, {"truncated", truncated}}.dump(),
                            "application/json");
        });
        port = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeNliServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }

    int port = 0;
    std::atomic<int> requests{0};

private:
    httplib::Server server_;
    std::thread thread_;
    std::size_t max_batch_;
    std::atomic<int> fail_left_;
};

RetryPolicy fast_retry() {
    RetryPolicy p;
    p.max_attempts = 3;
    p.sleep = [](std::chrono::milliseconds) {};
    return p;
}

}  // namespace

TEST_CASE("stub heuristic reproduces the qualitative fixture pairs") {
    StubNliClient stub;
    auto prob = [&](const char* p, const char* h) {
        NliPair pair{p, h};
        return contradiction_probability(stub.infer(std::span(&pair, 1))[0]);
    };
    CHECK(prob("The hose is black.", "The hose is black.") < 0.1);
    CHECK(prob("There are two jellyfish pictured.", "There is one jellyfish in the image.") > 0.9);
    CHECK(prob("There are three buttons on the kitten's sweater", "There are no buttons on the kitten's sweater") > 0.9);
    CHECK(prob("The man's hair is black.", "The man's hair is blond.") > 0.9);
    CHECK(prob("The dog is wearing a hoodie.", "The dog is not wearing a hoodie.") > 0.5);
}

TEST_CASE("stub table entries are returned exactly") {
    const NliPair pair{"premise text", "hypothesis text"};
    StubNliClient stub({{pair, NliLogits{1.25, -0.5, 3.75}}});
    const NliPair other{"x", "y"};
    const std::vector<NliPair> batch{pair, other, pair};
    const auto out = stub.infer(batch);
    REQUIRE(out.size() == 3);
    CHECK(out[0] == NliLogits{1.25, -0.5, 3.75});
    CHECK(out[2] == NliLogits{1.25, -0.5, 3.75});
    CHECK(out[1] == StubNliClient::heuristic(other));
}

TEST_CASE("stub table loads from JSON") {
    test::TempDir dir("nli");
    test::write_text(dir / "table.json", R"([{"premise":"a","hypothesis":"b","logits":[0.5,0.25,-2]}])");
    auto stub = StubNliClient::from_file(dir / "table.json");
    NliPair pair{"a", "b"};
    CHECK(stub.infer(std::span(&pair, 1))[0] == NliLogits{0.5, 0.25, -2});
    CHECK(stub.identity() != StubNliClient().identity());

    test::write_text(dir / "bad.json", R"([{"premise":"a","hypothesis":"b","logits":[1]}])");
    CHECK_THROWS_AS(StubNliClient::from_file(dir / "bad.json"), ConfigError);
}

TEST_CASE("HTTP NLI client: order, batching, and batch-split equivalence") {
    FakeNliServer server(4);
    HttpNliClient client({server.url(), "test-model", 3, fast_retry()});
    CHECK(client.healthy());

    std::vector<NliPair> pairs;
    for (int i = 0; i < 11; ++i)
        pairs.push_back({"There are " + std::to_string(i) + " cats.", "There are " + std::to_string(i % 3) + " cats."});
    const auto all = client.infer(pairs);
    REQUIRE(all.size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(all[i] == StubNliClient::heuristic(pairs[i]));

    const auto left = client.infer(std::span(pairs).first(5));
    const auto right = client.infer(std::span(pairs).subspan(5));
    for (std::size_t i = 0; i < 5; ++i) CHECK(left[i] == all[i]);
    for (std::size_t i = 5; i < pairs.size(); ++i) CHECK(right[i - 5] == all[i]);
}

TEST_CASE("HTTP NLI client splits batches rejected as oversize") {
    FakeNliServer server(2);
    HttpNliClient client({server.url(), "m", 8, fast_retry()});
    std::vector<NliPair> pairs(7, NliPair{"a b", "a c"});
    CHECK(client.infer(pairs).size() == 7);
}

TEST_CASE("HTTP NLI client retries transient failures and reports protocol errors") {
    {
        FakeNliServer server(8, 2);
        HttpNliClient client({server.url(), "m", 8, fast_retry()});
        NliPair pair{"x", "y"};
        CHECK(client.infer(std::span(&pair, 1)).size() == 1);
        CHECK(server.requests == 3);
    }
    {
        FakeNliServer server(8, 5);
        HttpNliClient client({server.url(), "m", 8, fast_retry()});
        NliPair pair{"x", "y"};
        CHECK_THROWS_AS(client.infer(std::span(&pair, 1)), RetriableError);
    }
    {
        FakeNliServer server(8);
        HttpNliClient client({server.url(), "m", 8, fast_retry()});
        NliPair pair{"", "y"};
        CHECK_THROWS_AS(client.infer(std::span(&pair, 1)), ProtocolError);
    }
}

TEST_CASE("HTTP NLI client against an unreachable host") {
    HttpNliOptions opts{"http://127.0.0.1:1", "m", 8, fast_retry(), std::chrono::milliseconds(200)};
    HttpNliClient client(opts);
    CHECK_FALSE(client.healthy());
    NliPair pair{"x", "y"};
    CHECK_THROWS_AS(client.infer(std::span(&pair, 1)), RetriableError);
}
