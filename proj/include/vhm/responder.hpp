#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vhm/cache.hpp"
#include "vhm/codec.hpp"
#include "vhm/retry.hpp"
#include "vhm/variant.hpp"

namespace vhm {

struct GenerationRequest {
    std::string record_id;
    Variant variant = Variant::Org;
    codec::Bytes image;  ///< PNG-encoded variant
    std::string question;
    int sample_count = 3;
    std::string model_id = "gpt-3.5-turbo";
    double temperature = 0.7;

    void validate() const;
};

struct VariantResponse {
    std::string record_id;
    Variant variant = Variant::Org;
    std::vector<std::string> samples;
    std::string model_id;
    double latency_ms = 0.0;
    bool from_cache = false;
};

class Responder {
public:
    virtual ~Responder() = default;
    virtual VariantResponse generate(const GenerationRequest& req) = 0;
    /// Folded into generation cache keys; two responders with the same identity
    /// must produce the same samples.
    virtual std::string identity() const = 0;
};

/// (record_id, variant) -> canned answers.
using ResponderFixture = std::map<std::pair<std::string, Variant>, std::vector<std::string>>;

/// JSON object: {"<record_id>": {"ORG": [...], "NR": [...], "EE": [...]}, ...}
ResponderFixture load_responder_fixture(const std::filesystem::path& path);

struct MockResponderOptions {
    std::uint64_t seed = 0;
    ResponderFixture fixture;
    std::chrono::milliseconds latency{0};
    /// Records whose calls always fail with a retriable error.
    std::set<std::string> failing_records;
};

/// Deterministic responder. Fixture entries are returned verbatim (cycled to
/// fill N samples); anything else gets a synthetic answer seeded from the
/// request fields and the seed. Instrumented with call and in-flight counters.
class MockResponder final : public Responder {
public:
    explicit MockResponder(MockResponderOptions options = {});

    VariantResponse generate(const GenerationRequest& req) override;
    std::string identity() const override;

    long calls() const noexcept { return calls_.load(); }
    int max_in_flight() const noexcept { return max_in_flight_.load(); }

    static std::string synthetic_sample(const GenerationRequest& req, std::uint64_t seed, int index);

private:
    MockResponderOptions options_;
    std::string fixture_digest_;
    std::atomic<long> calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

struct HttpResponderOptions {
    std::string endpoint;  ///< full URL, e.g. https://host/v1/answer
    std::string api_key_env = "VHM_RESPONDER_API_KEY";
    RetryPolicy retry{};
    double requests_per_second = 0.0;
    std::chrono::milliseconds timeout{60000};
};

/// POST {model, question, image_base64, n, temperature} -> {samples: [...]}.
class HttpResponder final : public Responder {
public:
    explicit HttpResponder(HttpResponderOptions options);

    VariantResponse generate(const GenerationRequest& req) override;
    std::string identity() const override;

private:
    HttpResponderOptions options_;
    std::string api_key_;
    RateLimiter limiter_;
};

/// Caps the number of concurrent generate() calls reaching `inner`.
class ConcurrencyLimitedResponder final : public Responder {
public:
    ConcurrencyLimitedResponder(Responder& inner, int limit);

    VariantResponse generate(const GenerationRequest& req) override;
    std::string identity() const override { return inner_.identity(); }

private:
    Responder& inner_;
    std::counting_semaphore<4096> slots_;
};

/// Serves samples from the content cache when every sample index is present;
/// otherwise calls `inner` and stores one entry per sample index.
class CachingResponder final : public Responder {
public:
    CachingResponder(Responder& inner, const ContentCache& cache) : inner_(inner), cache_(cache) {}

    VariantResponse generate(const GenerationRequest& req) override;
    std::string identity() const override { return inner_.identity(); }

    /// Cache key of one sample.
    std::string sample_key(const GenerationRequest& req, int index) const;
    bool cached(const GenerationRequest& req) const;

private:
    Responder& inner_;
    const ContentCache& cache_;
};

}  // namespace vhm
