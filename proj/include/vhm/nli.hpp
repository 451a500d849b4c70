#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vhm/retry.hpp"

namespace vhm {

/// Raw three-class NLI outputs for one premise/hypothesis pair.
struct NliLogits {
    double entail = 0.0;
    double neutral = 0.0;
    double contra = 0.0;
    friend bool operator==(const NliLogits&, const NliLogits&) = default;
};

struct NliPair {
    std::string premise;
    std::string hypothesis;
    friend auto operator<=>(const NliPair&, const NliPair&) = default;
};

/// Anything that turns premise/hypothesis pairs into logits, order-preserving.
class NliClient {
public:
    virtual ~NliClient() = default;
    virtual std::vector<NliLogits> infer(std::span<const NliPair> pairs) = 0;
    /// Stable identifier folded into score cache keys.
    virtual std::string identity() const = 0;
};

/// Deterministic in-process stand-in for the NLI service.
///
/// Pairs found in the lookup table get their configured logits. Everything
/// else goes through a lexical heuristic: identical normalized text is
/// entailment; disagreeing numbers, colors, or negation read as contradiction;
/// otherwise entailment scales with hypothesis token coverage.
class StubNliClient final : public NliClient {
public:
    StubNliClient() = default;
    explicit StubNliClient(std::map<NliPair, NliLogits> table) : table_(std::move(table)) {}

    /// JSON file: [{"premise": str, "hypothesis": str, "logits": [ze, zn, zc]}, ...]
    static StubNliClient from_file(const std::filesystem::path& path);

    std::vector<NliLogits> infer(std::span<const NliPair> pairs) override;
    std::string identity() const override;

    static NliLogits heuristic(const NliPair& pair);

private:
    std::map<NliPair, NliLogits> table_;
};

struct HttpNliOptions {
    std::string base_url;  ///< e.g. http://127.0.0.1:8000
    std::string model_id = "nli-default";
    std::size_t max_batch = 32;
    RetryPolicy retry{};
    std::chrono::milliseconds timeout{30000};
};

/// Client for `POST /v1/nli` and `GET /healthz`.
class HttpNliClient final : public NliClient {
public:
    explicit HttpNliClient(HttpNliOptions options);

    std::vector<NliLogits> infer(std::span<const NliPair> pairs) override;
    std::string identity() const override;
    /// True when the health endpoint answers {"status":"ok"}.
    bool healthy() const;

private:
    std::vector<NliLogits> post_batch(std::span<const NliPair> pairs);

    HttpNliOptions options_;
};

}  // namespace vhm
