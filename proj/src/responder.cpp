#include "vhm/responder.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "http_util.hpp"
#include "vhm/errors.hpp"
#include "vhm/hashing.hpp"
#include "vhm/taxonomy.hpp"

namespace vhm {

using nlohmann::json;

namespace {

/// SplitMix64; the mock must not depend on library RNG distributions.
struct SplitMix {
    std::uint64_t state;
    std::uint64_t next() noexcept {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::size_t pick(std::size_t n) noexcept { return static_cast<std::size_t>(next() % n); }
};

std::vector<std::string> lower_words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '\'') {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool is_stop(const std::string& w) {
    static const std::array<std::string_view, 22> kStop{
        "are", "is",  "do",   "does", "can",  "in",   "on",  "of",   "there", "you", "the",
        "this", "that", "at", "to",   "with", "shown", "visible", "have", "has", "wearing", "a"};
    return std::find(kStop.begin(), kStop.end(), w) != kStop.end();
}

std::string phrase_from(const std::vector<std::string>& ws, std::size_t start) {
    std::string out;
    for (std::size_t i = start; i < ws.size() && i < start + 3 && !is_stop(ws[i]); ++i) {
        if (!out.empty()) out += ' ';
        out += ws[i];
    }
    return out;
}

/// Rough subject of a question, for synthetic answers.
std::string subject_of(std::string_view question) {
    const auto ws = lower_words(question);
    for (std::size_t i = 0; i + 1 < ws.size(); ++i) {
        if (ws[i] == "many") {
            auto p = phrase_from(ws, i + 1);
            if (!p.empty()) return p;
        }
    }
    for (std::size_t i = 0; i + 1 < ws.size(); ++i) {
        if (ws[i] == "the" && ws[i + 1] != "color" && ws[i + 1] != "colour" && ws[i + 1] != "image") {
            auto p = phrase_from(ws, i + 1);
            if (!p.empty()) return p;
        }
    }
    return "object";
}

}  // namespace

void GenerationRequest::validate() const {
    if (record_id.empty()) throw InvalidArgument("generation request without record id");
    if (sample_count < 1) throw InvalidArgument("sample_count must be >= 1");
    if (image.empty()) throw InvalidArgument("generation request without image");
    if (question.empty()) throw InvalidArgument("generation request without question");
    if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
}

ResponderFixture load_responder_fixture(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open responder fixture " + path.string());
    ResponderFixture fixture;
    try {
        const json doc = json::parse(in);
        for (const auto& [record_id, by_variant] : doc.items()) {
            for (const auto& [name, texts] : by_variant.items()) {
                auto v = parse_variant(name);
                if (!v) throw ConfigError("responder fixture: unknown variant " + name);
                auto list = texts.get<std::vector<std::string>>();
                if (list.empty()) throw ConfigError("responder fixture: empty list for " + record_id);
                fixture[{record_id, *v}] = std::move(list);
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("responder fixture " + path.string() + ": " + e.what());
    }
    return fixture;
}

MockResponder::MockResponder(MockResponderOptions options) : options_(std::move(options)) {
    json f = json::array();
    for (const auto& [key, texts] : options_.fixture)
        f.push_back({key.first, to_string(key.second), texts});
    fixture_digest_ = sha256_hex(f.dump()).substr(0, 16);
}

std::string MockResponder::identity() const {
    return "mock:v1:seed=" + std::to_string(options_.seed) + ":fixture=" + fixture_digest_;
}

std::string MockResponder::synthetic_sample(const GenerationRequest& req, std::uint64_t seed, int index) {
    const json fields{{"record_id", req.record_id}, {"variant", to_string(req.variant)},
                      {"question", req.question},   {"model", req.model_id},
                      {"temperature", req.temperature}, {"n", req.sample_count},
                      {"seed", seed},               {"index", index}};
    SplitMix rng{std::stoull(sha256_hex(fields.dump()).substr(0, 16), nullptr, 16)};

    static const std::array<std::string_view, 7> kCounts{"no", "one", "two", "three", "four", "five", "six"};
    static const std::array<std::string_view, 9> kColors{"red", "black", "white", "blue", "green",
                                                         "yellow", "brown", "gray", "orange"};
    static const std::array<std::string_view, 3> kObject{
        "The {} appears clearly in the image.", "It looks like a {} near the center.",
        "The image shows a {} in the foreground."};
    static const std::array<std::string_view, 3> kTails{
        " The lighting makes fine details hard to see.", " It is partly occluded.",
        " Nothing else stands out."};

    const std::string subject = subject_of(req.question);
    const auto category = primary_category(classify(req.question));
    std::string text;
    switch (category) {
        case QuestionCategory::Quantity: {
            const auto n = kCounts[rng.pick(kCounts.size())];
            text = n == "one" ? "There is one " + subject + " in the image."
                              : "There are " + std::string(n) + " " + subject + " in the image.";
            break;
        }
        case QuestionCategory::Color:
            text = "The " + subject + " is " + std::string(kColors[rng.pick(kColors.size())]) + ".";
            break;
        default: {
            std::string pattern(kObject[rng.pick(kObject.size())]);
            pattern.replace(pattern.find("{}"), 2, subject);
            text = pattern;
            break;
        }
    }
    if (rng.pick(10) < 3) text += kTails[rng.pick(kTails.size())];
    return text;
}

VariantResponse MockResponder::generate(const GenerationRequest& req) {
    req.validate();
    ++calls_;
    const int now = ++in_flight_;
    int seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    struct Leave {
        std::atomic<int>& counter;
        ~Leave() { --counter; }
    } leave{in_flight_};

    if (options_.latency.count() > 0) std::this_thread::sleep_for(options_.latency);
    if (options_.failing_records.contains(req.record_id))
        throw RetriableError("mock responder: injected failure for " + req.record_id);

    VariantResponse out;
    out.record_id = req.record_id;
    out.variant = req.variant;
    out.model_id = req.model_id;
    out.latency_ms = static_cast<double>(options_.latency.count());
    if (auto it = options_.fixture.find({req.record_id, req.variant}); it != options_.fixture.end()) {
        for (int i = 0; i < req.sample_count; ++i)
            out.samples.push_back(it->second[static_cast<std::size_t>(i) % it->second.size()]);
    } else {
        for (int i = 0; i < req.sample_count; ++i) out.samples.push_back(synthetic_sample(req, options_.seed, i));
    }
    return out;
}

HttpResponder::HttpResponder(HttpResponderOptions options)
    : options_(std::move(options)), limiter_(options_.requests_per_second) {
    detail::split_url(options_.endpoint);
    if (const char* key = std::getenv(options_.api_key_env.c_str())) api_key_ = key;
}

std::string HttpResponder::identity() const { return "http:" + options_.endpoint; }

VariantResponse HttpResponder::generate(const GenerationRequest& req) {
    req.validate();
    const json body{{"model", req.model_id},
                    {"question", req.question},
                    {"image_base64", base64_encode(req.image)},
                    {"n", req.sample_count},
                    {"temperature", req.temperature}};
    const std::string payload = body.dump();
    const auto url = detail::split_url(options_.endpoint);

    return with_retry(options_.retry, [&] {
        limiter_.acquire();
        const auto start = std::chrono::steady_clock::now();
        httplib::Client cli(url.origin);
        cli.set_connection_timeout(options_.timeout);
        cli.set_read_timeout(options_.timeout);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = cli.Post(url.path, headers, payload, "application/json");
        if (!res) throw RetriableError("responder request failed: " + httplib::to_string(res.error()));
        detail::raise_for_status(res->status, res->body, "responder");

        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::exception&) {
            throw ContentError("responder reply is not JSON", res->body);
        }
        if (reply.contains("refusal") && !reply["refusal"].is_null())
            throw ContentError("responder refused the request", res->body);
        if (!reply.contains("samples") || !reply["samples"].is_array())
            throw ContentError("responder reply has no samples", res->body);

        VariantResponse out;
        out.record_id = req.record_id;
        out.variant = req.variant;
        out.model_id = req.model_id;
        for (const auto& s : reply["samples"]) {
            if (!s.is_string() || s.get<std::string>().empty())
                throw ContentError("responder returned an empty sample", res->body);
            out.samples.push_back(s.get<std::string>());
        }
        if (static_cast<int>(out.samples.size()) != req.sample_count)
            throw ContentError("responder returned " + std::to_string(out.samples.size()) +
                                   " samples, expected " + std::to_string(req.sample_count),
                               res->body);
        out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return out;
    });
}

ConcurrencyLimitedResponder::ConcurrencyLimitedResponder(Responder& inner, int limit)
    : inner_(inner), slots_(std::clamp(limit, 1, 4096)) {}

VariantResponse ConcurrencyLimitedResponder::generate(const GenerationRequest& req) {
    slots_.acquire();
    struct Release {
        std::counting_semaphore<4096>& s;
        ~Release() { s.release(); }
    } release{slots_};
    return inner_.generate(req);
}

std::string CachingResponder::sample_key(const GenerationRequest& req, int index) const {
    return ContentCache::key({{"stage", "generation"},
                              {"responder", inner_.identity()},
                              {"record_id", req.record_id},
                              {"variant", to_string(req.variant)},
                              {"question_sha", sha256_hex(req.question)},
                              {"image_sha", sha256_hex(req.image)},
                              {"model", req.model_id},
                              {"temperature", req.temperature},
                              {"n", req.sample_count},
                              {"index", index}});
}

bool CachingResponder::cached(const GenerationRequest& req) const {
    for (int i = 0; i < req.sample_count; ++i)
        if (!cache_.contains("generation", sample_key(req, i))) return false;
    return true;
}

VariantResponse CachingResponder::generate(const GenerationRequest& req) {
    req.validate();
    VariantResponse out;
    out.record_id = req.record_id;
    out.variant = req.variant;
    out.model_id = req.model_id;
    out.from_cache = true;
    for (int i = 0; i < req.sample_count; ++i) {
        auto hit = cache_.get("generation", sample_key(req, i));
        if (!hit) {
            out.samples.clear();
            out.from_cache = false;
            break;
        }
        out.samples.push_back(json::parse(*hit).at("text").get<std::string>());
    }
    if (out.from_cache) return out;

    out = inner_.generate(req);
    for (int i = 0; i < req.sample_count; ++i)
        cache_.put("generation", sample_key(req, i),
                   json{{"record_id", req.record_id}, {"variant", to_string(req.variant)}, {"index", i},
                        {"text", out.samples.at(static_cast<std::size_t>(i))}}
                       .dump());
    out.from_cache = false;
    return out;
}

}  // namespace vhm
