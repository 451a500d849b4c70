#include "vhm/nli.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "http_util.hpp"
#include "vhm/hashing.hpp"
#include "vhm/errors.hpp"

namespace vhm {

using nlohmann::json;

namespace {

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::set<int> numbers(const std::vector<std::string>& ws) {
    static const std::unordered_map<std::string, int> kWords{
        {"zero", 0}, {"no", 0},   {"none", 0},  {"one", 1},   {"single", 1}, {"two", 2},
        {"both", 2}, {"three", 3}, {"four", 4}, {"five", 5},  {"six", 6},    {"seven", 7},
        {"eight", 8}, {"nine", 9}, {"ten", 10}, {"eleven", 11}, {"twelve", 12}};
    std::set<int> out;
    for (const auto& w : ws) {
        if (auto it = kWords.find(w); it != kWords.end()) {
            out.insert(it->second);
        } else if (w.size() <= 6 && std::all_of(w.begin(), w.end(), ::isdigit)) {
            out.insert(std::stoi(w));
        }
    }
    return out;
}

std::set<std::string> colors(const std::vector<std::string>& ws) {
    static const std::unordered_set<std::string> kColors{
        "red",  "orange", "yellow", "green", "blue",   "purple", "violet", "pink",
        "brown", "black", "white",  "gray",  "grey",   "beige",  "silver", "gold",
        "golden", "tan",  "cyan",   "magenta", "maroon", "navy", "teal", "blond", "blonde"};
    std::set<std::string> out;
    for (const auto& w : ws)
        if (kColors.contains(w)) out.insert(w);
    return out;
}

bool negated(std::string_view raw, const std::vector<std::string>& ws) {
    static const std::unordered_set<std::string> kNeg{"not", "never", "cannot", "nothing", "nobody", "none"};
    if (std::any_of(ws.begin(), ws.end(), [](const std::string& w) { return kNeg.contains(w); }))
        return true;
    return raw.find("n't") != std::string_view::npos || raw.find("n’t") != std::string_view::npos;
}

template <typename T>
bool disjoint(const std::set<T>& a, const std::set<T>& b) {
    for (const auto& x : a)
        if (b.contains(x)) return false;
    return true;
}

}  // namespace

StubNliClient StubNliClient::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open NLI stub table " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("NLI stub table " + path.string() + ": " + e.what());
    }
    std::map<NliPair, NliLogits> table;
    for (const auto& entry : doc) {
        const auto& z = entry.at("logits");
        if (!z.is_array() || z.size() != 3) throw ConfigError("NLI stub entry needs 3 logits");
        table[{entry.at("premise").get<std::string>(), entry.at("hypothesis").get<std::string>()}] =
            {z[0].get<double>(), z[1].get<double>(), z[2].get<double>()};
    }
    return StubNliClient(std::move(table));
}

NliLogits StubNliClient::heuristic(const NliPair& pair) {
    const auto p = words(pair.premise);
    const auto h = words(pair.hypothesis);
    if (p == h) return {6.0, 0.0, -6.0};

    const auto pn = numbers(p);
    const auto hn = numbers(h);
    if (!pn.empty() && !hn.empty() && disjoint(pn, hn)) return {-3.0, 0.0, 4.0};

    const auto pc = colors(p);
    const auto hc = colors(h);
    if (!pc.empty() && !hc.empty() && disjoint(pc, hc)) return {-3.0, 0.0, 3.5};

    if (negated(pair.premise, p) != negated(pair.hypothesis, h)) return {-2.0, 0.0, 2.5};

    if (h.empty()) return {0.0, 1.0, 0.0};
    const std::set<std::string> pset(p.begin(), p.end());
    const auto covered = std::count_if(h.begin(), h.end(), [&](const std::string& w) { return pset.contains(w); });
    const double coverage = static_cast<double>(covered) / static_cast<double>(h.size());
    return {4.0 * coverage - 2.0, 0.5, 2.0 - 4.0 * coverage};
}

std::vector<NliLogits> StubNliClient::infer(std::span<const NliPair> pairs) {
    std::vector<NliLogits> out;
    out.reserve(pairs.size());
    for (const auto& pair : pairs) {
        if (auto it = table_.find(pair); it != table_.end()) {
            out.push_back(it->second);
        } else {
            out.push_back(heuristic(pair));
        }
    }
    return out;
}

std::string StubNliClient::identity() const {
    // The table contents participate so editing the table invalidates cached scores.
    json t = json::array();
    for (const auto& [pair, z] : table_)
        t.push_back({pair.premise, pair.hypothesis, z.entail, z.neutral, z.contra});
    return "stub:v1:" + sha256_hex(t.dump()).substr(0, 16);
}

HttpNliClient::HttpNliClient(HttpNliOptions options) : options_(std::move(options)) {
    if (options_.max_batch == 0) throw ConfigError("NLI max batch must be >= 1");
    detail::split_url(options_.base_url);
}

std::string HttpNliClient::identity() const { return "http:" + options_.base_url + ":" + options_.model_id; }

bool HttpNliClient::healthy() const {
    try {
        httplib::Client cli(detail::split_url(options_.base_url).origin);
        cli.set_connection_timeout(options_.timeout);
        cli.set_read_timeout(options_.timeout);
        auto res = cli.Get("/healthz");
        if (!res || res->status != 200) return false;
        return json::parse(res->body).value("status", "") == "ok";
    } catch (const std::exception&) {
        return false;
    }
}

std::vector<NliLogits> HttpNliClient::post_batch(std::span<const NliPair> pairs) {
    json body{{"model_id", options_.model_id}, {"pairs", json::array()}};
    for (const auto& p : pairs) body["pairs"].push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}});
    const std::string payload = body.dump();
    const auto url = detail::split_url(options_.base_url);

    try {
        return with_retry(options_.retry, [&] {
            httplib::Client cli(url.origin);
            cli.set_connection_timeout(options_.timeout);
            cli.set_read_timeout(options_.timeout);
            auto res = cli.Post("/v1/nli", payload, "application/json");
            if (!res) throw RetriableError("NLI request failed: " + httplib::to_string(res.error()));
            detail::raise_for_status(res->status, res->body, "NLI service");
            json reply;
            try {
                reply = json::parse(res->body);
            } catch (const json::exception&) {
                throw ContentError("NLI reply is not JSON", res->body);
            }
            const auto& logits = reply.at("logits");
            if (!logits.is_array() || logits.size() != pairs.size())
                throw ContentError("NLI reply length does not match request", res->body);
            std::vector<NliLogits> out;
            out.reserve(pairs.size());
            for (const auto& z : logits) {
                if (!z.is_array() || z.size() != 3) throw ContentError("NLI reply triple malformed", res->body);
                out.push_back({z[0].get<double>(), z[1].get<double>(), z[2].get<double>()});
            }
            return out;
        });
    } catch (const ProtocolError& e) {
        // Oversize batch: split and retry the halves.
        if (e.status() == 413 && pairs.size() > 1) {
            const auto mid = pairs.size() / 2;
            auto left = post_batch(pairs.first(mid));
            auto right = post_batch(pairs.subspan(mid));
            left.insert(left.end(), right.begin(), right.end());
            return left;
        }
        throw;
    } catch (const json::exception& e) {
        throw ContentError(std::string("NLI reply malformed: ") + e.what(), {});
    }
}

std::vector<NliLogits> HttpNliClient::infer(std::span<const NliPair> pairs) {
    std::vector<NliLogits> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); i += options_.max_batch) {
        auto chunk = post_batch(pairs.subspan(i, std::min(options_.max_batch, pairs.size() - i)));
        out.insert(out.end(), chunk.begin(), chunk.end());
    }
    return out;
}

}  // namespace vhm
