#include "vhm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "http_util.hpp"
#include "vhm/hashing.hpp"

namespace vhm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKeys{"id", "image", "question", "reference_answer"};

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string field(const json& obj, const char* key, std::size_t line) {
    const auto& v = obj.at(key);
    if (!v.is_string())
        throw ManifestError("manifest line " + std::to_string(line) + ": '" + key + "' must be a string");
    auto s = v.get<std::string>();
    if (blank(s))
        throw ManifestError("manifest line " + std::to_string(line) + ": '" + key + "' is empty");
    return s;
}

}  // namespace

bool CorpusRecord::is_url() const noexcept {
    return image.rfind("http://", 0) == 0 || image.rfind("https://", 0) == 0;
}

bool operator==(const CorpusManifest& a, const CorpusManifest& b) {
    if (a.source_name != b.source_name || a.record_limit != b.record_limit) return false;
    if (a.records.size() != b.records.size()) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& x = a.records[i];
        const auto& y = b.records[i];
        if (x.id != y.id || x.image != y.image || x.question != y.question ||
            x.reference_answer != y.reference_answer || x.categories != y.categories)
            return false;
    }
    return true;
}

CorpusManifest load_manifest(const fs::path& path, const ManifestOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());

    CorpusManifest manifest;
    manifest.source_name = path.filename().string();
    manifest.record_limit = options.limit;
    const fs::path base = path.parent_path();
    std::map<std::string, std::size_t> seen;

    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (options.limit && manifest.records.size() >= *options.limit) break;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (blank(text)) continue;

        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::exception& e) {
            throw ManifestError("manifest line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
        }
        if (!obj.is_object()) throw ManifestError("manifest line " + std::to_string(line) + ": not an object");
        std::set<std::string> keys;
        for (const auto& [k, _] : obj.items()) keys.insert(k);
        if (keys != kKeys)
            throw ManifestError("manifest line " + std::to_string(line) +
                                ": keys must be exactly {id, image, question, reference_answer}");

        CorpusRecord rec;
        rec.id = field(obj, "id", line);
        rec.image = field(obj, "image", line);
        rec.question = field(obj, "question", line);
        rec.reference_answer = field(obj, "reference_answer", line);
        rec.categories = classify(rec.question);
        rec.line = line;

        if (auto [it, inserted] = seen.emplace(rec.id, line); !inserted)
            throw ManifestError("duplicate id '" + rec.id + "' on lines " + std::to_string(it->second) +
                                " and " + std::to_string(line));

        if (rec.is_url()) {
            rec.image_location = rec.image;
        } else {
            fs::path p(rec.image);
            rec.image_location = (p.is_absolute() ? p : base / p).lexically_normal().string();
            if (!fs::exists(rec.image_location)) {
                const std::string msg = "manifest line " + std::to_string(line) + ": image not found: " +
                                        rec.image_location;
                if (options.strict) throw ManifestError(msg);
                spdlog::warn("{}; record '{}' will be skipped", msg, rec.id);
                rec.skippable = true;
                rec.skip_reason = "image not found: " + rec.image_location;
            }
        }
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

std::string serialize_manifest(const CorpusManifest& manifest) {
    std::string out;
    for (const auto& r : manifest.records) {
        json obj{{"id", r.id}, {"image", r.image}, {"question", r.question}, {"reference_answer", r.reference_answer}};
        out += obj.dump();
        out += '\n';
    }
    return out;
}

codec::Bytes fetch_image(const CorpusRecord& record, const ContentCache& cache) {
    if (!record.is_url()) return codec::read_file(record.image_location);

    const std::string key = sha256_hex(record.image_location);
    if (auto hit = cache.get("download", key)) return codec::Bytes(hit->begin(), hit->end());

    const auto url = detail::split_url(record.image_location);
    httplib::Client cli(url.origin);
    cli.set_follow_location(true);
    auto res = cli.Get(url.path);
    if (!res) throw RetriableError("image fetch failed for " + record.image_location + ": " +
                                   httplib::to_string(res.error()));
    detail::raise_for_status(res->status, res->body, "image fetch");
    cache.put("download", key, res->body);
    return codec::Bytes(res->body.begin(), res->body.end());
}

}  // namespace vhm
