#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vhm/cache.hpp"
#include "vhm/codec.hpp"
#include "vhm/errors.hpp"
#include "vhm/taxonomy.hpp"

namespace vhm {

struct CorpusRecord {
    std::string id;
    std::string image;  ///< as written in the manifest: relative path, absolute path, or http(s) URL
    std::string question;
    std::string reference_answer;
    CategorySet categories;

    std::string image_location;  ///< resolved path or the URL itself
    std::size_t line = 0;        ///< 1-based manifest line
    bool skippable = false;      ///< image missing; excluded from runs
    std::string skip_reason;

    bool is_url() const noexcept;
};

struct CorpusManifest {
    std::vector<CorpusRecord> records;
    std::string source_name;
    std::optional<std::size_t> record_limit;

    friend bool operator==(const CorpusManifest& a, const CorpusManifest& b);
};

struct ManifestOptions {
    std::optional<std::size_t> limit;
    /// Missing local images become errors instead of skippable records.
    bool strict = false;
};

/// Manifest line failed to parse or validate.
class ManifestError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Reads line-delimited JSON, keys exactly {id, image, question, reference_answer}.
/// Blank lines are ignored. Records past `limit` are not read.
CorpusManifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});

/// Inverse of load_manifest (one JSON object per line, file order).
std::string serialize_manifest(const CorpusManifest& manifest);

/// Image bytes for a record; URLs are fetched once and kept in `cache` under
/// the "download" stage, keyed by the URL hash.
codec::Bytes fetch_image(const CorpusRecord& record, const ContentCache& cache);

}  // namespace vhm
