#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace vhm {

/// Content-addressed file store: <root>/<stage>/<key[0:2]>/<key>.
/// Writes go to a temporary sibling and are renamed into place, so a killed
/// process never leaves a partial entry behind. Safe for concurrent writers;
/// identical keys are last-writer-wins.
class ContentCache {
public:
    explicit ContentCache(std::filesystem::path root);

    std::optional<std::string> get(std::string_view stage, std::string_view key) const;
    void put(std::string_view stage, std::string_view key, std::string_view bytes) const;
    bool contains(std::string_view stage, std::string_view key) const;

    const std::filesystem::path& root() const noexcept { return root_; }

    /// SHA-256 over the canonical (sorted-key) dump of `fields`.
    static std::string key(const nlohmann::json& fields);

private:
    std::filesystem::path path_for(std::string_view stage, std::string_view key) const;

    std::filesystem::path root_;
};

/// Writes `bytes` to `path` via temp-file-then-rename.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

}  // namespace vhm
