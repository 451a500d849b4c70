#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vhm/raster.hpp"

namespace vhm::test {

inline ImageBuffer random_image(std::mt19937_64& rng, int w, int h) {
    ImageBuffer img(w, h);
    for (auto& s : img.data()) s = static_cast<std::uint8_t>(rng() & 0xFF);
    return img;
}

inline ImageBuffer constant_image(int w, int h, std::uint8_t value) { return ImageBuffer(w, h, value); }

/// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("vhm_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Writes `count` small random PNGs plus a manifest referencing them with the
/// given questions (cycled) and returns the manifest path.
std::filesystem::path write_fixture_corpus(const std::filesystem::path& dir, int count,
                                           const std::vector<std::pair<std::string, std::string>>& qa,
                                           std::uint64_t seed = 7);

}  // namespace vhm::test
