#include "vhm/cache.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "vhm/errors.hpp"
#include "vhm/hashing.hpp"

namespace vhm {

namespace fs = std::filesystem;

void atomic_write(const fs::path& path, std::string_view bytes) {
    static std::atomic<unsigned long> counter{0};
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());

    std::ostringstream suffix;
    suffix << ".tmp." << ::getpid() << '.' << std::this_thread::get_id() << '.' << counter++;
    fs::path tmp = path;
    tmp += suffix.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot rename into " + path.string() + ": " + ec.message());
    }
}

ContentCache::ContentCache(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw IoError("cannot create cache dir " + root_.string() + ": " + ec.message());
}

fs::path ContentCache::path_for(std::string_view stage, std::string_view key) const {
    return root_ / std::string(stage) / std::string(key.substr(0, 2)) / std::string(key);
}

std::optional<std::string> ContentCache::get(std::string_view stage, std::string_view key) const {
    std::ifstream in(path_for(stage, key), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

bool ContentCache::contains(std::string_view stage, std::string_view key) const {
    return fs::exists(path_for(stage, key));
}

void ContentCache::put(std::string_view stage, std::string_view key, std::string_view bytes) const {
    atomic_write(path_for(stage, key), bytes);
}

std::string ContentCache::key(const nlohmann::json& fields) { return sha256_hex(fields.dump()); }

}  // namespace vhm
