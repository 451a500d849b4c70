#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vhm/errors.hpp"

namespace vhm {

/// Interleaved 3-channel raster, row-major. Sample type decides the domain:
/// `std::uint8_t` for images, a signed type for derivative fields.
template <typename Sample>
class Raster {
public:
    using sample_type = Sample;
    static constexpr int kChannels = 3;

    Raster() = default;

    Raster(int width, int height, Sample fill = Sample{})
        : width_(width), height_(height) {
        validate_dims(width, height);
        data_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
    }

    Raster(int width, int height, std::vector<Sample> data)
        : width_(width), height_(height), data_(std::move(data)) {
        validate_dims(width, height);
        if (data_.size() != static_cast<std::size_t>(width) * height * kChannels)
            throw InvalidArgument("raster data length does not equal width*height*3");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const Sample> data() const noexcept { return data_; }
    std::span<Sample> data() noexcept { return data_; }

    Sample& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }
    Sample at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }

    /// Replicate-border access: coordinates are clamped to the nearest edge pixel.
    Sample clamped(int x, int y, int c) const noexcept {
        x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
        y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
        return data_[index(x, y, c)];
    }

    bool same_shape(const auto& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
    }

    static void validate_dims(int width, int height) {
        if (width < 1 || height < 1)
            throw InvalidArgument("raster dimensions must be at least 1x1");
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<Sample> data_;
};

using ImageBuffer = Raster<std::uint8_t>;
/// Laplacian output; values lie in [-1020, 1020].
using SignedRaster = Raster<std::int16_t>;

}  // namespace vhm
