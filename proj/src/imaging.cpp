#include "vhm/imaging.hpp"

#include <algorithm>
#include <array>
#include <vector>

namespace vhm {

namespace {

void validate_kernel(int kernel_size) {
    if (kernel_size < 3 || kernel_size % 2 == 0)
        throw InvalidArgument("kernel size must be odd and >= 3");
}

inline int clamp_index(int i, int n) noexcept { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

ImageBuffer median_naive(const ImageBuffer& src, int kernel_size) {
    const int r = kernel_size / 2;
    const int w = src.width();
    const int h = src.height();
    const std::size_t half = static_cast<std::size_t>(kernel_size) * kernel_size / 2;
    ImageBuffer out(w, h);
    std::vector<std::uint8_t> window(static_cast<std::size_t>(kernel_size) * kernel_size);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                std::size_t n = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) window[n++] = src.clamped(x + dx, y + dy, c);
                std::nth_element(window.begin(), window.begin() + half, window.end());
                out.at(x, y, c) = window[half];
            }
        }
    }
    return out;
}

/// Sliding 256-bin histogram with the median rank tracked incrementally:
/// `below` is the number of window samples strictly less than `median`.
struct RankTracker {
    std::array<int, 256> hist{};
    int median = 0;
    int below = 0;

    void reset() {
        hist.fill(0);
        median = 0;
        below = 0;
    }
    void add(std::uint8_t v) noexcept {
        ++hist[v];
        if (v < median) ++below;
    }
    void remove(std::uint8_t v) noexcept {
        --hist[v];
        if (v < median) --below;
    }
    /// Restores below <= half < below + hist[median].
    int settle(int half) noexcept {
        while (below > half) {
            --median;
            below -= hist[median];
        }
        while (below + hist[median] <= half) {
            below += hist[median];
            ++median;
        }
        return median;
    }
};

ImageBuffer median_fast(const ImageBuffer& src, int kernel_size) {
    const int r = kernel_size / 2;
    const int w = src.width();
    const int h = src.height();
    const int half = kernel_size * kernel_size / 2;
    const std::size_t stride = static_cast<std::size_t>(w) * 3;
    ImageBuffer out(w, h);
    const std::uint8_t* base = src.data().data();
    std::uint8_t* dst = out.data().data();

    std::array<RankTracker, 3> trackers;
    std::vector<const std::uint8_t*> rows(kernel_size);

    for (int y = 0; y < h; ++y) {
        for (int dy = -r; dy <= r; ++dy) rows[dy + r] = base + clamp_index(y + dy, h) * stride;

        for (auto& t : trackers) t.reset();
        for (const auto* row : rows) {
            for (int dx = -r; dx <= r; ++dx) {
                const std::uint8_t* px = row + clamp_index(dx, w) * 3;
                trackers[0].add(px[0]);
                trackers[1].add(px[1]);
                trackers[2].add(px[2]);
            }
        }
        std::uint8_t* out_row = dst + y * stride;
        for (int c = 0; c < 3; ++c) out_row[c] = static_cast<std::uint8_t>(trackers[c].settle(half));

        for (int x = 1; x < w; ++x) {
            const int leaving = clamp_index(x - 1 - r, w) * 3;
            const int entering = clamp_index(x + r, w) * 3;
            for (const auto* row : rows) {
                for (int c = 0; c < 3; ++c) {
                    trackers[c].remove(row[leaving + c]);
                    trackers[c].add(row[entering + c]);
                }
            }
            for (int c = 0; c < 3; ++c)
                out_row[x * 3 + c] = static_cast<std::uint8_t>(trackers[c].settle(half));
        }
    }
    return out;
}

}  // namespace

void FilterSpec::validate() const {
    if (variant == Variant::Org) return;
    validate_kernel(kernel_size);
    if (!blend.finite()) throw InvalidArgument("blend weights must be finite");
}

ImageBuffer median_filter(const ImageBuffer& src, int kernel_size, BorderPolicy, MedianPath path) {
    if (src.empty()) throw InvalidArgument("median_filter: empty image");
    validate_kernel(kernel_size);
    return path == MedianPath::Fast ? median_fast(src, kernel_size) : median_naive(src, kernel_size);
}

SignedRaster laplacian(const ImageBuffer& src) {
    if (src.empty()) throw InvalidArgument("laplacian: empty image");
    const int w = src.width();
    const int h = src.height();
    SignedRaster out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const int centre = src.at(x, y, c);
                const int sum = src.clamped(x + 1, y, c) + src.clamped(x - 1, y, c) +
                                src.clamped(x, y + 1, c) + src.clamped(x, y - 1, c);
                out.at(x, y, c) = static_cast<std::int16_t>(sum - 4 * centre);
            }
        }
    }
    return out;
}

ImageBuffer apply_variant(const ImageBuffer& src, const FilterSpec& spec) {
    spec.validate();
    switch (spec.variant) {
        case Variant::Org:
            return src;
        case Variant::Nr: {
            ImageBuffer median = median_filter(src, spec.kernel_size, spec.border);
            if (spec.nr_mode == NrMode::PureMedian) return median;
            return blend(src, median, spec.blend);
        }
        case Variant::Ee:
            return blend(src, laplacian(src), spec.blend);
    }
    throw InvalidArgument("apply_variant: unknown variant");
}

}  // namespace vhm
