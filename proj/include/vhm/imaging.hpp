#pragma once

#include <cmath>

#include "vhm/raster.hpp"
#include "vhm/variant.hpp"

namespace vhm {

/// Weights of the pixel-wise combination alpha*src1 + beta*src2 + gamma.
struct BlendWeights {
    double alpha = 1.5;
    double beta = -0.5;
    double gamma = 0.0;

    bool finite() const noexcept {
        return std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma);
    }
    friend bool operator==(const BlendWeights&, const BlendWeights&) = default;
};

enum class NrMode { PureMedian, Blended };

/// Only clamp-to-edge is supported.
enum class BorderPolicy { Replicate };

enum class MedianPath { Fast, Naive };

struct FilterSpec {
    Variant variant = Variant::Org;
    int kernel_size = 15;
    NrMode nr_mode = NrMode::PureMedian;
    BlendWeights blend{};
    BorderPolicy border = BorderPolicy::Replicate;

    /// Throws InvalidArgument when the kernel is even or < 3, or weights are non-finite.
    void validate() const;
};

/// Per-channel median over a kernel_size x kernel_size window with replicate border.
///
/// The fast path keeps one 256-bin histogram per channel and slides it along
/// each row, tracking the median rank incrementally; the naive path gathers
/// and partially sorts every window. Both produce identical output.
ImageBuffer median_filter(const ImageBuffer& src, int kernel_size,
                          BorderPolicy border = BorderPolicy::Replicate,
                          MedianPath path = MedianPath::Fast);

/// 5-point Laplacian stencil, channel-wise, replicate border, unclamped.
SignedRaster laplacian(const ImageBuffer& src);

/// clamp(round(alpha*a + beta*b + gamma), 0, 255), rounding half away from zero.
template <typename A, typename B>
ImageBuffer blend(const Raster<A>& src1, const Raster<B>& src2, const BlendWeights& w) {
    if (!src1.same_shape(src2))
        throw InvalidArgument("blend: source dimensions differ");
    if (!w.finite())
        throw InvalidArgument("blend: weights must be finite");
    ImageBuffer out(src1.width(), src1.height());
    auto a = src1.data();
    auto b = src2.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        double v = w.alpha * static_cast<double>(a[i]) + w.beta * static_cast<double>(b[i]) + w.gamma;
        // Clamping before rounding is equivalent (both are monotone) and keeps lround in range.
        v = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
        o[i] = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

ImageBuffer apply_variant(const ImageBuffer& src, const FilterSpec& spec);

}  // namespace vhm
