#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "decoyvis/error.hpp"
#include "decoyvis/raster.hpp"

namespace decoyvis {

/// Dense single-channel image plane, rows = image height.
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Plane = PlaneT<double>;
using PlaneF = PlaneT<float>;

// ---------------------------------------------------------------------------
// Gaussian low-pass

/// sigma = 0.3 * ((k - 1) / 2 - 1) + 0.8, the usual aperture-to-sigma rule.
inline double gaussian_sigma_for_kernel(int k) { return 0.3 * ((k - 1) * 0.5 - 1.0) + 0.8; }

/// Normalized 1-D taps for an odd aperture k.
template <typename Scalar = double>
std::vector<Scalar> gaussian_taps(int k) {
    if (k < 1 || k % 2 == 0) fail_validation("gaussian kernel size must be odd and >= 1");
    if (k == 1) return {Scalar(1)};
    const double sigma = gaussian_sigma_for_kernel(k);
    const int radius = k / 2;
    std::vector<double> w(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        w[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += w[static_cast<std::size_t>(i + radius)];
    }
    std::vector<Scalar> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<Scalar>(w[i] / sum);
    return out;
}

/// Separable convolution with clamp-to-edge borders.
template <typename Scalar>
PlaneT<Scalar> convolve_separable(const PlaneT<Scalar>& src, std::span<const Scalar> taps) {
    const Eigen::Index rows = src.rows(), cols = src.cols();
    const int radius = static_cast<int>(taps.size() / 2);
    // All-zero rows contribute nothing (adding +0 leaves sums unchanged) and
    // are skipped in both passes.
    std::vector<char> live(static_cast<std::size_t>(rows));
    for (Eigen::Index y = 0; y < rows; ++y) live[static_cast<std::size_t>(y)] = (src.row(y) != Scalar(0)).any();
    PlaneT<Scalar> tmp = PlaneT<Scalar>::Zero(rows, cols);
    std::vector<Scalar> padded(static_cast<std::size_t>(cols + 2 * radius));
    for (Eigen::Index y = 0; y < rows; ++y) {
        if (!live[static_cast<std::size_t>(y)]) continue;
        for (Eigen::Index x = 0; x < cols + 2 * radius; ++x)
            padded[static_cast<std::size_t>(x)] = src(y, std::clamp<Eigen::Index>(x - radius, 0, cols - 1));
        Scalar* dst = &tmp(y, 0);
        for (std::size_t i = 0; i < taps.size(); ++i) {
            const Scalar t = taps[i];
            const Scalar* p = padded.data() + i;
            for (Eigen::Index x = 0; x < cols; ++x) dst[x] += t * p[x];
        }
    }
    PlaneT<Scalar> out = PlaneT<Scalar>::Zero(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y) {
        for (int i = -radius; i <= radius; ++i) {
            const Eigen::Index sy = std::clamp<Eigen::Index>(y + i, 0, rows - 1);
            if (!live[static_cast<std::size_t>(sy)]) continue;
            out.row(y) += taps[static_cast<std::size_t>(i + radius)] * tmp.row(sy);
        }
    }
    return out;
}

template <typename Scalar>
PlaneT<Scalar> gaussian_blur_plane(const PlaneT<Scalar>& src, int k) {
    const auto taps = gaussian_taps<Scalar>(k);
    if (k == 1) return src;
    return convolve_separable<Scalar>(src, taps);
}

/// Blurs in linear light on premultiplied alpha; k = 1 returns the input
/// unchanged. Requires odd k with 1 <= k <= min(width, height).
RasterImage gaussian_blur(const RasterImage& img, int k);

/// The convolved alpha channel of a layer. It depends only on the alpha
/// bytes, so layers differing only in color can share one.
struct BlurredAlpha {
    int width = 0, height = 0, k = 1;
    bool has_alpha = false;
    std::vector<std::uint8_t> alpha_bytes;
    Rect work;
    PlaneT<float> alpha;

    /// Same dimensions, alpha mode and alpha bytes as img.
    bool matches(const RasterImage& img) const;
};
BlurredAlpha blur_alpha(const RasterImage& img, int k);

/// Same bytes as gaussian_blur(img, k); alpha must come from a layer with
/// img's dimensions and alpha bytes.
RasterImage gaussian_blur(const RasterImage& img, int k, const BlurredAlpha& alpha);

// ---------------------------------------------------------------------------
// Area resampling

/// Output size used by resample: round(gamma * dims), at least 1x1.
struct Size {
    int width = 0, height = 0;
    friend bool operator==(const Size&, const Size&) = default;
};
Size resampled_size(int width, int height, double gamma);

/// Box-filter (area-average) downsampling in linear light; gamma = 1 is the
/// identity. Throws for gamma outside (0, 1].
RasterImage resample(const RasterImage& img, double gamma);

/// Resizes to an explicit smaller-or-equal size with the same box filter.
RasterImage resample_to(const RasterImage& img, Size size);

/// resample_to for several sizes in one pass over the source; each result
/// equals the corresponding single call.
std::vector<RasterImage> resample_to_sizes(const RasterImage& img, std::span<const Size> sizes);

/// Output rows, source columns and output pixels of each target size that
/// depend on a given set of source pixels.
class ResamplePlan {
public:
    ResamplePlan(int width, int height, std::span<const Size> sizes, std::span<const std::size_t> pixels);

private:
    friend class IncrementalResampler;
    struct Row {
        int out_row = 0;
        std::vector<int> columns;  // dirty source columns
        std::vector<int> outputs;  // output pixels whose box meets a dirty column
    };
    int width_ = 0, height_ = 0;
    std::vector<Size> sizes_;
    std::vector<std::vector<Row>> rows_;  // per target
};

/// Resamples images that differ from a fixed base on a sparse pixel set.
/// Output pixels whose source box avoids every changed pixel are copied from
/// the base result; the rest are recomputed with the same arithmetic, so
/// results equal resample_to_sizes bit for bit.
class IncrementalResampler {
public:
    IncrementalResampler(const RasterImage& base, std::span<const Size> sizes);

    const std::vector<RasterImage>& base_outputs() const { return base_out_; }

    /// img may differ from the base only at the plan's pixels (a superset of
    /// the changed pixels is fine).
    std::vector<RasterImage> resample(const RasterImage& img, const ResamplePlan& plan) const;

    /// changed: row-major pixel indices where img differs from the base.
    std::vector<RasterImage> resample(const RasterImage& img, std::span<const std::size_t> changed) const {
        return resample(img, ResamplePlan(width_, height_, sizes_, changed));
    }

private:
    struct Target {
        std::vector<std::size_t> x_offset, y_offset;  // taps per output column / row
        std::vector<int> x_src, y_src;
        std::vector<double> x_weight, y_weight;
        std::vector<int> out_rows_begin;              // per source row: first output row it feeds
        std::vector<double> vert;                     // base vertical sums, one row per output row
        bool identity = false;
    };
    int width_ = 0, height_ = 0;
    bool has_alpha_ = false;
    std::vector<Size> sizes_;
    std::vector<Target> targets_;
    std::vector<RasterImage> base_out_;
};

// ---------------------------------------------------------------------------
// Masking

enum class MaskPhase { keep_first, clear_first };
enum class MaskOrientation { checkerboard, horizontal_stripes };

struct MaskPattern {
    int cell_size = 1;
    MaskPhase phase = MaskPhase::keep_first;
    MaskOrientation orientation = MaskOrientation::checkerboard;

    /// Whether offset (dx, dy) from the pattern anchor falls in a kept cell.
    bool keeps(int dx, int dy) const {
        const int cx = dx / cell_size;
        const int cy = dy / cell_size;
        const bool first = orientation == MaskOrientation::checkerboard ? ((cx + cy) % 2 == 0) : (cy % 2 == 0);
        return phase == MaskPhase::keep_first ? first : !first;
    }
};

/// Clears the pattern's "clear" cells inside region to transparent. The
/// pattern is anchored at the region's top-left corner.
RasterImage apply_mask(const RasterImage& img, const Rect& region, const MaskPattern& pattern);

/// As above, restricted to region pixels whose footprint byte is non-zero.
/// footprint is row-major with region.w * region.h entries.
void apply_mask_inplace(RasterImage& img, const Rect& region, std::span<const std::uint8_t> footprint,
                        const MaskPattern& pattern);

// ---------------------------------------------------------------------------
// Compositing

/// Source-over in linear light: background fill, then decoy, then original.
/// The result is opaque.
RasterImage composite(Rgb background, const RasterImage& decoy_layer, const RasterImage& original_layer);

/// A single layer flattened onto a solid background.
RasterImage flatten(Rgb background, const RasterImage& layer);

}  // namespace decoyvis
