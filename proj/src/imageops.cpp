#include "decoyvis/imageops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include "decoyvis/color.hpp"

namespace decoyvis {

namespace {

// Premultiplied linear-light channels of a sub-rectangle.
struct LinearRgba {
    std::array<PlaneF, 4> ch;  // r, g, b premultiplied; alpha in [0, 1]
};

const std::array<double, 256>& linear_lut() {
    static const std::array<double, 256> lut = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) t[static_cast<std::size_t>(i)] = srgb_to_linear(static_cast<std::uint8_t>(i));
        return t;
    }();
    return lut;
}

LinearRgba to_linear(const RasterImage& img, const Rect& r) {
    const auto& lut = linear_lut();
    const auto px = img.bytes();
    LinearRgba out;
    for (auto& p : out.ch) p.resize(r.h, r.w);
    for (int y = 0; y < r.h; ++y) {
        const std::uint8_t* row = px.data() + (static_cast<std::size_t>(r.y + y) * img.width() + r.x) * 4;
        for (int x = 0; x < r.w; ++x) {
            const std::uint8_t* c = row + x * 4;
            const float a = static_cast<float>(c[3]) / 255.0f;
            out.ch[0](y, x) = static_cast<float>(lut[c[0]]) * a;
            out.ch[1](y, x) = static_cast<float>(lut[c[1]]) * a;
            out.ch[2](y, x) = static_cast<float>(lut[c[2]]) * a;
            out.ch[3](y, x) = a;
        }
    }
    return out;
}

Rgba encode_premultiplied(float r, float g, float b, float a) {
    const long alpha = std::lround(std::clamp(a, 0.0f, 1.0f) * 255.0f);
    if (alpha <= 0) return {0, 0, 0, 0};
    const double inv = 1.0 / static_cast<double>(a);
    return {linear_to_srgb(std::clamp(r * inv, 0.0, 1.0)), linear_to_srgb(std::clamp(g * inv, 0.0, 1.0)),
            linear_to_srgb(std::clamp(b * inv, 0.0, 1.0)), static_cast<std::uint8_t>(alpha)};
}

Rect content_bounds(const RasterImage& img) {
    if (!img.has_alpha()) return img.bounds();
    int x0 = img.width(), y0 = img.height(), x1 = -1, y1 = -1;
    const auto px = img.bytes();
    for (int y = 0; y < img.height(); ++y) {
        const std::uint8_t* row = px.data() + static_cast<std::size_t>(y) * img.width() * 4;
        for (int x = 0; x < img.width(); ++x) {
            if (row[x * 4 + 3] != 0) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
        }
    }
    if (x1 < 0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

struct AxisWeights {
    // For each output index: [begin, end) into taps.
    std::vector<std::size_t> offset;
    std::vector<int> src;
    std::vector<double> weight;
};

// Exact overlap weights of output cells of width in_size / out_size.
AxisWeights box_weights(int in_size, int out_size) {
    AxisWeights w;
    w.offset.push_back(0);
    const double scale = static_cast<double>(in_size) / out_size;
    for (int o = 0; o < out_size; ++o) {
        const double lo = o * scale;
        const double hi = (o + 1) * scale;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(in_size - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int i = first; i <= last; ++i) {
            const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
            if (overlap > 0.0) {
                w.src.push_back(i);
                w.weight.push_back(overlap / scale);
            }
        }
        w.offset.push_back(w.src.size());
    }
    return w;
}

}  // namespace

namespace {

void check_kernel(const RasterImage& img, int k) {
    if (k < 1 || k % 2 == 0) fail_validation("gaussian kernel size must be odd and >= 1");
    if (k > std::min(img.width(), img.height())) fail_validation("gaussian kernel size exceeds image dimensions");
}

// Fully transparent pixels stay transparent unless within the aperture of
// content, so only the content box grown by the radius is convolved.
Rect blur_work_rect(const RasterImage& img, int k) {
    const int radius = k / 2;
    const Rect content = content_bounds(img);
    if (content.empty()) return {};
    const int x0 = std::max(0, content.x - radius);
    const int y0 = std::max(0, content.y - radius);
    const int x1 = std::min(img.width(), content.right() + radius);
    const int y1 = std::min(img.height(), content.bottom() + radius);
    return {x0, y0, x1 - x0, y1 - y0};
}

// Convolves the color channels of img over work and, unless supplied, the
// alpha channel; encodes the result over a transparent or copied canvas.
RasterImage blur_over(const RasterImage& img, int k, const Rect& work, const PlaneF* alpha) {
    RasterImage out = img.has_alpha() ? RasterImage::transparent(img.width(), img.height()) : img;
    if (work.empty()) return out;
    const auto taps = gaussian_taps<float>(k);
    LinearRgba lin = to_linear(img, work);
    for (int c = 0; c < 3; ++c) lin.ch[c] = convolve_separable<float>(lin.ch[c], taps);
    lin.ch[3] = alpha ? *alpha : convolve_separable<float>(lin.ch[3], taps);
    const bool skip_clear = img.has_alpha();  // out starts transparent
    // Encoding is pure; runs of equal inputs (blurred interiors) reuse it.
    std::array<float, 4> last_in{};
    Rgba last_out{};
    bool have_last = false;
    for (int y = 0; y < work.h; ++y) {
        for (int x = 0; x < work.w; ++x) {
            const std::array<float, 4> in{lin.ch[0](y, x), lin.ch[1](y, x), lin.ch[2](y, x), lin.ch[3](y, x)};
            if (skip_clear && !(in[3] > 0.0f)) continue;
            if (!have_last || std::memcmp(in.data(), last_in.data(), sizeof in) != 0) {
                last_out = encode_premultiplied(in[0], in[1], in[2], in[3]);
                last_in = in;
                have_last = true;
            }
            out.set(work.x + x, work.y + y, last_out);
        }
    }
    return out;
}

}  // namespace

RasterImage gaussian_blur(const RasterImage& img, int k) {
    check_kernel(img, k);
    if (k == 1) return img;
    return blur_over(img, k, blur_work_rect(img, k), nullptr);
}

BlurredAlpha blur_alpha(const RasterImage& img, int k) {
    check_kernel(img, k);
    BlurredAlpha b;
    b.width = img.width();
    b.height = img.height();
    b.k = k;
    b.has_alpha = img.has_alpha();
    b.alpha_bytes.resize(static_cast<std::size_t>(img.width()) * img.height());
    const auto px = img.bytes();
    for (std::size_t i = 0; i < b.alpha_bytes.size(); ++i) b.alpha_bytes[i] = px[i * 4 + 3];
    if (k == 1) return b;
    b.work = blur_work_rect(img, k);
    if (b.work.empty()) return b;
    const auto taps = gaussian_taps<float>(k);
    b.alpha = convolve_separable<float>(to_linear(img, b.work).ch[3], taps);
    return b;
}

bool BlurredAlpha::matches(const RasterImage& img) const {
    if (width != img.width() || height != img.height() || has_alpha != img.has_alpha()) return false;
    const auto px = img.bytes();
    for (std::size_t i = 0; i < alpha_bytes.size(); ++i)
        if (px[i * 4 + 3] != alpha_bytes[i]) return false;
    return true;
}

RasterImage gaussian_blur(const RasterImage& img, int k, const BlurredAlpha& alpha) {
    check_kernel(img, k);
    if (alpha.k != k || !alpha.matches(img)) fail_validation("blurred alpha does not match the image");
    if (k == 1) return img;
    return blur_over(img, k, alpha.work, &alpha.alpha);
}

Size resampled_size(int width, int height, double gamma) {
    return {std::max(1, static_cast<int>(std::lround(gamma * width))),
            std::max(1, static_cast<int>(std::lround(gamma * height)))};
}

RasterImage resample(const RasterImage& img, double gamma) {
    if (!(gamma > 0.0) || gamma > 1.0) fail_validation("resample factor must lie in (0, 1]");
    if (gamma == 1.0) return img;
    return resample_to(img, resampled_size(img.width(), img.height(), gamma));
}

RasterImage resample_to(const RasterImage& img, Size size) {
    const Size sizes[] = {size};
    return std::move(resample_to_sizes(img, sizes).front());
}

namespace {

// Horizontal pass over one row of vertical sums (interleaved premultiplied
// linear rgba) into output row o.
void encode_row(const double* vert, const AxisWeights& wx, RasterImage& out, int o, bool opaque) {
    for (int x = 0; x < out.width(); ++x) {
        double acc[4] = {0, 0, 0, 0};
        for (std::size_t k = wx.offset[x]; k < wx.offset[x + 1]; ++k) {
            const double* s = vert + static_cast<std::size_t>(wx.src[k]) * 4;
            for (int c = 0; c < 4; ++c) acc[c] += wx.weight[k] * s[c];
        }
        Rgba p = encode_premultiplied(static_cast<float>(acc[0]), static_cast<float>(acc[1]),
                                      static_cast<float>(acc[2]), static_cast<float>(acc[3]));
        if (opaque) p.a = 255;
        out.set(x, o, p);
    }
}

void decode_row(const std::uint8_t* row, std::size_t row_len, double* lin) {
    const auto& lut = linear_lut();
    for (std::size_t i = 0; i < row_len; i += 4) {
        const double a = row[i + 3] / 255.0;
        lin[i + 0] = lut[row[i + 0]] * a;
        lin[i + 1] = lut[row[i + 1]] * a;
        lin[i + 2] = lut[row[i + 2]] * a;
        lin[i + 3] = a;
    }
}

}  // namespace

std::vector<RasterImage> resample_to_sizes(const RasterImage& img, std::span<const Size> sizes) {
    for (const Size& size : sizes)
        if (size.width < 1 || size.height < 1 || size.width > img.width() || size.height > img.height())
            fail_validation("resample target must be non-empty and no larger than the source");

    const std::size_t row_len = static_cast<std::size_t>(img.width()) * 4;
    struct Target {
        AxisWeights wx;
        std::vector<std::vector<std::pair<int, double>>> by_source_row;  // (output row, weight)
        std::vector<int> last_source_row;
        std::array<std::vector<double>, 2> vert;  // rolling rows, interleaved premultiplied linear rgba
        RasterImage out;
    };
    std::vector<Target> targets;
    bool any = false;
    for (const Size& size : sizes) {
        Target t;
        if (size.width == img.width() && size.height == img.height()) {
            t.out = img;
        } else {
            any = true;
            t.wx = box_weights(img.width(), size.width);
            const AxisWeights wy = box_weights(img.height(), size.height);
            t.by_source_row.resize(static_cast<std::size_t>(img.height()));
            t.last_source_row.resize(static_cast<std::size_t>(size.height));
            for (int o = 0; o < size.height; ++o) {
                for (std::size_t k = wy.offset[o]; k < wy.offset[o + 1]; ++k)
                    t.by_source_row[static_cast<std::size_t>(wy.src[k])].emplace_back(o, wy.weight[k]);
                t.last_source_row[static_cast<std::size_t>(o)] = wy.src[wy.offset[o + 1] - 1];
            }
            for (auto& v : t.vert) v.assign(row_len, 0.0);
            t.out = RasterImage(size.width, size.height, Rgba{0, 0, 0, 255}, img.has_alpha());
        }
        targets.push_back(std::move(t));
    }
    std::vector<RasterImage> out;
    if (!any) {
        for (auto& t : targets) out.push_back(std::move(t.out));
        return out;
    }

    auto emit = [&](Target& t, int o) {
        std::vector<double>& v = t.vert[static_cast<std::size_t>(o % 2)];
        encode_row(v.data(), t.wx, t.out, o, !img.has_alpha());
        std::fill(v.begin(), v.end(), 0.0);
    };

    // Vertical pass first: one sweep over the source rows, each decoded once
    // and accumulated into every output row it overlaps, in ascending order.
    // Output rows overlap at most two consecutive source rows' worth of
    // state, so two rolling buffers suffice.
    const auto px = img.bytes();
    std::vector<double> lin(row_len);
    for (int y = 0; y < img.height(); ++y) {
        decode_row(px.data() + static_cast<std::size_t>(y) * row_len, row_len, lin.data());
        for (auto& t : targets) {
            if (t.by_source_row.empty()) continue;
            for (const auto& [o, w] : t.by_source_row[static_cast<std::size_t>(y)]) {
                double* v = t.vert[static_cast<std::size_t>(o % 2)].data();
                for (std::size_t i = 0; i < row_len; ++i) v[i] += w * lin[i];
                if (t.last_source_row[static_cast<std::size_t>(o)] == y) emit(t, o);
            }
        }
    }
    for (auto& t : targets) out.push_back(std::move(t.out));
    return out;
}

IncrementalResampler::IncrementalResampler(const RasterImage& base, std::span<const Size> sizes)
    : width_(base.width()), height_(base.height()), has_alpha_(base.has_alpha()),
      sizes_(sizes.begin(), sizes.end()) {
    for (const Size& size : sizes)
        if (size.width < 1 || size.height < 1 || size.width > width_ || size.height > height_)
            fail_validation("resample target must be non-empty and no larger than the source");
    const std::size_t row_len = static_cast<std::size_t>(width_) * 4;
    for (const Size& size : sizes) {
        Target t;
        if (size.width == width_ && size.height == height_) {
            t.identity = true;
            targets_.push_back(std::move(t));
            continue;
        }
        const AxisWeights wx = box_weights(width_, size.width), wy = box_weights(height_, size.height);
        t.x_offset = wx.offset;
        t.x_src = wx.src;
        t.x_weight = wx.weight;
        t.y_offset = wy.offset;
        t.y_src = wy.src;
        t.y_weight = wy.weight;
        t.out_rows_begin.assign(static_cast<std::size_t>(height_), size.height);
        for (int o = size.height - 1; o >= 0; --o)
            for (std::size_t k = wy.offset[o]; k < wy.offset[o + 1]; ++k)
                t.out_rows_begin[static_cast<std::size_t>(wy.src[k])] = o;
        t.vert.assign(static_cast<std::size_t>(size.height) * row_len, 0.0);
        targets_.push_back(std::move(t));
    }

    // Same per-element arithmetic as resample_to_sizes: each output row sums
    // its source rows in ascending order.
    const auto px = base.bytes();
    std::vector<double> lin(row_len);
    for (int y = 0; y < height_; ++y) {
        decode_row(px.data() + static_cast<std::size_t>(y) * row_len, row_len, lin.data());
        for (auto& t : targets_) {
            if (t.identity) continue;
            for (int o = t.out_rows_begin[static_cast<std::size_t>(y)];
                 o < static_cast<int>(t.y_offset.size()) - 1 && t.y_src[t.y_offset[o]] <= y; ++o) {
                std::size_t k = t.y_offset[o];
                while (t.y_src[k] != y) ++k;
                double* v = t.vert.data() + static_cast<std::size_t>(o) * row_len;
                const double w = t.y_weight[k];
                for (std::size_t i = 0; i < row_len; ++i) v[i] += w * lin[i];
            }
        }
    }
    for (std::size_t n = 0; n < sizes.size(); ++n) {
        const Target& t = targets_[n];
        if (t.identity) {
            base_out_.push_back(base);
            continue;
        }
        RasterImage out(sizes[n].width, sizes[n].height, Rgba{0, 0, 0, 255}, has_alpha_);
        const AxisWeights wx{t.x_offset, t.x_src, t.x_weight};
        for (int o = 0; o < out.height(); ++o)
            encode_row(t.vert.data() + static_cast<std::size_t>(o) * row_len, wx, out, o, !has_alpha_);
        base_out_.push_back(std::move(out));
    }
}

ResamplePlan::ResamplePlan(int width, int height, std::span<const Size> sizes, std::span<const std::size_t> pixels)
    : width_(width), height_(height), sizes_(sizes.begin(), sizes.end()) {
    for (const Size& size : sizes) {
        std::vector<Row> rows;
        if (size.width == width && size.height == height) {
            rows_.push_back(std::move(rows));
            continue;
        }
        const AxisWeights wx = box_weights(width, size.width), wy = box_weights(height, size.height);
        std::vector<std::vector<int>> feeds(static_cast<std::size_t>(height));  // source row -> output rows
        for (int o = 0; o < size.height; ++o)
            for (std::size_t k = wy.offset[o]; k < wy.offset[o + 1]; ++k)
                feeds[static_cast<std::size_t>(wy.src[k])].push_back(o);
        std::vector<std::uint8_t> dirty(static_cast<std::size_t>(size.height) * width, 0);
        for (std::size_t idx : pixels) {
            if (idx >= static_cast<std::size_t>(width) * height) fail_validation("resample plan: pixel out of range");
            const std::size_t x = idx % static_cast<std::size_t>(width), y = idx / static_cast<std::size_t>(width);
            for (int o : feeds[y]) dirty[static_cast<std::size_t>(o) * width + x] = 1;
        }
        for (int o = 0; o < size.height; ++o) {
            const std::uint8_t* d = dirty.data() + static_cast<std::size_t>(o) * width;
            Row row;
            row.out_row = o;
            for (int x = 0; x < width; ++x)
                if (d[x]) row.columns.push_back(x);
            if (row.columns.empty()) continue;
            for (int ox = 0; ox < size.width; ++ox) {
                bool touched = false;
                for (std::size_t k = wx.offset[ox]; k < wx.offset[ox + 1] && !touched; ++k) touched = d[wx.src[k]] != 0;
                if (touched) row.outputs.push_back(ox);
            }
            rows.push_back(std::move(row));
        }
        rows_.push_back(std::move(rows));
    }
}

std::vector<RasterImage> IncrementalResampler::resample(const RasterImage& img, const ResamplePlan& plan) const {
    if (img.width() != width_ || img.height() != height_ || img.has_alpha() != has_alpha_)
        fail_validation("incremental resample: image does not match the base layout");
    if (plan.width_ != width_ || plan.height_ != height_ || plan.sizes_.size() != sizes_.size() ||
        !std::equal(plan.sizes_.begin(), plan.sizes_.end(), sizes_.begin()))
        fail_validation("incremental resample: plan does not match the resampler");
    std::vector<RasterImage> out = base_out_;
    const std::size_t row_len = static_cast<std::size_t>(width_) * 4;
    const auto px = img.bytes();
    std::vector<double> fresh(row_len);  // recomputed sums, valid at dirty columns only
    std::vector<std::uint8_t> col_dirty(static_cast<std::size_t>(width_), 0);
    const auto& lut = linear_lut();
    for (std::size_t n = 0; n < targets_.size(); ++n) {
        const Target& t = targets_[n];
        RasterImage& dst = out[n];
        std::array<float, 4> last_in{};
        Rgba last_out{};
        bool have_last = false;
        if (t.identity) {
            dst = img;
            continue;
        }
        for (const auto& r : plan.rows_[n]) {
            const int o = r.out_row;
            const double* base_row = t.vert.data() + static_cast<std::size_t>(o) * row_len;
            for (int x : r.columns) {
                std::fill_n(fresh.begin() + static_cast<std::ptrdiff_t>(x) * 4, 4, 0.0);
                col_dirty[static_cast<std::size_t>(x)] = 1;
            }
            // Ascending source rows per element, as in the full pass.
            for (std::size_t k = t.y_offset[o]; k < t.y_offset[o + 1]; ++k) {
                const std::uint8_t* src_row = px.data() + static_cast<std::size_t>(t.y_src[k]) * row_len;
                const double w = t.y_weight[k];
                for (int x : r.columns) {
                    // Same arithmetic as decode_row.
                    const std::uint8_t* c = src_row + static_cast<std::size_t>(x) * 4;
                    const double a = c[3] / 255.0;
                    double* v = fresh.data() + static_cast<std::size_t>(x) * 4;
                    v[0] += w * (lut[c[0]] * a);
                    v[1] += w * (lut[c[1]] * a);
                    v[2] += w * (lut[c[2]] * a);
                    v[3] += w * a;
                }
            }
            for (int ox : r.outputs) {
                double acc[4] = {0, 0, 0, 0};
                for (std::size_t k = t.x_offset[ox]; k < t.x_offset[ox + 1]; ++k) {
                    const int sx = t.x_src[k];
                    const double* sp = (col_dirty[static_cast<std::size_t>(sx)] ? fresh.data() : base_row) +
                                       static_cast<std::size_t>(sx) * 4;
                    for (int c = 0; c < 4; ++c) acc[c] += t.x_weight[k] * sp[c];
                }
                const std::array<float, 4> in{static_cast<float>(acc[0]), static_cast<float>(acc[1]),
                                              static_cast<float>(acc[2]), static_cast<float>(acc[3])};
                if (!have_last || std::memcmp(in.data(), last_in.data(), sizeof in) != 0) {
                    last_out = encode_premultiplied(in[0], in[1], in[2], in[3]);
                    if (!has_alpha_) last_out.a = 255;
                    last_in = in;
                    have_last = true;
                }
                dst.set(ox, o, last_out);
            }
            for (int x : r.columns) col_dirty[static_cast<std::size_t>(x)] = 0;
        }
    }
    return out;
}

RasterImage apply_mask(const RasterImage& img, const Rect& region, const MaskPattern& pattern) {
    std::vector<std::uint8_t> all(static_cast<std::size_t>(std::max(0, region.w) * std::max(0, region.h)), 1);
    RasterImage out = img;
    apply_mask_inplace(out, region, all, pattern);
    return out;
}

void apply_mask_inplace(RasterImage& img, const Rect& region, std::span<const std::uint8_t> footprint,
                        const MaskPattern& pattern) {
    if (pattern.cell_size < 1) fail_validation("mask cell size must be >= 1");
    if (region.empty() || !img.bounds().contains(region)) fail_validation("mask region out of bounds");
    if (footprint.size() != static_cast<std::size_t>(region.w) * region.h) {
        fail_validation("mask footprint does not match region size");
    }
    bool cleared_any = false;
    for (int dy = 0; dy < region.h; ++dy) {
        for (int dx = 0; dx < region.w; ++dx) {
            if (footprint[static_cast<std::size_t>(dy) * region.w + dx] == 0) continue;
            if (!pattern.keeps(dx, dy)) {
                img.set(region.x + dx, region.y + dy, Rgba{0, 0, 0, 0});
                cleared_any = true;
            }
        }
    }
    if (cleared_any) img.set_has_alpha(true);
}

RasterImage composite(Rgb background, const RasterImage& decoy_layer, const RasterImage& original_layer) {
    if (decoy_layer.width() != original_layer.width() || decoy_layer.height() != original_layer.height()) {
        fail_validation("composite layers differ in size");
    }
    RasterImage out = RasterImage::solid(decoy_layer.width(), decoy_layer.height(), background);
    const double bg[3] = {srgb_to_linear(background.r), srgb_to_linear(background.g), srgb_to_linear(background.b)};
    const auto d = decoy_layer.bytes();
    const auto o = original_layer.bytes();
    auto dst = out.bytes();
    bool have_last = false;
    std::uint32_t last_d = 0, last_o = 0;
    std::uint8_t last_out[3] = {};
    for (std::size_t i = 0; i < dst.size(); i += 4) {
        const std::uint8_t oa = o[i + 3];
        const std::uint8_t da = d[i + 3];
        // Opaque or empty layers reduce to copies; encode(decode(v)) == v keeps
        // these shortcuts identical to the general blend.
        if (oa == 255) {
            dst[i] = o[i];
            dst[i + 1] = o[i + 1];
            dst[i + 2] = o[i + 2];
            continue;
        }
        if (oa == 0 && da == 0) continue;
        if (oa == 0 && da == 255) {
            dst[i] = d[i];
            dst[i + 1] = d[i + 1];
            dst[i + 2] = d[i + 2];
            continue;
        }
        // The blend is a pure function of the two input pixels; blurred
        // interiors repeat inputs, so the previous result is reused.
        std::uint32_t key_d, key_o;
        std::memcpy(&key_d, &d[i], 4);
        std::memcpy(&key_o, &o[i], 4);
        if (have_last && key_d == last_d && key_o == last_o) {
            std::copy_n(last_out, 3, &dst[i]);
            continue;
        }
        const double a_d = da / 255.0;
        const double a_o = oa / 255.0;
        for (int c = 0; c < 3; ++c) {
            double v = a_d * srgb_to_linear(d[i + c]) + (1.0 - a_d) * bg[c];
            v = a_o * srgb_to_linear(o[i + c]) + (1.0 - a_o) * v;
            dst[i + c] = linear_to_srgb(v);
        }
        have_last = true;
        last_d = key_d;
        last_o = key_o;
        std::copy_n(&dst[i], 3, last_out);
    }
    return out;
}

RasterImage flatten(Rgb background, const RasterImage& layer) {
    return composite(background, layer, RasterImage::transparent(layer.width(), layer.height()));
}

}  // namespace decoyvis
