#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace decoyvis {

/// 8-bit sRGB triple.
struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};

/// Non-premultiplied 8-bit sRGB with straight alpha.
struct Rgba {
    std::uint8_t r = 0, g = 0, b = 0, a = 0;

    Rgb rgb() const { return {r, g, b}; }
    friend bool operator==(const Rgba&, const Rgba&) = default;
};

/// Half-open pixel rectangle [x, x + w) x [y, y + h).
struct Rect {
    int x = 0, y = 0, w = 0, h = 0;

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    bool empty() const { return w <= 0 || h <= 0; }
    bool contains(int px, int py) const { return px >= x && px < right() && py >= y && py < bottom(); }
    bool contains(const Rect& o) const {
        return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Row-major 8-bit sRGB pixel grid, always stored as RGBA. Images without
/// an alpha channel carry alpha 255 everywhere and report has_alpha() false.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, Rgba fill = {0, 0, 0, 255}, bool has_alpha = false);

    static RasterImage solid(int width, int height, Rgb color) {
        return RasterImage(width, height, Rgba{color.r, color.g, color.b, 255}, false);
    }
    static RasterImage transparent(int width, int height) {
        return RasterImage(width, height, Rgba{0, 0, 0, 0}, true);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool has_alpha() const { return has_alpha_; }
    void set_has_alpha(bool v) { has_alpha_ = v; }
    bool empty() const { return width_ == 0 || height_ == 0; }
    Rect bounds() const { return {0, 0, width_, height_}; }

    Rgba at(int x, int y) const {
        const auto* p = &data_[index(x, y)];
        return {p[0], p[1], p[2], p[3]};
    }
    void set(int x, int y, Rgba c) {
        auto* p = &data_[index(x, y)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
        p[3] = c.a;
    }

    std::span<std::uint8_t> bytes() { return data_; }
    std::span<const std::uint8_t> bytes() const { return data_; }

    friend bool operator==(const RasterImage& a, const RasterImage& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.has_alpha_ == b.has_alpha_ &&
               a.data_ == b.data_;
    }

private:
    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 4;
    }

    int width_ = 0;
    int height_ = 0;
    bool has_alpha_ = false;
    std::vector<std::uint8_t> data_;
};

/// PNG encoding is deterministic: fixed compression level, no timestamps or
/// text chunks. RGB images are written as 8-bit RGB, others as RGBA.
std::vector<std::uint8_t> encode_png(const RasterImage& img);
RasterImage decode_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const RasterImage& img);
RasterImage read_png(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace decoyvis
