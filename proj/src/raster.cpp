#include "decoyvis/raster.hpp"

#include <png.h>

#include <cstring>
#include <fstream>

#include "decoyvis/error.hpp"

namespace decoyvis {

RasterImage::RasterImage(int width, int height, Rgba fill, bool has_alpha)
    : width_(width), height_(height), has_alpha_(has_alpha) {
    if (width < 1 || height < 1) fail_validation("raster dimensions must be positive");
    data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 4);
    for (std::size_t i = 0; i < data_.size(); i += 4) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
        data_[i + 3] = fill.a;
    }
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    if (img.empty()) fail_validation("cannot encode an empty image");
    const bool alpha = img.has_alpha();
    const int channels = alpha ? 4 : 3;
    std::vector<std::uint8_t> packed(static_cast<std::size_t>(img.width()) * img.height() * channels);
    const auto src = img.bytes();
    for (std::size_t i = 0, n = static_cast<std::size_t>(img.width()) * img.height(); i < n; ++i) {
        std::memcpy(&packed[i * channels], &src[i * 4], channels);
    }

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, packed.data(), 0, nullptr)) {
        fail_io(std::string("png encode: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, packed.data(), 0, nullptr)) {
        fail_io(std::string("png encode: ") + image.message);
    }
    out.resize(size);
    return out;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        fail_io(std::string("png decode: ") + image.message);
    }
    const bool has_alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    image.format = PNG_FORMAT_RGBA;
    RasterImage img(static_cast<int>(image.width), static_cast<int>(image.height), Rgba{0, 0, 0, 255}, has_alpha);
    if (!png_image_finish_read(&image, nullptr, img.bytes().data(), 0, nullptr)) {
        png_image_free(&image);
        fail_io(std::string("png decode: ") + image.message);
    }
    return img;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail_io("short write to " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_png(const std::filesystem::path& path, const RasterImage& img) { write_file(path, encode_png(img)); }

RasterImage read_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }

}  // namespace decoyvis
