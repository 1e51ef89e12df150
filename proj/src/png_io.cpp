#include "gescd/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace gescd {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail_io(const std::string& what, const std::string& path) {
    throw Error(ErrorCode::Io, what + ": " + path);
}

// Decodes a PNG into 8-bit RGB rows.
Image decode_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail_io("cannot open file", path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        fail_io("not a PNG file", path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail_io("png init failed", path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail_io("png init failed", path);
    }

    // Declared before setjmp so the throw after a longjmp unwinds them.
    Image image;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail_io("corrupt PNG", path);
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_packing(png);
    const int color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    if (width <= 0 || height <= 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail_io("degenerate PNG dimensions", path);
    }

    image = Image(width, height);
    rows.resize(height);
    for (int y = 0; y < height; ++y) rows[y] = image.pixels.data() + static_cast<std::size_t>(y) * width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void encode_png(const std::string& path, int width, int height, int channels,
                const std::uint8_t* data) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail_io("cannot open file for writing", path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail_io("png init failed", path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail_io("png init failed", path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail_io("png write failed", path);
    }

    png_init_io(png, fp.get());
    const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, width, height, 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(data + static_cast<std::size_t>(y) * width * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

Image read_image(const std::string& path) { return decode_png(path); }

void write_image(const Image& image, const std::string& path) {
    encode_png(path, image.width, image.height, 3, image.pixels.data());
}

BinaryMask read_mask(const std::string& path) {
    const Image rgb = decode_png(path);
    BinaryMask mask(rgb.width, rgb.height);
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x) {
            const std::uint8_t* p = rgb.at(x, y);
            mask.at(x, y) = luminance(p[0], p[1], p[2]) > 127.0 ? 1 : 0;
        }
    return mask;
}

void write_mask(const BinaryMask& mask, const std::string& path) {
    std::vector<std::uint8_t> gray(mask.data.size());
    for (std::size_t i = 0; i < mask.data.size(); ++i) gray[i] = mask.data[i] ? 255 : 0;
    encode_png(path, mask.width, mask.height, 1, gray.data());
}

}  // namespace gescd
