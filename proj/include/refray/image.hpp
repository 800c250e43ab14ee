#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "refray/vec.hpp"

namespace refray {

// RGB image with channels in [0, 1], row-major, top-left origin.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // 3 * width * height, interleaved rgb

    Image() = default;
    Image(int w, int h, const Vec3& fill = {0, 0, 0}) : width(w), height(h), data(static_cast<size_t>(w) * h * 3) {
        for (int i = 0; i < w * h; ++i) set_index(i, fill);
    }

    bool empty() const { return width == 0 || height == 0; }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    Vec3 at(int x, int y) const {
        const size_t i = (static_cast<size_t>(y) * width + x) * 3;
        return {data[i], data[i + 1], data[i + 2]};
    }
    void set(int x, int y, const Vec3& c) { set_index(static_cast<size_t>(y) * width + x, c); }
    void set_index(size_t pixel, const Vec3& c) {
        data[pixel * 3] = c.x;
        data[pixel * 3 + 1] = c.y;
        data[pixel * 3 + 2] = c.z;
    }
};

// Binary object mask; 1 = object.
struct MaskImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;

    MaskImage() = default;
    MaskImage(int w, int h, uint8_t fill = 0) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    void set(int x, int y, uint8_t v) { data[static_cast<size_t>(y) * width + x] = v; }
};

namespace detail {

inline uint8_t to_byte(double v) {
    const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<uint8_t>(c * 255.0 + 0.5);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw std::runtime_error("cannot open file: " + path);
    return f;
}

// Reads an 8-bit PNG of any color type, expanded to RGB or gray rows.
inline std::vector<std::vector<png_byte>> read_png_rows(const std::string& path, int& w, int& h, bool gray) {
    FilePtr fp = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (gray) {
        if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA ||
            color_type == PNG_COLOR_TYPE_PALETTE)
            png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    } else {
        if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);

    std::vector<std::vector<png_byte>> rows(static_cast<size_t>(h));
    const size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_bytep> row_ptrs(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y) {
        rows[static_cast<size_t>(y)].resize(rowbytes);
        row_ptrs[static_cast<size_t>(y)] = rows[static_cast<size_t>(y)].data();
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return rows;
}

inline void write_png_rows(const std::string& path, int w, int h, int color_type,
                           const std::vector<std::vector<png_byte>>& rows) {
    FilePtr fp = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (const auto& row : rows) png_write_row(png, const_cast<png_bytep>(row.data()));
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

}  // namespace detail

inline Image load_png(const std::string& path) {
    int w = 0, h = 0;
    const auto rows = detail::read_png_rows(path, w, h, /*gray=*/false);
    Image img(w, h);
    for (int y = 0; y < h; ++y) {
        const auto& row = rows[static_cast<size_t>(y)];
        for (int x = 0; x < w; ++x) {
            img.set(x, y,
                    {row[static_cast<size_t>(x) * 3] / 255.0, row[static_cast<size_t>(x) * 3 + 1] / 255.0,
                     row[static_cast<size_t>(x) * 3 + 2] / 255.0});
        }
    }
    return img;
}

inline void save_png(const std::string& path, const Image& img) {
    std::vector<std::vector<png_byte>> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        auto& row = rows[static_cast<size_t>(y)];
        row.resize(static_cast<size_t>(img.width) * 3);
        for (int x = 0; x < img.width; ++x) {
            const Vec3 c = img.at(x, y);
            row[static_cast<size_t>(x) * 3] = detail::to_byte(c.x);
            row[static_cast<size_t>(x) * 3 + 1] = detail::to_byte(c.y);
            row[static_cast<size_t>(x) * 3 + 2] = detail::to_byte(c.z);
        }
    }
    detail::write_png_rows(path, img.width, img.height, PNG_COLOR_TYPE_RGB, rows);
}

// Masks are stored as 8-bit grayscale; anything >= 128 counts as object,
// which tolerates anti-aliased exports.
inline MaskImage load_mask_png(const std::string& path) {
    int w = 0, h = 0;
    const auto rows = detail::read_png_rows(path, w, h, /*gray=*/true);
    MaskImage mask(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) mask.set(x, y, rows[static_cast<size_t>(y)][static_cast<size_t>(x)] >= 128 ? 1 : 0);
    return mask;
}

inline void save_mask_png(const std::string& path, const MaskImage& mask) {
    std::vector<std::vector<png_byte>> rows(static_cast<size_t>(mask.height));
    for (int y = 0; y < mask.height; ++y) {
        auto& row = rows[static_cast<size_t>(y)];
        row.resize(static_cast<size_t>(mask.width));
        for (int x = 0; x < mask.width; ++x) row[static_cast<size_t>(x)] = mask.at(x, y) ? 255 : 0;
    }
    detail::write_png_rows(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, rows);
}

inline void save_ppm(const std::string& path, const Image& img) {
    detail::FilePtr fp = detail::open_file(path, "wb");
    std::fprintf(fp.get(), "P6\n%d %d\n255\n", img.width, img.height);
    std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Vec3 c = img.at(x, y);
            row[static_cast<size_t>(x) * 3] = detail::to_byte(c.x);
            row[static_cast<size_t>(x) * 3 + 1] = detail::to_byte(c.y);
            row[static_cast<size_t>(x) * 3 + 2] = detail::to_byte(c.z);
        }
        if (std::fwrite(row.data(), 1, row.size(), fp.get()) != row.size())
            throw std::runtime_error("short write: " + path);
    }
}

inline Image load_ppm(const std::string& path) {
    detail::FilePtr fp = detail::open_file(path, "rb");
    char magic[3] = {0, 0, 0};
    if (std::fscanf(fp.get(), "%2s", magic) != 1 || std::strcmp(magic, "P6") != 0)
        throw std::runtime_error("not a P6 PPM: " + path);
    // Skip whitespace and '#' comments between header tokens.
    auto next_int = [&fp, &path]() {
        int c;
        for (;;) {
            c = std::fgetc(fp.get());
            if (c == '#') {
                while (c != '\n' && c != EOF) c = std::fgetc(fp.get());
            } else if (!std::isspace(c)) {
                break;
            }
        }
        int value = 0;
        bool any = false;
        while (c != EOF && std::isdigit(c)) {
            value = value * 10 + (c - '0');
            any = true;
            c = std::fgetc(fp.get());
        }
        if (!any) throw std::runtime_error("malformed PPM header: " + path);
        return value;
    };
    const int w = next_int();
    const int h = next_int();
    const int maxval = next_int();
    if (maxval != 255) throw std::runtime_error("unsupported PPM maxval (want 255): " + path);
    Image img(w, h);
    std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        if (std::fread(row.data(), 1, row.size(), fp.get()) != row.size())
            throw std::runtime_error("truncated PPM: " + path);
        for (int x = 0; x < w; ++x)
            img.set(x, y,
                    {row[static_cast<size_t>(x) * 3] / 255.0, row[static_cast<size_t>(x) * 3 + 1] / 255.0,
                     row[static_cast<size_t>(x) * 3 + 2] / 255.0});
    }
    return img;
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Dispatches on extension: .png or .ppm.
inline void save_image(const std::string& path, const Image& img) {
    if (has_suffix(path, ".ppm")) {
        save_ppm(path, img);
    } else if (has_suffix(path, ".png")) {
        save_png(path, img);
    } else {
        throw std::runtime_error("unsupported image extension (use .png or .ppm): " + path);
    }
}

inline Image load_image(const std::string& path) {
    if (has_suffix(path, ".ppm")) return load_ppm(path);
    if (has_suffix(path, ".png")) return load_png(path);
    throw std::runtime_error("unsupported image extension (use .png or .ppm): " + path);
}

}  // namespace refray
