/*
Copyright 2026 The Karte Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include "../error.hpp"

namespace karte {

namespace {

GrayImage read_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    // IHDR is always the first chunk: width, height, bit depth, colour type.
    if (bytes.size() < 33 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0)
        fail(ErrorCode::Format, "corrupt PNG header: " + path.string());
    const int depth = bytes[24];
    const int color = bytes[25];
    if (color != PNG_COLOR_TYPE_GRAY || depth != 8)
        fail(ErrorCode::Format, "expected 8-bit grayscale PNG (color type " + std::to_string(color) + ", depth " +
                                    std::to_string(depth) + "): " + path.string());
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        fail(ErrorCode::Format, "corrupt PNG " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_GRAY;
    GrayImage img;
    img.width = image.width;
    img.height = image.height;
    img.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorCode::Format, "corrupt PNG " + path.string() + ": " + msg);
    }
    return img;
}

GrayImage read_pgm(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> std::size_t {
        skip_space();
        std::size_t v = 0, digits = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            ++digits;
        }
        if (digits == 0) fail(ErrorCode::Format, "malformed PGM header: " + path.string());
        return v;
    };
    const bool binary = bytes[1] == '5';
    pos = 2;
    GrayImage img;
    img.width = read_int();
    img.height = read_int();
    const std::size_t maxval = read_int();
    if (maxval != 255) fail(ErrorCode::Format, "expected 8-bit PGM (maxval 255): " + path.string());
    if (img.width == 0 || img.height == 0) fail(ErrorCode::Format, "empty PGM: " + path.string());
    img.pixels.resize(img.width * img.height);
    if (binary) {
        ++pos; // single whitespace after maxval
        if (bytes.size() < pos + img.pixels.size()) fail(ErrorCode::Format, "truncated PGM: " + path.string());
        std::copy_n(bytes.begin() + static_cast<long>(pos), img.pixels.size(), img.pixels.begin());
    } else {
        for (auto& p : img.pixels) {
            const auto v = read_int();
            if (v > 255) fail(ErrorCode::Format, "PGM sample out of range: " + path.string());
            p = static_cast<std::uint8_t>(v);
        }
    }
    return img;
}

} // namespace

GrayImage read_gray_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open image: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return read_png(path, bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2')) return read_pgm(path, bytes);
    fail(ErrorCode::Format, "unsupported image format (need 8-bit grayscale PNG or PGM): " + path.string());
}

namespace {

void write_png_raw(const std::filesystem::path& path, std::size_t w, std::size_t h, int format, const std::uint8_t* data) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = static_cast<png_uint_32>(format);
    if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorCode::Io, "cannot write PNG " + path.string() + ": " + msg);
    }
}

} // namespace

void write_png(const std::filesystem::path& path, const GrayImage& image) {
    write_png_raw(path, image.width, image.height, PNG_FORMAT_GRAY, image.pixels.data());
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
    write_png_raw(path, image.width, image.height, PNG_FORMAT_RGB, image.pixels.data());
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write PGM: " + path.string());
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

std::vector<double> resize_bilinear(std::span<const double> src, std::size_t src_w, std::size_t src_h,
                                    std::size_t dst_w, std::size_t dst_h) {
    if (src.size() != src_w * src_h || src_w == 0 || src_h == 0 || dst_w == 0 || dst_h == 0)
        fail(ErrorCode::Shape, "resize_bilinear: bad dimensions");
    std::vector<double> out(dst_w * dst_h);
    const double sx = static_cast<double>(src_w) / static_cast<double>(dst_w);
    const double sy = static_cast<double>(src_h) / static_cast<double>(dst_h);
    for (std::size_t y = 0; y < dst_h; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(src_h - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, src_h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < dst_w; ++x) {
            const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(src_w - 1));
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, src_w - 1);
            const double wx = fx - static_cast<double>(x0);
            const double top = src[y0 * src_w + x0] * (1 - wx) + src[y0 * src_w + x1] * wx;
            const double bot = src[y1 * src_w + x0] * (1 - wx) + src[y1 * src_w + x1] * wx;
            out[y * dst_w + x] = top * (1 - wy) + bot * wy;
        }
    }
    return out;
}

} // namespace karte
