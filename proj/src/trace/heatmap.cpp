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

#include <algorithm>
#include <cmath>

#include "../error.hpp"
#include "trace.hpp"

namespace karte {

namespace {

constexpr double kHue[3] = {255.0, 64.0, 0.0};

std::string file_label(const std::string& token) {
    if (!token.empty() && token.front() == '<' && token.back() == '>') return token.substr(1, token.size() - 2);
    return token;
}

} // namespace

std::vector<double> upsample_map(const std::vector<double>& row, std::size_t grid_h, std::size_t grid_w,
                                 std::size_t width, std::size_t height) {
    if (row.size() != grid_h * grid_w) fail(ErrorCode::Shape, "heatmap: row length does not match grid");
    auto up = resize_bilinear(row, grid_w, grid_h, width, height);
    const auto [lo, hi] = std::minmax_element(up.begin(), up.end());
    const double min = *lo, range = *hi - *lo;
    if (!(range > 1e-15)) {
        std::fill(up.begin(), up.end(), 0.0);
        return up;
    }
    for (double& v : up) v = (v - min) / range;
    return up;
}

RgbImage blend_heatmap(const GrayImage& base, const std::vector<double>& intensity, double alpha) {
    if (intensity.size() != base.pixels.size()) fail(ErrorCode::Shape, "heatmap: overlay size differs from image");
    RgbImage out{base.width, base.height, std::vector<std::uint8_t>(base.pixels.size() * 3)};
    for (std::size_t i = 0; i < base.pixels.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = (1.0 - alpha) * base.pixels[i] + alpha * intensity[i] * kHue[c];
            out.pixels[i * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    return out;
}

HeatmapArtifact render_heatmaps(const AttentionTrace& trace, const std::filesystem::path& image_path,
                                const std::filesystem::path& out_dir) {
    trace.validate();
    const GrayImage base = read_gray_image(image_path);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());

    const std::string stem = image_path.stem().string();
    HeatmapArtifact art;
    std::vector<double> summed(trace.positions(), 0.0);
    for (std::size_t t = 0; t < trace.steps(); ++t) {
        const auto& row = trace.weights[t];
        for (std::size_t i = 0; i < row.size(); ++i) summed[i] += row[i];
        const auto map = upsample_map(row, trace.grid_h, trace.grid_w, base.width, base.height);
        auto path = out_dir / (stem + ".step" + std::to_string(t + 1) + "." + file_label(trace.tokens[t]) + ".png");
        write_png(path, blend_heatmap(base, map));
        art.step_images.push_back(std::move(path));
    }
    if (trace.positions() > 0) {
        const auto map = upsample_map(summed, trace.grid_h, trace.grid_w, base.width, base.height);
        art.summed_image = out_dir / (stem + ".sum.png");
        write_png(art.summed_image, blend_heatmap(base, map));
    }
    return art;
}

} // namespace karte
