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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "../data/image_io.hpp"

namespace karte {

// Per-step attention weights of one decode: steps x positions, where
// position i is grid cell (i / grid_w, i % grid_w).
struct AttentionTrace {
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;
    std::vector<std::vector<double>> weights;
    std::vector<std::string> tokens; // one label per step: the character, or <end>

    std::size_t steps() const noexcept { return weights.size(); }
    std::size_t positions() const noexcept { return grid_h * grid_w; }

    // Throws State when a row does not sum to 1 within tol or dims disagree.
    void validate(double tol = 1e-6) const;

    friend bool operator==(const AttentionTrace&, const AttentionTrace&) = default;
};

// Text format:
//   karte-trace 1
//   steps<TAB>T
//   positions<TAB>L
//   grid<TAB>h<TAB>w
//   tokens[<TAB>label]...      labels are U+XXXX or <end>/<pad>/<start>/<unk>
//   then T rows of L tab-separated weights (%.17g, exact for doubles)
std::string format_trace(const AttentionTrace& trace);
AttentionTrace parse_trace(const std::string& text);
void write_trace(const AttentionTrace& trace, const std::filesystem::path& path);
AttentionTrace read_trace(const std::filesystem::path& path);

std::string token_label(char32_t cp);

struct HeatmapArtifact {
    std::vector<std::filesystem::path> step_images;
    std::filesystem::path summed_image;
};

// Normalised single-channel map (values in [0,1]) of one trace row,
// bilinearly upsampled to width x height. A constant map is all zero.
std::vector<double> upsample_map(const std::vector<double>& row, std::size_t grid_h, std::size_t grid_w,
                                 std::size_t width, std::size_t height);

RgbImage blend_heatmap(const GrayImage& base, const std::vector<double>& intensity, double alpha = 0.5);

// One PNG per step (<stem>.step<t>.<label>.png, t from 1) plus <stem>.sum.png.
HeatmapArtifact render_heatmaps(const AttentionTrace& trace, const std::filesystem::path& image_path,
                                const std::filesystem::path& out_dir);

} // namespace karte
