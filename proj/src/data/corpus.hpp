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

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "../numerics/rng.hpp"
#include "../numerics/tensor.hpp"
#include "image_io.hpp"

namespace karte {

inline constexpr const char* kDefaultNormalFinding = "異常なし";

struct Sample {
    std::string image_path;                // as written in the manifest
    std::filesystem::path resolved_path;   // joined with the manifest directory
    std::string finding;
    int class_label = -1;                  // optional third manifest column
    bool is_normal = false;
};

// Manifest: UTF-8 TSV "image_path<TAB>finding[<TAB>class_label]". Several
// findings for one image may share a line, separated by '|'; each becomes
// its own Sample. Blank lines and lines starting with '#' are skipped.
std::vector<Sample> load_manifest(const std::filesystem::path& path, const std::string& normal_finding,
                                  bool check_images = true);
void write_manifest(const std::filesystem::path& path, const std::vector<Sample>& samples);

struct ExclusionRule {
    std::string text;
    bool prefix = false; // exact match otherwise
};

std::vector<ExclusionRule> default_exclusion_rules();
// Rules file: one rule per line, "exact<TAB>text" or "prefix<TAB>text".
std::vector<ExclusionRule> load_exclusion_rules(const std::filesystem::path& path);

struct ExclusionResult {
    std::vector<Sample> kept;
    std::vector<std::size_t> removed_per_rule;
};

ExclusionResult apply_exclusions(const std::vector<Sample>& samples, const std::vector<ExclusionRule>& rules);

// Keeps samples whose finding occurs at least `threshold` times.
std::vector<Sample> threshold_filter(const std::vector<Sample>& samples, std::size_t threshold);

// Occurrence count per finding, keyed in first-occurrence order.
std::vector<std::pair<std::string, std::size_t>> finding_histogram(const std::vector<Sample>& samples);

struct DatasetSplit {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
    std::size_t threshold = 1;
};

// Stratified by finding: classes with at least three samples are split per
// ratio (rounded per class), smaller classes go wholly to train. Samples
// sharing an (image, finding) pair always land in the same part.
DatasetSplit split_dataset(const std::vector<Sample>& samples, std::array<double, 3> ratios, Rng& rng);

enum class SamplingMode { Natural, Oversample, Undersample };

const char* sampling_mode_name(SamplingMode mode);
SamplingMode parse_sampling_mode(const std::string& name);

struct EpochPlan {
    SamplingMode mode = SamplingMode::Natural;
    std::vector<std::size_t> order; // indices into the train list
    std::size_t normal_count = 0;
    std::size_t abnormal_count = 0;
    std::size_t abnormal_classes = 0;
};

EpochPlan plan_epoch_natural(const std::vector<Sample>& train, Rng& rng);
EpochPlan plan_epoch_oversample(const std::vector<Sample>& train, std::size_t per_class, Rng& rng);
EpochPlan plan_epoch_undersample(const std::vector<Sample>& train, Rng& rng);
EpochPlan plan_epoch(const std::vector<Sample>& train, SamplingMode mode, std::size_t per_class, Rng& rng);

// ---- image pre-processing ------------------------------------------------

enum class PreprocessMode { Train, Eval };

struct PreprocessConfig {
    std::size_t resize = 72; // train-mode resize before cropping
    std::size_t crop = 64;   // network input size
    std::array<double, 3> mean{0.485, 0.456, 0.406};
    std::array<double, 3> stddev{0.229, 0.224, 0.225};
};

struct CropWindow {
    std::size_t x = 0;
    std::size_t y = 0;
};

// Returns [3 x crop x crop]: grayscale replicated to three channels, scaled
// to [0,1] and normalised per channel. Train mode resizes to resize x resize
// and takes a random crop; eval mode resizes straight to crop x crop.
Tensor preprocess_image(const GrayImage& image, PreprocessMode mode, const PreprocessConfig& cfg, Rng& rng,
                        CropWindow* window = nullptr);
Tensor preprocess_image(const std::filesystem::path& path, PreprocessMode mode, const PreprocessConfig& cfg, Rng& rng);

// Decoded images keyed by resolved path.
class ImageCache {
public:
    const GrayImage& get(const std::filesystem::path& path);

private:
    std::unordered_map<std::string, GrayImage> images_;
};

} // namespace karte
