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

#include "../numerics/rng.hpp"
#include "corpus.hpp"

namespace karte {

// Desk-scale stand-in for a radiograph corpus: noisy grayscale frames with
// zero to two bright shapes and a finding written from a fixed grammar.
//
//   no shape            -> 異常なし                        label 0
//   one shape           -> <左|右><上|下>肺野<shape>        label 1 + 2*shape + (右 ? 1 : 0)
//   same shape, L and R -> 両肺<shape>                      label 7 + shape
//   two shapes differ   -> <left clause>、<right clause>    label 10
//
// with shape words 結節影 (disc), 索状影 (bar), 輪状影 (ring). 左 means the
// shape's centre lies in the left half of the image as stored.
struct SynthConfig {
    std::size_t count = 1;
    std::size_t image_size = 64;
    double normal_fraction = 0.75;
    double noise_sigma = 10.0;
};

inline constexpr std::size_t kSynthClassCount = 11;

enum class SynthShape { Disc = 0, Bar = 1, Ring = 2 };

struct SynthObject {
    SynthShape shape;
    double cx, cy; // centre in pixels
};

struct SynthSample {
    GrayImage image;
    std::string finding;
    int class_label = 0;
    std::vector<SynthObject> objects;
};

SynthSample synth_sample(const SynthConfig& cfg, Rng& rng);

struct SynthResult {
    std::vector<Sample> samples;
    std::filesystem::path manifest;
    std::string report;
};

// Writes images/NNNNN.png, manifest.tsv and report.txt under out_dir.
SynthResult generate_synthetic_corpus(const SynthConfig& cfg, Rng& rng, const std::filesystem::path& out_dir);

} // namespace karte
