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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "../data/corpus.hpp"

namespace karte {

// Every tunable of the pipeline. Text form is one "key=value" per line;
// '#' starts a comment. Unknown keys are rejected.
struct Config {
    // model geometry
    std::size_t image_size = 64;
    std::size_t resize_size = 72;
    std::vector<std::size_t> encoder_channels{16, 32, 64, 128};
    std::size_t hidden = 64;
    std::size_t attention = 0; // 0: same as hidden
    double dropout = 0.5;
    double forget_bias = 1.0;

    // caption training
    std::size_t batch_size = 16;
    double lr_encoder = 1e-4;
    double lr_decoder = 4e-4;
    double lambda = 1.0;
    std::size_t plateau_patience = 10;
    double plateau_factor = 0.8;
    std::size_t early_stop_patience = 20; // 0 disables
    std::size_t max_epochs = 200;
    SamplingMode sampling = SamplingMode::Oversample;
    std::size_t per_class = 100;
    std::size_t threshold = 5;
    double clip_norm = 5.0; // 0 disables
    bool freeze_encoder = false;
    double target_bleu = 0.0; // stop once validation BLEU-4 reaches it; 0 disables
    std::string exclusions;   // rules file; empty uses the built-in rules

    // encoder pre-training
    std::size_t pretrain_epochs = 20;
    double pretrain_lr = 1e-3;
    std::size_t pretrain_batch = 16;

    // decoding
    std::size_t beam = 3;
    std::size_t max_len = 0; // 0: 2 x longest training finding + 2

    std::string normal = kDefaultNormalFinding;
    std::uint64_t seed = 1;

    void validate() const;
};

// 224 input (256 resize), 14x14 grid of 2048 channels, H = 256.
Config paper_scale_config();

void apply_setting(Config& cfg, const std::string& key, const std::string& value);
void apply_config_text(Config& cfg, const std::string& text);
void load_config_file(Config& cfg, const std::filesystem::path& path);

// Fully resolved config in key=value form, keys in fixed order.
std::string dump_config(const Config& cfg);

std::vector<std::string> config_keys();

} // namespace karte
