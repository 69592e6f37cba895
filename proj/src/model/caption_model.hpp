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
#include <map>
#include <string>

#include "../config/config.hpp"
#include "../text/charvocab.hpp"
#include "decoder.hpp"
#include "encoder.hpp"

namespace karte {

EncoderConfig encoder_config(const Config& cfg);
DecoderConfig decoder_config(const Config& cfg, std::size_t vocab_size);
PreprocessConfig preprocess_config(const Config& cfg);

// Encoder + attention decoder + the vocabulary they were trained with.
// Checkpoints hold "enc.conv*" and "dec.*" parameters; the metadata carries
// the resolved config, the vocabulary text and the decode length cap.
struct CaptionModel {
    Config config;
    Vocabulary vocab;
    Encoder encoder;
    Decoder decoder;
    std::size_t max_len = 0;

    static CaptionModel create(const Config& cfg, Vocabulary vocab, std::size_t max_len, Rng& rng);

    ParameterList encoder_parameters() { return encoder.conv_parameters(); }
    ParameterList decoder_parameters() { return decoder.parameters(); }
    ParameterList parameters();
    std::vector<const Parameter*> saved_parameters() const;

    std::map<std::string, std::string> metadata() const;
    void save(const std::filesystem::path& path, bool with_moments = false) const;
    static CaptionModel load(const std::filesystem::path& path);
};

// Pre-trained encoder checkpoint: "enc.*" including the classification head.
void save_encoder(const std::filesystem::path& path, const Encoder& encoder, const Config& cfg);
void load_encoder_weights(const std::filesystem::path& path, Encoder& encoder);

} // namespace karte
