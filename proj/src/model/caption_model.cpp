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

#include "caption_model.hpp"

#include "../error.hpp"
#include "../numerics/checkpoint.hpp"

namespace karte {

EncoderConfig encoder_config(const Config& cfg) {
    EncoderConfig e;
    e.channels = cfg.encoder_channels;
    e.image_size = cfg.image_size;
    return e;
}

DecoderConfig decoder_config(const Config& cfg, std::size_t vocab_size) {
    DecoderConfig d;
    d.vocab_size = vocab_size;
    d.channels = cfg.encoder_channels.back();
    d.hidden = cfg.hidden;
    d.attention = cfg.attention;
    d.dropout = cfg.dropout;
    d.forget_bias = cfg.forget_bias;
    return d;
}

PreprocessConfig preprocess_config(const Config& cfg) {
    PreprocessConfig p;
    p.resize = cfg.resize_size;
    p.crop = cfg.image_size;
    return p;
}

CaptionModel CaptionModel::create(const Config& cfg, Vocabulary vocab, std::size_t max_len, Rng& rng) {
    if (max_len == 0) fail(ErrorCode::InvalidArgument, "caption model: max_len must be positive");
    CaptionModel m;
    m.config = cfg;
    m.encoder = Encoder(encoder_config(cfg));
    m.decoder = Decoder(decoder_config(cfg, vocab.size()));
    m.vocab = std::move(vocab);
    m.max_len = max_len;
    m.encoder.init(rng);
    m.decoder.init(rng);
    return m;
}

ParameterList CaptionModel::parameters() {
    ParameterList out = encoder_parameters();
    for (auto* p : decoder_parameters()) out.push_back(p);
    return out;
}

std::vector<const Parameter*> CaptionModel::saved_parameters() const {
    auto list = const_cast<CaptionModel*>(this)->parameters();
    return {list.begin(), list.end()};
}

std::map<std::string, std::string> CaptionModel::metadata() const {
    return {{"kind", "caption"},
            {"config", dump_config(config)},
            {"vocab", vocab.to_text()},
            {"max_len", std::to_string(max_len)}};
}

void CaptionModel::save(const std::filesystem::path& path, bool with_moments) const {
    save_checkpoint(path, saved_parameters(), with_moments, metadata());
}

namespace {

const std::string& meta(const Checkpoint& ckpt, const std::string& key, const std::filesystem::path& path) {
    auto it = ckpt.metadata.find(key);
    if (it == ckpt.metadata.end())
        fail(ErrorCode::Format, "checkpoint " + path.string() + " lacks metadata '" + key + "'");
    return it->second;
}

} // namespace

CaptionModel CaptionModel::load(const std::filesystem::path& path) {
    Checkpoint ckpt = load_checkpoint(path);
    if (meta(ckpt, "kind", path) != "caption")
        fail(ErrorCode::Format, "checkpoint " + path.string() + " is not a caption model");
    CaptionModel m;
    apply_config_text(m.config, meta(ckpt, "config", path));
    m.vocab = Vocabulary::from_text(meta(ckpt, "vocab", path));
    m.max_len = std::stoul(meta(ckpt, "max_len", path));
    m.encoder = Encoder(encoder_config(m.config));
    m.decoder = Decoder(decoder_config(m.config, m.vocab.size()));
    restore_parameters(ckpt, m.parameters());
    return m;
}

void save_encoder(const std::filesystem::path& path, const Encoder& encoder, const Config& cfg) {
    save_checkpoint(path, encoder.all_parameters(), false, {{"kind", "encoder"}, {"config", dump_config(cfg)}});
}

void load_encoder_weights(const std::filesystem::path& path, Encoder& encoder) {
    Checkpoint ckpt = load_checkpoint(path);
    if (meta(ckpt, "kind", path) != "encoder")
        fail(ErrorCode::Format, "checkpoint " + path.string() + " is not an encoder checkpoint");
    restore_parameters(ckpt, encoder.conv_parameters(), "enc.conv");
}

} // namespace karte
