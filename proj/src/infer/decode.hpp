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

#include "../model/caption_model.hpp"
#include "../trace/trace.hpp"

namespace karte {

// Generation emits characters or <end>; <pad>, <start> and <unk> are never
// chosen but stay in the softmax. Equal scores resolve to the lowest
// character id, with <end> ranked after every character.
std::size_t candidate_rank(TokenId id, std::size_t vocab_size);
std::vector<TokenId> candidate_tokens(std::size_t vocab_size);

struct Hypothesis {
    std::vector<TokenId> tokens; // <start> followed by the generated ids
    double log_prob = 0.0;
    std::vector<double> step_log_probs;
    std::vector<std::vector<double>> weights; // one attention row per generated token
    DecoderState state;
    bool finished = false;

    std::size_t generated() const { return tokens.size() - 1; }
    bool ended() const { return tokens.size() > 1 && tokens.back() == kEndId; }
    TokenSequence sequence() const { return {tokens, ended()}; }
};

std::string trace_label(TokenId id, const Vocabulary& vocab);
AttentionTrace make_trace(const Hypothesis& hyp, const AnnotationGrid& grid, const Vocabulary& vocab);

// max_len counts generated tokens, <end> included.
Hypothesis greedy_decode(const Decoder& decoder, const AnnotationGrid& grid, std::size_t max_len);

// Finished hypotheses (ended, or at max_len) leave the beam; ranking is by
// raw summed log-probability, best first, without duplicates.
std::vector<Hypothesis> beam_search(const Decoder& decoder, const AnnotationGrid& grid, std::size_t beam_size,
                                    std::size_t max_len);

struct Prediction {
    std::string finding;
    double log_prob = 0.0;
    Hypothesis hypothesis;
    AttentionTrace trace;
};

Prediction predict_grid(const CaptionModel& model, const AnnotationGrid& grid, std::size_t beam_size);
Prediction predict_image(const CaptionModel& model, const GrayImage& image, std::size_t beam_size);
Prediction predict_image(const CaptionModel& model, const std::filesystem::path& image_path, std::size_t beam_size);

} // namespace karte
