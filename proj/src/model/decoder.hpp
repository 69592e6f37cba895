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

#include <vector>

#include "../numerics/layers.hpp"
#include "../numerics/rng.hpp"
#include "../text/charvocab.hpp"
#include "attention.hpp"

namespace karte {

struct DecoderConfig {
    std::size_t vocab_size = 0; // K
    std::size_t channels = 0;   // D
    std::size_t hidden = 64;    // H
    std::size_t attention = 0;  // A; 0 means A = H
    double dropout = 0.5;
    double forget_bias = 1.0;

    std::size_t attention_width() const { return attention == 0 ? hidden : attention; }
};

struct DecoderState {
    Tensor h; // [1 x H]
    Tensor c; // [1 x H]
    std::size_t t = 0;
};

// Single-layer LSTM over concat(one_hot(y_{t-1}), z_t), dropout on h_t,
// then one dense projection to K logits.
class Decoder {
public:
    struct StepResult {
        Tensor logits; // [1 x K]
        DecoderState state;
        LstmCache lstm;
        DropoutResult drop;
    };

    // Everything a teacher-forced unroll keeps for backward.
    struct Unroll {
        std::vector<std::vector<double>> logits;  // per step, K each
        std::vector<std::vector<double>> weights; // alpha rows, L each
        std::vector<TokenId> inputs;
        std::vector<TokenId> targets;
        ProjectedGrid projected;
        std::vector<AttentionStep> attention; // step t >= 1; index t-1
        std::vector<StepResult> steps;
        std::vector<Tensor> h_prev;
    };

    Decoder() = default;
    explicit Decoder(const DecoderConfig& cfg);

    const DecoderConfig& config() const noexcept { return cfg_; }
    void init(Rng& rng);

    // Zero hidden/cell state plus the mean-feature initial context.
    std::pair<DecoderState, Tensor> init_state(const AnnotationGrid& grid) const;

    StepResult step(TokenId prev, const Tensor& context, const DecoderState& state, Rng* rng, bool training) const;

    // target must be bounded (<start> ... <end>) with at least two ids.
    // Step 0 uses the mean context with uniform weights; later steps attend
    // with the previous hidden state.
    Unroll teacher_forced_unroll(const AnnotationGrid& grid, const TokenSequence& target, Rng& rng,
                                 bool training) const;

    // Accumulates parameter gradients and returns d grid [L x D].
    // dlogits / dweights are per step (dweights may be empty).
    Tensor backward(const AnnotationGrid& grid, const Unroll& unroll, const std::vector<std::vector<double>>& dlogits,
                    const std::vector<std::vector<double>>& dweights);

    AttentionParams& attention() { return att_; }
    const AttentionParams& attention() const { return att_; }
    LstmParams& lstm() { return lstm_; }
    Parameter& out_weight() { return out_w_; }
    Parameter& out_bias() { return out_b_; }

    ParameterList parameters();
    std::vector<const Parameter*> all_parameters() const;

private:
    DecoderConfig cfg_;
    AttentionParams att_;
    LstmParams lstm_;
    Parameter out_w_;
    Parameter out_b_;
};

} // namespace karte
