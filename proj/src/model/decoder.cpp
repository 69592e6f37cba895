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

#include "decoder.hpp"

#include "../error.hpp"
#include "../numerics/optim.hpp"

namespace karte {

Decoder::Decoder(const DecoderConfig& cfg)
    : cfg_(cfg),
      att_(cfg.channels, cfg.hidden, cfg.attention_width()),
      lstm_("dec.lstm", cfg.vocab_size + cfg.channels, cfg.hidden),
      out_w_("dec.out.W", {cfg.hidden, cfg.vocab_size}),
      out_b_("dec.out.b", {cfg.vocab_size}) {
    if (cfg.vocab_size <= kFirstCharId) fail(ErrorCode::InvalidArgument, "decoder: vocabulary has no characters");
    if (cfg.channels == 0 || cfg.hidden == 0) fail(ErrorCode::InvalidArgument, "decoder: sizes must be positive");
}

void Decoder::init(Rng& rng) {
    const std::size_t d = cfg_.channels, h = cfg_.hidden, a = cfg_.attention_width(), k = cfg_.vocab_size;
    init_glorot(att_.w_feat, d, a, rng);
    init_glorot(att_.w_hidden, h, a, rng);
    att_.bias.value.fill(0.0);
    init_glorot(att_.w_score, a, 1, rng);
    for (std::size_t g = 0; g < 4; ++g) {
        init_glorot(lstm_.weight[g], k + d + h, h, rng);
        lstm_.bias[g].value.fill(g == kForgetGate ? cfg_.forget_bias : 0.0);
    }
    init_glorot(out_w_, h, k, rng);
    out_b_.value.fill(0.0);
}

std::pair<DecoderState, Tensor> Decoder::init_state(const AnnotationGrid& grid) const {
    DecoderState s{Tensor({1, cfg_.hidden}), Tensor({1, cfg_.hidden}), 0};
    return {std::move(s), initial_context(grid)};
}

Decoder::StepResult Decoder::step(TokenId prev, const Tensor& context, const DecoderState& state, Rng* rng,
                                  bool training) const {
    const std::size_t k = cfg_.vocab_size, d = cfg_.channels;
    if (prev >= k)
        fail(ErrorCode::InvalidArgument, "decode_step: token " + std::to_string(prev) + " >= K=" + std::to_string(k));
    if (context.shape() != Shape({1, d}))
        fail(ErrorCode::Shape, "decode_step: context " + shape_string(context.shape()) + ", expected [1x" +
                                   std::to_string(d) + "]");
    if (training && !rng) fail(ErrorCode::InvalidArgument, "decode_step: training mode needs an rng");

    Tensor x({1, k + d});
    x[prev] = 1.0;
    std::copy_n(context.ptr(), d, x.ptr() + k);
    StepResult r;
    r.lstm = lstm_cell(x, state.h, state.c, lstm_);
    Rng unused(0);
    r.drop = dropout(r.lstm.h, cfg_.dropout, rng ? *rng : unused, training);
    r.logits = dense(r.drop.output, out_w_, out_b_);
    r.state = DecoderState{r.lstm.h, r.lstm.c, state.t + 1};
    return r;
}

Decoder::Unroll Decoder::teacher_forced_unroll(const AnnotationGrid& grid, const TokenSequence& target, Rng& rng,
                                               bool training) const {
    const auto& ids = target.ids;
    if (!target.bounded || ids.size() < 2 || ids.front() != kStartId || ids.back() != kEndId)
        fail(ErrorCode::InvalidArgument, "teacher_forced_unroll: target must be a bounded sequence");
    const std::size_t steps = ids.size() - 1;
    const std::size_t l = grid.positions();

    Unroll u;
    u.projected = project(grid, att_);
    auto [state, context] = init_state(grid);
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<double> weights;
        if (t == 0) {
            weights.assign(l, 1.0 / static_cast<double>(l));
        } else {
            AttentionStep a = attend(grid, u.projected, state.h, att_);
            context = a.context;
            weights = a.weights;
            u.attention.push_back(std::move(a));
        }
        u.h_prev.push_back(state.h);
        StepResult r = step(ids[t], context, state, &rng, training);
        state = r.state;
        u.logits.emplace_back(r.logits.values());
        u.weights.push_back(std::move(weights));
        u.inputs.push_back(ids[t]);
        u.targets.push_back(ids[t + 1]);
        u.steps.push_back(std::move(r));
    }
    return u;
}

Tensor Decoder::backward(const AnnotationGrid& grid, const Unroll& u, const std::vector<std::vector<double>>& dlogits,
                         const std::vector<std::vector<double>>& dweights) {
    const std::size_t steps = u.steps.size();
    const std::size_t k = cfg_.vocab_size, d = cfg_.channels, h = cfg_.hidden, l = grid.positions();
    if (dlogits.size() != steps || (!dweights.empty() && dweights.size() != steps))
        fail(ErrorCode::Shape, "decoder backward: gradient step count mismatch");

    Tensor d_grid({l, d});
    Tensor d_proj({l, cfg_.attention_width()});
    Tensor dh_next({1, h}), dc_next({1, h});
    for (std::size_t t = steps; t-- > 0;) {
        const StepResult& r = u.steps[t];
        Tensor dlog({1, k}, dlogits[t]);
        Tensor dhd = dense_backward(r.drop.output, out_w_, out_b_, dlog);
        Tensor dh = dropout_backward(r.drop, dhd);
        for (std::size_t j = 0; j < h; ++j) dh[j] += dh_next[j];
        LstmGrads g = lstm_cell_backward(r.lstm, lstm_, dh, dc_next);
        Tensor dz({1, d});
        std::copy_n(g.dx.ptr() + k, d, dz.ptr());
        dh_next = std::move(g.dh_prev);
        dc_next = std::move(g.dc_prev);
        if (t == 0) {
            // mean context: constant weights 1/L
            for (std::size_t i = 0; i < l; ++i)
                for (std::size_t c = 0; c < d; ++c) d_grid[i * d + c] += dz[c] / static_cast<double>(l);
        } else {
            static const std::vector<double> kNone;
            Tensor dh_att = attend_backward(grid, u.h_prev[t], u.attention[t - 1], att_, dz,
                                            dweights.empty() ? kNone : dweights[t], d_grid, d_proj);
            for (std::size_t j = 0; j < h; ++j) dh_next[j] += dh_att[j];
        }
    }
    project_backward(grid, att_, d_proj, d_grid);
    return d_grid;
}

ParameterList Decoder::parameters() {
    ParameterList out;
    att_.collect(out);
    lstm_.collect(out);
    out.push_back(&out_w_);
    out.push_back(&out_b_);
    return out;
}

std::vector<const Parameter*> Decoder::all_parameters() const {
    auto list = const_cast<Decoder*>(this)->parameters();
    return {list.begin(), list.end()};
}

} // namespace karte
