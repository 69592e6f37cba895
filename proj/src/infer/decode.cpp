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

#include "decode.hpp"

#include <algorithm>
#include <tuple>

#include "../error.hpp"
#include "../numerics/layers.hpp"

namespace karte {

std::size_t candidate_rank(TokenId id, std::size_t vocab_size) {
    if (id == kEndId) return vocab_size - kFirstCharId;
    return id - kFirstCharId;
}

std::vector<TokenId> candidate_tokens(std::size_t vocab_size) {
    std::vector<TokenId> out;
    for (TokenId id = kFirstCharId; id < vocab_size; ++id) out.push_back(id);
    out.push_back(kEndId);
    return out;
}

std::string trace_label(TokenId id, const Vocabulary& vocab) {
    if (Vocabulary::is_special(id)) return Vocabulary::special_name(id);
    return token_label(vocab.char_of(id));
}

AttentionTrace make_trace(const Hypothesis& hyp, const AnnotationGrid& grid, const Vocabulary& vocab) {
    AttentionTrace trace;
    trace.grid_h = grid.grid_h;
    trace.grid_w = grid.grid_w;
    trace.weights = hyp.weights;
    for (std::size_t i = 1; i < hyp.tokens.size(); ++i) trace.tokens.push_back(trace_label(hyp.tokens[i], vocab));
    return trace;
}

namespace {

struct Expansion {
    std::vector<double> log_probs; // over all K
    std::vector<double> weights;
    DecoderState state;
};

// One decode step from a hypothesis: mean context at the first step,
// attention on the previous hidden state afterwards.
Expansion expand(const Decoder& decoder, const AnnotationGrid& grid, const ProjectedGrid& projected,
                 const Hypothesis& hyp) {
    Expansion e;
    Tensor context;
    if (hyp.generated() == 0) {
        context = initial_context(grid);
        e.weights.assign(grid.positions(), 1.0 / static_cast<double>(grid.positions()));
    } else {
        AttentionStep a = attend(grid, projected, hyp.state.h, decoder.attention());
        context = std::move(a.context);
        e.weights = std::move(a.weights);
    }
    auto r = decoder.step(hyp.tokens.back(), context, hyp.state, nullptr, false);
    e.log_probs = log_softmax(r.logits.data());
    e.state = std::move(r.state);
    return e;
}

Hypothesis start_hypothesis(const Decoder& decoder, const AnnotationGrid& grid) {
    Hypothesis h;
    h.tokens = {kStartId};
    h.state = decoder.init_state(grid).first;
    return h;
}

Hypothesis extend(const Hypothesis& parent, const Expansion& e, TokenId token, std::size_t max_len) {
    Hypothesis h;
    h.tokens = parent.tokens;
    h.tokens.push_back(token);
    h.step_log_probs = parent.step_log_probs;
    h.step_log_probs.push_back(e.log_probs[token]);
    h.log_prob = parent.log_prob + e.log_probs[token];
    h.weights = parent.weights;
    h.weights.push_back(e.weights);
    h.state = e.state;
    h.finished = token == kEndId || h.generated() >= max_len;
    return h;
}

} // namespace

Hypothesis greedy_decode(const Decoder& decoder, const AnnotationGrid& grid, std::size_t max_len) {
    if (max_len == 0) fail(ErrorCode::InvalidArgument, "greedy_decode: max_len must be >= 1");
    const std::size_t k = decoder.config().vocab_size;
    const auto candidates = candidate_tokens(k);
    const ProjectedGrid projected = project(grid, decoder.attention());
    Hypothesis hyp = start_hypothesis(decoder, grid);
    while (!hyp.finished) {
        Expansion e = expand(decoder, grid, projected, hyp);
        TokenId best = candidates.front();
        for (TokenId id : candidates)
            if (e.log_probs[id] > e.log_probs[best]) best = id;
        hyp = extend(hyp, e, best, max_len);
    }
    return hyp;
}

std::vector<Hypothesis> beam_search(const Decoder& decoder, const AnnotationGrid& grid, std::size_t beam_size,
                                    std::size_t max_len) {
    if (beam_size == 0) fail(ErrorCode::InvalidArgument, "beam_search: beam size must be >= 1");
    if (max_len == 0) fail(ErrorCode::InvalidArgument, "beam_search: max_len must be >= 1");
    const std::size_t k = decoder.config().vocab_size;
    const auto candidates = candidate_tokens(k);
    const ProjectedGrid projected = project(grid, decoder.attention());

    std::vector<Hypothesis> live{start_hypothesis(decoder, grid)};
    std::vector<Hypothesis> done;
    while (!live.empty()) {
        std::vector<Expansion> expansions;
        expansions.reserve(live.size());
        // (score, token rank, hypothesis index, token)
        std::vector<std::tuple<double, std::size_t, std::size_t, TokenId>> pool;
        for (std::size_t hi = 0; hi < live.size(); ++hi) {
            expansions.push_back(expand(decoder, grid, projected, live[hi]));
            for (TokenId id : candidates)
                pool.emplace_back(live[hi].log_prob + expansions.back().log_probs[id], candidate_rank(id, k), hi, id);
        }
        const std::size_t keep = std::min(beam_size, pool.size());
        std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                          [](const auto& a, const auto& b) {
                              if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
                              if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
                              return std::get<2>(a) < std::get<2>(b);
                          });
        std::vector<Hypothesis> next;
        for (std::size_t i = 0; i < keep; ++i) {
            const auto& [score, rank, hi, id] = pool[i];
            Hypothesis h = extend(live[hi], expansions[hi], id, max_len);
            (h.finished ? done : next).push_back(std::move(h));
        }
        live = std::move(next);
    }
    std::stable_sort(done.begin(), done.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.log_prob > b.log_prob; });
    return done;
}

Prediction predict_grid(const CaptionModel& model, const AnnotationGrid& grid, std::size_t beam_size) {
    auto ranked = beam_search(model.decoder, grid, beam_size, model.max_len);
    Prediction p;
    p.hypothesis = std::move(ranked.front());
    p.finding = decode(p.hypothesis.tokens, model.vocab);
    p.log_prob = p.hypothesis.log_prob;
    p.trace = make_trace(p.hypothesis, grid, model.vocab);
    return p;
}

Prediction predict_image(const CaptionModel& model, const GrayImage& image, std::size_t beam_size) {
    Rng unused(0);
    Tensor x = preprocess_image(image, PreprocessMode::Eval, preprocess_config(model.config), unused);
    const std::size_t s = model.config.image_size;
    auto grids = model.encoder.forward(x.reshaped({1, 3, s, s}));
    return predict_grid(model, grids.front(), beam_size);
}

Prediction predict_image(const CaptionModel& model, const std::filesystem::path& image_path, std::size_t beam_size) {
    return predict_image(model, read_gray_image(image_path), beam_size);
}

} // namespace karte
