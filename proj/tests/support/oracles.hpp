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

// Independent reference computations shared by the unit tests and the
// acceptance runner. None of them call the code path they are checking.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "model/attention.hpp"
#include "model/decoder.hpp"
#include "numerics/layers.hpp"
#include "numerics/rng.hpp"
#include "text/utf8.hpp"

namespace karte::oracle {

// ---- BLEU ------------------------------------------------------------------

struct NgramTally {
    std::size_t matches = 0;
    std::size_t total = 0;
};

inline std::size_t count_at(const std::u32string& s, const std::u32string& gram) {
    std::size_t c = 0;
    if (gram.size() > s.size()) return 0;
    for (std::size_t i = 0; i + gram.size() <= s.size(); ++i)
        if (std::equal(gram.begin(), gram.end(), s.begin() + static_cast<std::ptrdiff_t>(i))) ++c;
    return c;
}

// Clipped n-gram matches by direct scanning: each distinct hypothesis n-gram
// is counted once, at its first occurrence.
inline NgramTally brute_ngrams(const std::string& hyp_text, const std::string& ref_text, std::size_t n) {
    const auto hyp = utf8::decode(hyp_text);
    const auto ref = utf8::decode(ref_text);
    NgramTally t;
    if (hyp.size() < n) return t;
    t.total = hyp.size() - n + 1;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
        const std::u32string gram = hyp.substr(i, n);
        bool seen = false;
        for (std::size_t j = 0; j < i && !seen; ++j) seen = hyp.compare(j, n, gram) == 0;
        if (seen) continue;
        t.matches += std::min(count_at(hyp, gram), count_at(ref, gram));
    }
    return t;
}

// ---- decoding --------------------------------------------------------------

inline std::vector<double> plain_log_softmax(const std::vector<double>& z) {
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - m - std::log(s);
    return out;
}

struct Scored {
    std::vector<TokenId> tokens; // generated ids, <end> included when emitted
    double log_prob = -1e300;
};

// Scores every emit-able sequence of at most max_len generated tokens and
// keeps the best one. Emit-able: characters and <end>; a sequence stops at
// <end> or at the cap.
inline Scored exhaustive_best(const Decoder& dec, const AnnotationGrid& grid, std::size_t max_len) {
    Scored best;
    const std::size_t k = dec.config().vocab_size;
    auto walk = [&](auto&& self, TokenId prev, const DecoderState& st, std::vector<TokenId>& seq, double lp) -> void {
        Tensor ctx = seq.empty() ? initial_context(grid) : attend(grid, st.h, dec.attention()).context;
        auto r = dec.step(prev, ctx, st, nullptr, false);
        const auto logp = plain_log_softmax(r.logits.values());
        std::vector<TokenId> emit;
        for (TokenId id = kFirstCharId; id < k; ++id) emit.push_back(id);
        emit.push_back(kEndId);
        for (TokenId id : emit) {
            seq.push_back(id);
            const double total = lp + logp[id];
            if (id == kEndId || seq.size() == max_len) {
                if (total > best.log_prob) best = {seq, total};
            } else {
                self(self, id, r.state, seq, total);
            }
            seq.pop_back();
        }
    };
    std::vector<TokenId> seq;
    walk(walk, kStartId, dec.init_state(grid).first, seq, 0.0);
    return best;
}

// ---- random tiny models ------------------------------------------------------

inline AnnotationGrid random_grid(std::size_t gh, std::size_t gw, std::size_t d, Rng& rng, double scale = 1.0) {
    AnnotationGrid g;
    g.grid_h = gh;
    g.grid_w = gw;
    g.features = Tensor({gh * gw, d});
    for (auto& v : g.features.data()) v = scale * rng.normal();
    return g;
}

// Glorot init is too tame to separate sequences; widen the output layer so
// the decode distributions are far from uniform.
inline Decoder random_decoder(std::size_t k, std::size_t d, std::size_t h, Rng& rng, double out_scale = 3.0) {
    DecoderConfig cfg;
    cfg.vocab_size = k;
    cfg.channels = d;
    cfg.hidden = h;
    cfg.dropout = 0.0;
    Decoder dec(cfg);
    dec.init(rng);
    for (auto& v : dec.out_weight().value.data()) v *= out_scale;
    for (auto& v : dec.out_bias().value.data()) v = rng.normal();
    return dec;
}

// ---- caption loss ------------------------------------------------------------

struct LossParts {
    double cross_entropy = 0.0;
    double regularizer = 0.0;
};

// Teacher-forced evaluation-mode loss, step by step from decoder.step and
// attend, with the attention penalty summed over every position.
inline LossParts reference_caption_loss(const Decoder& dec, const AnnotationGrid& grid,
                                        const std::vector<TokenId>& bounded, double lambda) {
    LossParts out;
    const std::size_t l = grid.positions();
    std::vector<double> colsum(l, 0.0);
    DecoderState st = dec.init_state(grid).first;
    for (std::size_t t = 0; t + 1 < bounded.size(); ++t) {
        Tensor ctx;
        if (t == 0) {
            ctx = initial_context(grid);
            for (auto& c : colsum) c += 1.0 / static_cast<double>(l);
        } else {
            auto a = attend(grid, st.h, dec.attention());
            for (std::size_t i = 0; i < l; ++i) colsum[i] += a.weights[i];
            ctx = a.context;
        }
        auto r = dec.step(bounded[t], ctx, st, nullptr, false);
        out.cross_entropy -= plain_log_softmax(r.logits.values())[bounded[t + 1]];
        st = r.state;
    }
    for (double c : colsum) out.regularizer += lambda * (1.0 - c) * (1.0 - c);
    return out;
}

} // namespace karte::oracle
