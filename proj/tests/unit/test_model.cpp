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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "../support/oracles.hpp"
#include "error.hpp"
#include "model/attention.hpp"
#include "model/caption_model.hpp"
#include "model/decoder.hpp"
#include "model/encoder.hpp"
#include "train/loss.hpp"

using namespace karte;

namespace {

AttentionParams random_attention(std::size_t d, std::size_t h, std::size_t a, Rng& r, double scale) {
    AttentionParams p(d, h, a);
    for (Parameter* q : {&p.w_feat, &p.w_hidden, &p.bias, &p.w_score})
        for (auto& v : q->value.data()) v = scale * r.normal();
    return p;
}

Tensor random_row(std::size_t n, Rng& r) {
    Tensor t({1, n});
    for (auto& v : t.data()) v = r.normal();
    return t;
}

} // namespace

TEST(Attention, SimplexAndHullOver1000Steps) {
    Rng r(101);
    for (int step = 0; step < 1000; ++step) {
        const std::size_t gh = 1 + r.below(4), gw = 1 + r.below(4), d = 1 + r.below(6), h = 1 + r.below(5);
        const double scale = step % 2 ? 0.3 : 4.0; // tame and peaked score ranges
        auto g = oracle::random_grid(gh, gw, d, r);
        auto p = random_attention(d, h, 1 + r.below(5), r, scale);
        auto s = attend(g, random_row(h, r), p);
        double sum = 0.0;
        for (double w : s.weights) {
            ASSERT_GT(w, 0.0);
            sum += w;
        }
        ASSERT_NEAR(sum, 1.0, 1e-6);
        for (std::size_t c = 0; c < d; ++c) {
            double lo = 1e300, hi = -1e300;
            for (std::size_t i = 0; i < g.positions(); ++i) {
                lo = std::min(lo, g.features.at(i, c));
                hi = std::max(hi, g.features.at(i, c));
            }
            ASSERT_GE(s.context[c], lo - 1e-12);
            ASSERT_LE(s.context[c], hi + 1e-12);
        }
    }
}

TEST(Attention, ZeroScoreWeightIsUniform) {
    Rng r(3);
    auto g = oracle::random_grid(2, 3, 4, r);
    auto p = random_attention(4, 2, 3, r, 1.0);
    p.w_score.value.fill(0.0);
    auto s = attend(g, random_row(2, r), p);
    for (double w : s.weights) EXPECT_DOUBLE_EQ(w, 1.0 / 6.0);
    const Tensor mean = initial_context(g);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(s.context[c], mean[c], 1e-15);
}

TEST(Attention, ProjectedAndDirectAgree) {
    Rng r(4);
    auto g = oracle::random_grid(3, 3, 5, r);
    auto p = random_attention(5, 4, 6, r, 1.0);
    const Tensor h = random_row(4, r);
    auto a = attend(g, h, p);
    auto b = attend(g, project(g, p), h, p);
    EXPECT_EQ(a.weights, b.weights);
}

TEST(Loss, RegularizerHandCases) {
    // L = 2, T = 1, alpha = (1, 0): (1-1)^2 + (1-0)^2 = 1
    EXPECT_DOUBLE_EQ(attention_regularizer({{1.0, 0.0}}, 1.0), 1.0);
    // column sums exactly one
    EXPECT_EQ(attention_regularizer({{0.25, 0.75}, {0.75, 0.25}}, 3.0), 0.0);
    // sums (0.5, 1.5, 1.0) with lambda 0.5: 0.5 * (0.25 + 0.25 + 0)
    EXPECT_DOUBLE_EQ(attention_regularizer({{0.5, 0.5, 0.0}, {0.0, 1.0, 1.0}}, 0.5), 0.25);
}

TEST(Loss, UniformLogitsGiveLogK) {
    const std::vector<std::vector<double>> logits(3, std::vector<double>(11, 0.0));
    const std::vector<std::vector<double>> w(3, std::vector<double>(2, 0.5));
    auto l = caption_loss(logits, {4, 5, kEndId}, w, 1.0);
    EXPECT_NEAR(l.cross_entropy, 3 * 2.3978952728, 1e-9);
    // column sums 1.5 each
    EXPECT_NEAR(l.regularizer, 0.5, 1e-15);
}

TEST(Loss, PadStepsAreMasked) {
    const std::vector<std::vector<double>> logits{{0.0, 0.0, 0.0, 0.0, 1.0}, {5.0, 1.0, 2.0, 0.0, 0.0}};
    const std::vector<std::vector<double>> w{{1.0, 0.0}, {0.0, 1.0}};
    CaptionLossGrads g;
    auto l = caption_loss(logits, {4, kPadId}, w, 1.0, &g, 0.5);
    // one step: CE = -log softmax([0,0,0,0,1])[4]
    EXPECT_NEAR(l.cross_entropy, std::log(4.0 + std::exp(1.0)) - 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(l.regularizer, 1.0);
    for (double v : g.dlogits[1]) EXPECT_EQ(v, 0.0);
    for (double v : g.dweights[1]) EXPECT_EQ(v, 0.0);
    EXPECT_NEAR(g.dweights[0][1], -2.0 * 0.5, 1e-15);
    double s = 0;
    for (double v : g.dlogits[0]) s += v;
    EXPECT_NEAR(s, 0.0, 1e-15);
}

TEST(Loss, ShapeMismatchRejected) {
    EXPECT_THROW(caption_loss({{0.0, 1.0}}, {}, {{1.0}}, 1.0), Error);
    EXPECT_THROW(caption_loss({{0.0, 1.0}}, {1}, {}, 1.0), Error);
}

TEST(Decoder, UnrollLossMatchesStepwiseReference) {
    Rng r(55);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 5 + r.below(6), d = 1 + r.below(5), h = 2 + r.below(6);
        auto dec = oracle::random_decoder(k, d, h, r, 1.0);
        auto g = oracle::random_grid(1 + r.below(3), 1 + r.below(3), d, r);
        std::vector<TokenId> seq{kStartId};
        for (std::size_t i = 0, n = 1 + r.below(6); i < n; ++i)
            seq.push_back(static_cast<TokenId>(kFirstCharId + r.below(k - kFirstCharId)));
        seq.push_back(kEndId);
        const double lambda = r.uniform(0.0, 2.0);
        Rng dr(0);
        auto u = dec.teacher_forced_unroll(g, TokenSequence{seq, true}, dr, false);
        auto got = caption_loss(u.logits, u.targets, u.weights, lambda);
        auto want = oracle::reference_caption_loss(dec, g, seq, lambda);
        ASSERT_NEAR(got.cross_entropy, want.cross_entropy, 1e-10);
        ASSERT_NEAR(got.regularizer, want.regularizer, 1e-10);
        ASSERT_EQ(u.weights.size(), seq.size() - 1);
    }
}

TEST(Decoder, ForgetBiasAndBoundedTargets) {
    DecoderConfig cfg;
    cfg.vocab_size = 7;
    cfg.channels = 3;
    cfg.hidden = 4;
    Decoder dec(cfg);
    Rng r(1);
    dec.init(r);
    for (double b : dec.lstm().bias[kForgetGate].value.values()) EXPECT_EQ(b, 1.0);
    for (double b : dec.lstm().bias[kInputGate].value.values()) EXPECT_EQ(b, 0.0);
    auto g = oracle::random_grid(2, 2, 3, r);
    EXPECT_THROW(dec.teacher_forced_unroll(g, TokenSequence{{kStartId, 4}, false}, r, false), Error);
    EXPECT_THROW(dec.teacher_forced_unroll(g, TokenSequence{{kStartId}, true}, r, false), Error);
}

TEST(Encoder, DeskScaleGeometry) {
    EncoderConfig cfg;
    EXPECT_EQ(cfg.grid_size(), 8u);
    EXPECT_EQ(cfg.annotation_channels(), 128u);
    Encoder enc(cfg);
    Rng r(2);
    enc.init(r);
    Tensor x({2, 3, 64, 64});
    for (auto& v : x.data()) v = r.normal();
    auto grids = enc.forward(x);
    ASSERT_EQ(grids.size(), 2u);
    EXPECT_EQ(grids[0].positions(), 64u);
    EXPECT_EQ(grids[0].channels(), 128u);
    EXPECT_EQ(grids[0].grid_h, 8u);
    for (double v : grids[1].features.values()) ASSERT_GE(v, 0.0); // ReLU output
}

TEST(Encoder, BatchedForwardMatchesSingle) {
    EncoderConfig cfg;
    cfg.channels = {4, 6};
    cfg.image_size = 8;
    Encoder enc(cfg);
    Rng r(6);
    enc.init(r);
    Tensor x({3, 3, 8, 8});
    for (auto& v : x.data()) v = r.normal();
    auto all = enc.forward(x);
    for (std::size_t n = 0; n < 3; ++n) {
        Tensor one({1, 3, 8, 8});
        std::copy_n(x.ptr() + n * 192, 192, one.ptr());
        auto single = enc.forward(one);
        for (std::size_t i = 0; i < single[0].features.size(); ++i)
            ASSERT_NEAR(single[0].features[i], all[n].features[i], 1e-12);
    }
}

TEST(CaptionModel, SaveLoadRoundTrip) {
    Config cfg;
    cfg.encoder_channels = {4, 8};
    cfg.image_size = 16;
    cfg.resize_size = 18;
    cfg.hidden = 8;
    auto vocab = Vocabulary::build({"異常なし", "右上肺野結節影"});
    Rng r(12);
    auto m = CaptionModel::create(cfg, vocab, 9, r);
    const auto dir = std::filesystem::temp_directory_path() / "karte_unit_model";
    std::filesystem::create_directories(dir);
    m.save(dir / "m.kcpt");
    auto back = CaptionModel::load(dir / "m.kcpt");
    EXPECT_EQ(back.vocab, vocab);
    EXPECT_EQ(back.max_len, 9u);
    EXPECT_EQ(back.config.hidden, 8u);
    auto a = m.saved_parameters(), b = back.saved_parameters();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a[i]->name, b[i]->name);
        for (std::size_t j = 0; j < a[i]->size(); ++j)
            ASSERT_EQ(static_cast<float>(a[i]->value[j]), b[i]->value[j]);
    }
    // a second save of the loaded model reproduces the file bytes
    back.save(dir / "m2.kcpt");
    auto read = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(read(dir / "m.kcpt"), read(dir / "m2.kcpt"));
}
