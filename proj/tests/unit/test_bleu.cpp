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

#include <cmath>

#include "../support/oracles.hpp"
#include "error.hpp"
#include "eval/bleu.hpp"

using namespace karte;

namespace {

std::string random_text(Rng& r, std::size_t max_len) {
    static const std::u32string pool = U"abc肺野影";
    std::u32string s;
    for (std::size_t i = 0, n = r.below(max_len + 1); i < n; ++i) s.push_back(pool[r.below(pool.size())]);
    return utf8::encode(s);
}

} // namespace

TEST(Bleu, HandCase) {
    // p1 = 3/4, p2 = 2/3, p3 = 1/2, equal lengths
    auto b = corpus_bleu({{"abcd", "abce"}}, 3);
    EXPECT_NEAR(b.bleu[2], 0.6300, 1e-4);
    EXPECT_NEAR(b.bleu[0], 0.75, 1e-15);
    EXPECT_EQ(b.brevity_penalty, 1.0);
}

TEST(Bleu, BrevityPenaltyAndSmoothing) {
    auto b = corpus_bleu({{"ab", "abcd"}}, 4);
    EXPECT_NEAR(b.brevity_penalty, std::exp(1.0 - 2.0), 1e-15);
    EXPECT_FALSE(b.smoothed[1]);
    EXPECT_TRUE(b.smoothed[2]); // no trigram at all
    EXPECT_DOUBLE_EQ(b.precision[2], 0.5);
    EXPECT_DOUBLE_EQ(b.precision[3], 0.5);
    auto z = corpus_bleu({{"xy", "ab"}}, 2);
    EXPECT_TRUE(z.smoothed[0]);
    EXPECT_DOUBLE_EQ(z.precision[0], 0.25);
}

TEST(Bleu, EmptyHypothesisScoresZero) {
    auto b = corpus_bleu({{"", "abc"}}, 4);
    EXPECT_EQ(b.brevity_penalty, 0.0);
    for (double v : b.bleu) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(corpus_bleu({}, 4), Error);
    EXPECT_THROW(corpus_bleu({{"a", "a"}}, 5), Error);
}

TEST(Bleu, IdentityIsOne) {
    auto b = corpus_bleu({{"右上肺野結節影", "右上肺野結節影"}, {"異常なし", "異常なし"}});
    for (double v : b.bleu) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Bleu, MatchesBruteForceCounter) {
    Rng r(77);
    std::vector<TextPair> corpus;
    std::array<std::size_t, 4> m{}, t{};
    for (int i = 0; i < 1000; ++i) {
        TextPair p{random_text(r, 9), random_text(r, 9)};
        auto single = corpus_bleu({p}, 4);
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto want = oracle::brute_ngrams(p.first, p.second, n);
            ASSERT_EQ(single.matches[n - 1], want.matches) << p.first << " / " << p.second << " n=" << n;
            ASSERT_EQ(single.totals[n - 1], want.total);
            m[n - 1] += want.matches;
            t[n - 1] += want.total;
        }
        corpus.push_back(std::move(p));
    }
    auto all = corpus_bleu(corpus, 4);
    for (std::size_t n = 0; n < 4; ++n) {
        EXPECT_EQ(all.matches[n], m[n]);
        EXPECT_EQ(all.totals[n], t[n]);
        EXPECT_EQ(all.precision[n], static_cast<double>(m[n]) / static_cast<double>(t[n]));
    }
}

TEST(Bleu, ExactMatchAndDistinct) {
    std::vector<TextPair> p{{"異常なし", "異常なし"}, {"右", "異常なし"}, {"異常なし", "左"}};
    EXPECT_DOUBLE_EQ(exact_match_normal(p, "異常なし"), 0.5);
    EXPECT_EQ(distinct_count({"a", "b", "a"}), 2u);
}
