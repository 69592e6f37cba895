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

#include "error.hpp"
#include "numerics/rng.hpp"
#include "text/charvocab.hpp"
#include "text/utf8.hpp"

using namespace karte;

namespace {

// Random text over ASCII, kana, kanji, punctuation and the characters the
// vocabulary file has to escape.
std::string random_text(Rng& r, std::size_t max_len) {
    static const std::u32string pool = U"ab\\\n\r\t 異常なし両肺野結節影索状影輪状影左右上下、。𠮷é";
    std::u32string s;
    for (std::size_t i = 0, n = r.below(max_len + 1); i < n; ++i) s.push_back(pool[r.below(pool.size())]);
    return utf8::encode(s);
}

} // namespace

TEST(Utf8, RoundTripAndLength) {
    const std::string s = "異常なし𠮷a";
    EXPECT_EQ(utf8::length(s), 6u);
    EXPECT_EQ(utf8::encode(utf8::decode(s)), s);
}

TEST(Utf8, MalformedBecomesReplacement) {
    const auto d = utf8::decode(std::string("a\xff" "b\xe3\x81", 5));
    // one replacement per offending byte
    EXPECT_EQ(d, (std::u32string{U'a', 0xFFFD, U'b', 0xFFFD, 0xFFFD}));
}

TEST(Vocabulary, SpecialsAndFirstOccurrenceOrder) {
    auto v = Vocabulary::build({"異常なし", "両肺異常"});
    EXPECT_EQ(v.size(), 4u + 6u);
    EXPECT_EQ(*v.id_of(U'異'), kFirstCharId);
    EXPECT_EQ(*v.id_of(U'し'), kFirstCharId + 3);
    EXPECT_EQ(*v.id_of(U'両'), kFirstCharId + 4);
    EXPECT_FALSE(v.id_of(U'x').has_value());
    EXPECT_STREQ(Vocabulary::special_name(kPadId), "<pad>");
    EXPECT_STREQ(Vocabulary::special_name(kEndId), "<end>");
}

TEST(Vocabulary, EncodeBoundsAndUnknowns) {
    auto v = Vocabulary::build({"abc"});
    std::size_t unknown = 0;
    auto seq = encode("axb", v, true, &unknown);
    EXPECT_EQ(seq.ids, (std::vector<TokenId>{kStartId, 4, kUnkId, 5, kEndId}));
    EXPECT_EQ(unknown, 1u);
    EXPECT_EQ(seq.content_length(), 3u);
    EXPECT_EQ(decode(seq, v), "ab");
}

TEST(Vocabulary, DecodeStopsAtEndAndRejectsOutOfRange) {
    auto v = Vocabulary::build({"ab"});
    EXPECT_EQ(decode(std::vector<TokenId>{kStartId, 4, kEndId, 5}, v), "a");
    EXPECT_THROW(decode(std::vector<TokenId>{static_cast<TokenId>(v.size())}, v), Error);
}

TEST(Vocabulary, RandomRoundTrips) {
    Rng r(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> corpus;
        for (int i = 0; i < 5; ++i) corpus.push_back(random_text(r, 12));
        corpus.push_back("x"); // never empty overall
        const auto v = Vocabulary::build(corpus);
        for (const auto& s : corpus) {
            ASSERT_EQ(decode(encode(s, v, true), v), s);
            ASSERT_EQ(decode(encode(s, v, false), v), s);
        }
        const auto text = v.to_text();
        const auto back = Vocabulary::from_text(text);
        ASSERT_EQ(back, v);
        ASSERT_EQ(back.to_text(), text);
    }
}

TEST(Vocabulary, MalformedFileRejected) {
    EXPECT_THROW(Vocabulary::from_text("<pad>\n<start>\n"), Error);
    EXPECT_THROW(Vocabulary::from_text("<pad>\n<start>\n<end>\n<unk>\na\na\n"), Error);
}
