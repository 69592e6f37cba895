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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace karte {

using TokenId = std::uint32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kStartId = 1;
inline constexpr TokenId kEndId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kFirstCharId = 4;

struct TokenSequence {
    std::vector<TokenId> ids;
    bool bounded = false;

    // Number of character positions, excluding <start>/<end>.
    std::size_t content_length() const;
};

// Bijection between Unicode scalar values and token ids, after the four
// fixed specials. Immutable once built.
class Vocabulary {
public:
    // Ids are handed out in first-occurrence order over the corpus.
    static Vocabulary build(const std::vector<std::string>& corpus);

    // Vocabulary file: four special header lines, then one character per
    // line; the zero-based line number is the id. '\n', '\r' and '\\' are
    // written as the escapes \n, \r and \\.
    static Vocabulary from_text(std::string_view text);
    std::string to_text() const;

    std::size_t size() const noexcept { return kFirstCharId + chars_.size(); }
    std::size_t char_count() const noexcept { return chars_.size(); }

    std::optional<TokenId> id_of(char32_t cp) const;
    char32_t char_of(TokenId id) const;
    static bool is_special(TokenId id) noexcept { return id < kFirstCharId; }
    static const char* special_name(TokenId id) noexcept;

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.chars_ == b.chars_; }

private:
    void add(char32_t cp);

    std::vector<char32_t> chars_;
    std::unordered_map<char32_t, TokenId> ids_;
};

// One token per scalar value; unknown characters become <unk> and are
// counted into *unknown when given.
TokenSequence encode(std::string_view text, const Vocabulary& vocab, bool bounded, std::size_t* unknown = nullptr);

// Specials are dropped; output stops at the first <end>. Ids >= K throw.
std::string decode(const TokenSequence& seq, const Vocabulary& vocab);
std::string decode(const std::vector<TokenId>& ids, const Vocabulary& vocab);

} // namespace karte
