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

#include "charvocab.hpp"

#include <sstream>

#include "../error.hpp"
#include "utf8.hpp"

namespace karte {

namespace {

constexpr const char* kSpecialNames[4] = {"<pad>", "<start>", "<end>", "<unk>"};

std::string escape_char(char32_t cp) {
    switch (cp) {
        case U'\n': return "\\n";
        case U'\r': return "\\r";
        case U'\\': return "\\\\";
        default: return utf8::encode(cp);
    }
}

} // namespace

std::size_t TokenSequence::content_length() const {
    if (!bounded) return ids.size();
    return ids.size() >= 2 ? ids.size() - 2 : 0;
}

const char* Vocabulary::special_name(TokenId id) noexcept { return id < 4 ? kSpecialNames[id] : ""; }

void Vocabulary::add(char32_t cp) {
    if (ids_.contains(cp)) return;
    ids_.emplace(cp, static_cast<TokenId>(kFirstCharId + chars_.size()));
    chars_.push_back(cp);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus) {
    if (corpus.empty()) fail(ErrorCode::InvalidArgument, "build_vocab: empty corpus");
    Vocabulary v;
    for (const auto& text : corpus)
        for (char32_t cp : utf8::decode(text)) v.add(cp);
    return v;
}

std::optional<TokenId> Vocabulary::id_of(char32_t cp) const {
    auto it = ids_.find(cp);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

char32_t Vocabulary::char_of(TokenId id) const {
    if (id < kFirstCharId || id >= size())
        fail(ErrorCode::InvalidArgument, "token id " + std::to_string(id) + " is not a character id (K=" +
                                             std::to_string(size()) + ")");
    return chars_[id - kFirstCharId];
}

std::string Vocabulary::to_text() const {
    std::string out;
    for (const char* name : kSpecialNames) {
        out += name;
        out += '\n';
    }
    for (char32_t cp : chars_) {
        out += escape_char(cp);
        out += '\n';
    }
    return out;
}

Vocabulary Vocabulary::from_text(std::string_view text) {
    Vocabulary v;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line_no < 4) {
            if (line != kSpecialNames[line_no])
                fail(ErrorCode::Format, "vocabulary line " + std::to_string(line_no + 1) + ": expected " +
                                            kSpecialNames[line_no]);
        } else {
            char32_t cp;
            if (line == "\\n") cp = U'\n';
            else if (line == "\\r") cp = U'\r';
            else if (line == "\\\\") cp = U'\\';
            else {
                const auto decoded = utf8::decode(line);
                if (decoded.size() != 1)
                    fail(ErrorCode::Format, "vocabulary line " + std::to_string(line_no + 1) +
                                                ": expected exactly one character");
                cp = decoded[0];
            }
            if (v.ids_.contains(cp))
                fail(ErrorCode::Format, "vocabulary line " + std::to_string(line_no + 1) + ": duplicate character");
            v.add(cp);
        }
        ++line_no;
    }
    if (line_no < 4) fail(ErrorCode::Format, "vocabulary: missing special header");
    return v;
}

TokenSequence encode(std::string_view text, const Vocabulary& vocab, bool bounded, std::size_t* unknown) {
    TokenSequence seq{{}, bounded};
    const auto cps = utf8::decode(text);
    seq.ids.reserve(cps.size() + 2);
    if (bounded) seq.ids.push_back(kStartId);
    for (char32_t cp : cps) {
        if (auto id = vocab.id_of(cp)) {
            seq.ids.push_back(*id);
        } else {
            seq.ids.push_back(kUnkId);
            if (unknown) ++*unknown;
        }
    }
    if (bounded) seq.ids.push_back(kEndId);
    return seq;
}

std::string decode(const std::vector<TokenId>& ids, const Vocabulary& vocab) {
    std::string out;
    for (TokenId id : ids) {
        if (id >= vocab.size())
            fail(ErrorCode::InvalidArgument, "decode: token id " + std::to_string(id) + " >= K=" +
                                                 std::to_string(vocab.size()));
        if (id == kEndId) break;
        if (Vocabulary::is_special(id)) continue;
        out += utf8::encode(vocab.char_of(id));
    }
    return out;
}

std::string decode(const TokenSequence& seq, const Vocabulary& vocab) { return decode(seq.ids, vocab); }

} // namespace karte
