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

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace karte {

inline constexpr std::size_t kMaxBleuOrder = 4;

using TextPair = std::pair<std::string, std::string>; // (hypothesis, reference)

// Corpus-level BLEU over Unicode scalar values, one reference per
// hypothesis. Entries above max_n are left at zero.
struct BleuReport {
    std::size_t max_n = 0;
    std::array<double, kMaxBleuOrder> bleu{};      // BLEU-1..n
    std::array<double, kMaxBleuOrder> precision{}; // modified precision as used (smoothed when flagged)
    std::array<std::size_t, kMaxBleuOrder> matches{};
    std::array<std::size_t, kMaxBleuOrder> totals{}; // hypothesis n-gram count
    std::array<bool, kMaxBleuOrder> smoothed{};
    double brevity_penalty = 1.0;
    std::size_t hypothesis_length = 0;
    std::size_t reference_length = 0;
};

// Zero matches at order n are replaced by 1 / (2 * max(total_n, 1)) and
// flagged. An empty hypothesis side scores 0 with brevity penalty 0.
BleuReport corpus_bleu(const std::vector<TextPair>& pairs, std::size_t max_n = 4);

// Among pairs whose reference equals `normal`, the share whose hypothesis
// equals it too.
double exact_match_normal(const std::vector<TextPair>& pairs, const std::string& normal);

std::size_t distinct_count(const std::vector<std::string>& items);

} // namespace karte
