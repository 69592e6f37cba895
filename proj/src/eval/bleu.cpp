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

#include "bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "../error.hpp"
#include "../text/utf8.hpp"

namespace karte {
namespace {

using NgramCounts = std::map<std::u32string, std::size_t>;

NgramCounts ngrams(const std::u32string& s, std::size_t n) {
    NgramCounts out;
    for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[s.substr(i, n)];
    return out;
}

} // namespace

BleuReport corpus_bleu(const std::vector<TextPair>& pairs, std::size_t max_n) {
    if (pairs.empty()) fail(ErrorCode::InvalidArgument, "corpus_bleu: no pairs");
    if (max_n < 1 || max_n > kMaxBleuOrder) fail(ErrorCode::InvalidArgument, "corpus_bleu: max_n must be in 1..4");
    BleuReport r;
    r.max_n = max_n;
    for (const auto& [hyp_text, ref_text] : pairs) {
        const auto hyp = utf8::decode(hyp_text);
        const auto ref = utf8::decode(ref_text);
        r.hypothesis_length += hyp.size();
        r.reference_length += ref.size();
        for (std::size_t n = 1; n <= max_n; ++n) {
            const auto h = ngrams(hyp, n);
            const auto g = ngrams(ref, n);
            for (const auto& [gram, count] : h) {
                r.totals[n - 1] += count;
                auto it = g.find(gram);
                if (it != g.end()) r.matches[n - 1] += std::min(count, it->second);
            }
        }
    }
    if (r.hypothesis_length == 0) {
        r.brevity_penalty = 0.0;
        return r;
    }
    if (r.hypothesis_length < r.reference_length)
        r.brevity_penalty =
            std::exp(1.0 - static_cast<double>(r.reference_length) / static_cast<double>(r.hypothesis_length));
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= max_n; ++n) {
        const std::size_t m = r.matches[n - 1], t = r.totals[n - 1];
        if (m == 0) {
            r.smoothed[n - 1] = true;
            r.precision[n - 1] = 1.0 / (2.0 * static_cast<double>(std::max<std::size_t>(t, 1)));
        } else {
            r.precision[n - 1] = static_cast<double>(m) / static_cast<double>(t);
        }
        log_sum += std::log(r.precision[n - 1]);
        r.bleu[n - 1] = r.brevity_penalty * std::exp(log_sum / static_cast<double>(n));
    }
    return r;
}

double exact_match_normal(const std::vector<TextPair>& pairs, const std::string& normal) {
    std::size_t refs = 0, hits = 0;
    for (const auto& [hyp, ref] : pairs) {
        if (ref != normal) continue;
        ++refs;
        if (hyp == normal) ++hits;
    }
    if (refs == 0) fail(ErrorCode::InvalidArgument, "exact_match_normal: no reference equals the normal finding");
    return static_cast<double>(hits) / static_cast<double>(refs);
}

std::size_t distinct_count(const std::vector<std::string>& items) {
    return std::set<std::string>(items.begin(), items.end()).size();
}

} // namespace karte
