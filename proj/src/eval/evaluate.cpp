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

#include "evaluate.hpp"

#include <cstdio>

#include "../error.hpp"
#include "../infer/decode.hpp"
#include "../trace/trace.hpp"

namespace karte {

EvalReport evaluate_split(const CaptionModel& model, const std::vector<Sample>& samples, std::size_t beam,
                          const std::filesystem::path& trace_dir) {
    if (samples.empty()) fail(ErrorCode::InvalidArgument, "evaluate: no samples");
    if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);
    EvalReport r;
    r.count = samples.size();
    ImageCache cache;
    std::vector<TextPair> all, abnormal;
    std::vector<std::string> generated, references;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        Prediction p = predict_image(model, cache.get(s.resolved_path), beam);
        if (!trace_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "%05zu.trace", i);
            write_trace(p.trace, trace_dir / name);
        }
        r.predictions.push_back({s.image_path, s.finding, p.finding, p.log_prob});
        all.emplace_back(p.finding, s.finding);
        generated.push_back(p.finding);
        references.push_back(s.finding);
        if (s.finding != model.config.normal) abnormal.emplace_back(p.finding, s.finding);
    }
    r.all = corpus_bleu(all, 4);
    r.abnormal_count = abnormal.size();
    if (!abnormal.empty()) r.abnormal = corpus_bleu(abnormal, 4);
    r.normal_count = all.size() - abnormal.size();
    if (r.normal_count > 0) r.exact_match_normal = exact_match_normal(all, model.config.normal);
    r.distinct_findings = distinct_count(generated);
    r.distinct_references = distinct_count(references);
    return r;
}

namespace {

std::vector<std::pair<std::string, std::string>> report_fields(const EvalReport& r) {
    std::vector<std::pair<std::string, std::string>> out;
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    auto flags = [](const BleuReport& b) {
        std::string s;
        for (std::size_t n = 0; n < b.max_n; ++n) s += b.smoothed[n] ? '1' : '0';
        return s;
    };
    auto bleu = [&](const std::string& prefix, const BleuReport& b) {
        for (std::size_t n = 1; n <= 4; ++n) out.emplace_back(prefix + "bleu" + std::to_string(n), num(b.bleu[n - 1]));
        for (std::size_t n = 1; n <= 4; ++n)
            out.emplace_back(prefix + "precision" + std::to_string(n),
                             std::to_string(b.matches[n - 1]) + "/" + std::to_string(b.totals[n - 1]));
        out.emplace_back(prefix + "smoothed", flags(b));
        out.emplace_back(prefix + "brevity_penalty", num(b.brevity_penalty));
        out.emplace_back(prefix + "hypothesis_chars", std::to_string(b.hypothesis_length));
        out.emplace_back(prefix + "reference_chars", std::to_string(b.reference_length));
    };
    out.emplace_back("samples", std::to_string(r.count));
    bleu("all.", r.all);
    out.emplace_back("abnormal.samples", std::to_string(r.abnormal_count));
    if (r.abnormal)
        bleu("abnormal.", *r.abnormal);
    else
        out.emplace_back("abnormal.status", "empty");
    out.emplace_back("normal.samples", std::to_string(r.normal_count));
    out.emplace_back("normal.exact_match", r.exact_match_normal ? num(*r.exact_match_normal) : "n/a");
    out.emplace_back("distinct_findings", std::to_string(r.distinct_findings));
    out.emplace_back("distinct_references", std::to_string(r.distinct_references));
    return out;
}

} // namespace

std::string format_eval_report(const EvalReport& report) {
    std::string out;
    for (const auto& [k, v] : report_fields(report)) out += k + ": " + v + "\n";
    return out;
}

std::string format_eval_tsv(const EvalReport& report) {
    std::string out = "key\tvalue\n";
    for (const auto& [k, v] : report_fields(report)) out += k + "\t" + v + "\n";
    return out;
}

std::string format_predictions(const std::vector<PredictionRow>& rows) {
    std::string out;
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.10g", r.log_prob);
        out += r.image_path + "\t" + r.finding + "\t" + buf + "\n";
    }
    return out;
}

} // namespace karte
