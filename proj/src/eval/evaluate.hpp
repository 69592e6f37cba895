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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "../data/corpus.hpp"
#include "../model/caption_model.hpp"
#include "bleu.hpp"

namespace karte {

struct PredictionRow {
    std::string image_path;
    std::string reference;
    std::string finding;
    double log_prob = 0.0;
};

struct EvalReport {
    std::size_t count = 0;
    BleuReport all;
    std::size_t abnormal_count = 0;
    std::optional<BleuReport> abnormal; // empty when no abnormal reference
    std::size_t normal_count = 0;
    std::optional<double> exact_match_normal;
    std::size_t distinct_findings = 0;
    std::size_t distinct_references = 0;
    std::vector<PredictionRow> predictions;
};

// Beam-search predictions for every sample, then BLEU-1..4 on all pairs and
// on the abnormal-reference pairs, exact-match accuracy on the normal
// finding and the number of distinct generated findings. With trace_dir,
// one trace per sample is written as <index>.trace.
EvalReport evaluate_split(const CaptionModel& model, const std::vector<Sample>& samples, std::size_t beam,
                          const std::filesystem::path& trace_dir = {});

// "key: value" lines in a fixed order.
std::string format_eval_report(const EvalReport& report);
// Same keys, tab-separated.
std::string format_eval_tsv(const EvalReport& report);
// image_path<TAB>generated_finding<TAB>log_prob
std::string format_predictions(const std::vector<PredictionRow>& rows);

} // namespace karte
