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
#include <string>
#include <utility>
#include <vector>

#include "../config/config.hpp"
#include "../data/synth.hpp"
#include "../eval/evaluate.hpp"
#include "../infer/decode.hpp"
#include "../numerics/gradcheck.hpp"
#include "../trace/trace.hpp"
#include "../train/trainer.hpp"

namespace karte {

// Independent random streams derived from the run seed.
enum class Stream : std::uint64_t { Synth = 1, Split = 2, Init = 3, Train = 4, Pretrain = 5 };
Rng stream_rng(std::uint64_t seed, Stream s);

SynthResult run_synth(std::size_t count, const std::filesystem::path& out_dir, const Config& cfg);

struct PreparedData {
    std::vector<Sample> retained; // after exclusions and the threshold
    DatasetSplit split;
    Vocabulary vocab;
    std::size_t max_len = 0;
    std::string summary;
};

// Manifest -> exclusions -> threshold -> 80/10/10 split -> vocabulary.
PreparedData prepare_data(const std::filesystem::path& manifest, const Config& cfg);

struct TrainOutcome {
    PreparedData data;
    TrainResult result;
};

// Writes train/validation/test manifests, vocab.txt, config.txt and the
// training artefacts into out_dir. `pretrained` may be empty.
TrainOutcome run_train(const std::filesystem::path& manifest, const std::filesystem::path& out_dir, const Config& cfg,
                       const std::filesystem::path& pretrained, const LogSink& log = {});

PretrainResult run_pretrain(const std::filesystem::path& manifest, const std::filesystem::path& out,
                            const Config& cfg, const LogSink& log = {});

// beam 0 uses the model's configured beam.
Prediction run_predict(const std::filesystem::path& image, const std::filesystem::path& checkpoint, std::size_t beam);

EvalReport run_evaluate(const std::filesystem::path& manifest, const std::filesystem::path& checkpoint,
                        std::size_t beam, bool abnormal_only, const std::filesystem::path& trace_dir = {});

HeatmapArtifact run_visualize(const std::filesystem::path& trace, const std::filesystem::path& image,
                              const std::filesystem::path& out_dir);

struct GradcheckSuite {
    std::vector<std::pair<std::string, GradCheckReport>> checks;
    double tolerance = 1e-4;

    double max_rel_error() const;
    bool passed() const { return max_rel_error() < tolerance; }
    std::string to_text() const;
};

// Central-difference checks of every layer and of the full
// image -> encoder -> attention -> decoder -> caption loss composition.
// The step balances round-off on ~zero gradients against the chance of a
// ReLU or max-pool decision flipping inside +-eps.
inline constexpr double kGradcheckEps = 3e-5;
GradcheckSuite run_gradcheck(std::uint64_t seed, double tolerance = 1e-4, double eps = kGradcheckEps);

} // namespace karte
