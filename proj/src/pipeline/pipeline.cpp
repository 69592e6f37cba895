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

#include "pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "../error.hpp"
#include "../text/utf8.hpp"

namespace karte {

Rng stream_rng(std::uint64_t seed, Stream s) { return Rng(seed).derive(static_cast<std::uint64_t>(s)); }

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

} // namespace

SynthResult run_synth(std::size_t count, const std::filesystem::path& out_dir, const Config& cfg) {
    if (count == 0) fail(ErrorCode::InvalidArgument, "synth-data: --n must be positive");
    SynthConfig sc;
    sc.count = count;
    sc.image_size = cfg.image_size;
    Rng rng = stream_rng(cfg.seed, Stream::Synth);
    return generate_synthetic_corpus(sc, rng, out_dir);
}

PreparedData prepare_data(const std::filesystem::path& manifest, const Config& cfg) {
    cfg.validate();
    PreparedData d;
    auto samples = load_manifest(manifest, cfg.normal);
    auto rules = cfg.exclusions.empty() ? default_exclusion_rules() : load_exclusion_rules(cfg.exclusions);
    ExclusionResult ex = apply_exclusions(samples, rules);
    d.retained = threshold_filter(ex.kept, cfg.threshold);
    Rng rng = stream_rng(cfg.seed, Stream::Split);
    d.split = split_dataset(d.retained, {0.8, 0.1, 0.1}, rng);
    d.split.threshold = cfg.threshold;
    if (d.split.train.empty()) fail(ErrorCode::InvalidArgument, "no training samples after filtering");

    std::vector<std::string> corpus;
    std::size_t longest = 0;
    for (const auto& s : d.split.train) {
        corpus.push_back(s.finding);
        longest = std::max(longest, utf8::length(s.finding));
    }
    d.vocab = Vocabulary::build(corpus);
    d.max_len = cfg.max_len > 0 ? cfg.max_len : 2 * longest + 2;

    const auto hist = finding_histogram(d.retained);
    std::size_t normals = 0;
    for (const auto& s : d.retained) normals += s.is_normal;
    std::ostringstream os;
    os << "samples_loaded: " << samples.size() << "\n";
    for (std::size_t r = 0; r < rules.size(); ++r)
        os << "excluded[" << (rules[r].prefix ? "prefix " : "exact ") << rules[r].text << "]: " << ex.removed_per_rule[r]
           << "\n";
    os << "threshold: " << cfg.threshold << "\n";
    os << "samples_retained: " << d.retained.size() << "\n";
    os << "distinct_findings: " << hist.size() << "\n";
    os << "normal_samples: " << normals << "\n";
    os << "abnormal_samples: " << d.retained.size() - normals << "\n";
    os << "split_train: " << d.split.train.size() << "\n";
    os << "split_validation: " << d.split.validation.size() << "\n";
    os << "split_test: " << d.split.test.size() << "\n";
    os << "characters: " << d.vocab.char_count() << "\n";
    os << "vocabulary_size: " << d.vocab.size() << "\n";
    os << "max_len: " << d.max_len << "\n";
    d.summary = os.str();
    return d;
}

TrainOutcome run_train(const std::filesystem::path& manifest, const std::filesystem::path& out_dir, const Config& cfg,
                       const std::filesystem::path& pretrained, const LogSink& log) {
    TrainOutcome o;
    o.data = prepare_data(manifest, cfg);
    if (log) log(o.data.summary);
    std::filesystem::create_directories(out_dir);
    write_manifest(out_dir / "train.tsv", o.data.split.train);
    write_manifest(out_dir / "validation.tsv", o.data.split.validation);
    write_manifest(out_dir / "test.tsv", o.data.split.test);
    write_text(out_dir / "vocab.txt", o.data.vocab.to_text());
    write_text(out_dir / "config.txt", dump_config(cfg));
    write_text(out_dir / "dataset.txt", o.data.summary);

    Rng init = stream_rng(cfg.seed, Stream::Init);
    CaptionModel model = CaptionModel::create(cfg, o.data.vocab, o.data.max_len, init);
    if (!pretrained.empty()) load_encoder_weights(pretrained, model.encoder);
    // Tiny corpora can leave the validation split empty; fall back to train.
    const auto& validation = o.data.split.validation.empty() ? o.data.split.train : o.data.split.validation;
    Rng rng = stream_rng(cfg.seed, Stream::Train);
    o.result = train_captioner(model, o.data.split.train, validation, out_dir, rng, log);
    return o;
}

PretrainResult run_pretrain(const std::filesystem::path& manifest, const std::filesystem::path& out,
                            const Config& cfg, const LogSink& log) {
    cfg.validate();
    auto samples = load_manifest(manifest, cfg.normal);
    Encoder encoder(encoder_config(cfg));
    Rng init = stream_rng(cfg.seed, Stream::Init);
    encoder.init(init);
    Rng rng = stream_rng(cfg.seed, Stream::Pretrain);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    return pretrain_encoder(encoder, samples, cfg, rng, out, log);
}

Prediction run_predict(const std::filesystem::path& image, const std::filesystem::path& checkpoint, std::size_t beam) {
    CaptionModel model = CaptionModel::load(checkpoint);
    return predict_image(model, image, beam ? beam : model.config.beam);
}

EvalReport run_evaluate(const std::filesystem::path& manifest, const std::filesystem::path& checkpoint,
                        std::size_t beam, bool abnormal_only, const std::filesystem::path& trace_dir) {
    CaptionModel model = CaptionModel::load(checkpoint);
    auto samples = load_manifest(manifest, model.config.normal);
    if (abnormal_only)
        std::erase_if(samples, [](const Sample& s) { return s.is_normal; });
    if (samples.empty()) fail(ErrorCode::InvalidArgument, "evaluate: no samples to evaluate");
    return evaluate_split(model, samples, beam ? beam : model.config.beam, trace_dir);
}

HeatmapArtifact run_visualize(const std::filesystem::path& trace, const std::filesystem::path& image,
                              const std::filesystem::path& out_dir) {
    return render_heatmaps(read_trace(trace), image, out_dir);
}

} // namespace karte
