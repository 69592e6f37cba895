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

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "karte/karte.h"

namespace {

constexpr const char* kFormats = R"(File formats:
  manifest     UTF-8 TSV "image_path<TAB>finding[<TAB>class_label]"; relative
               image paths resolve against the manifest's directory; several
               findings for one image may be joined with '|'; '#' comments.
  images       8-bit grayscale PNG, or PGM (P5/P2, maxval 255).
  config       "key=value" lines, '#' comments; unknown keys are rejected.
  checkpoint   binary KCPT: named float32 tensors plus config/vocabulary metadata.
  trace        "karte-trace 1" header, steps/positions/grid/tokens lines, then
               one tab-separated row of attention weights per generated token.
  predictions  TSV "image_path<TAB>generated_finding<TAB>log_prob".)";

struct Failure {
    karte_status status;
    std::string message;
};

void check(karte_status s) {
    if (s != KARTE_OK) throw Failure{s, karte_last_error()};
}

struct CString {
    char* p = nullptr;
    ~CString() { karte_free_string(p); }
    std::string str() const { return p ? p : ""; }
};

using ConfigPtr = std::unique_ptr<karte_config, decltype(&karte_config_free)>;
using ModelPtr = std::unique_ptr<karte_model, decltype(&karte_model_free)>;
using TracePtr = std::unique_ptr<karte_trace, decltype(&karte_trace_free)>;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::string config_file;
    std::vector<std::string> settings;
    bool paper_scale = false;
};

std::string one_line(std::string s) {
    for (auto& c : s)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

void log_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

ConfigPtr make_config(const GlobalOptions& g) {
    karte_config* raw = nullptr;
    check(g.paper_scale ? karte_config_new_paper_scale(&raw) : karte_config_new(&raw));
    ConfigPtr cfg(raw, karte_config_free);
    if (!g.config_file.empty()) check(karte_config_load_file(cfg.get(), g.config_file.c_str()));
    for (const auto& kv : g.settings) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Failure{KARTE_ERR_INVALID_ARGUMENT, "--set expects key=value, got " + kv};
        check(karte_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    std::optional<std::uint64_t> seed = g.seed;
    if (!seed) {
        if (const char* env = std::getenv("KARTE_SEED"); env && *env) {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(env, &end, 10);
            if (*end != '\0') throw Failure{KARTE_ERR_INVALID_ARGUMENT, std::string("KARTE_SEED is not an integer: ") + env};
            seed = v;
        }
    }
    if (seed) check(karte_config_set(cfg.get(), "seed", std::to_string(*seed).c_str()));
    return cfg;
}

void log_config(const karte_config* cfg) {
    CString text;
    check(karte_config_dump(cfg, &text.p));
    std::fprintf(stderr, "# resolved config\n");
    std::string body = text.str();
    std::size_t start = 0;
    while (start < body.size()) {
        const auto end = body.find('\n', start);
        std::fprintf(stderr, "#   %s\n", body.substr(start, end - start).c_str());
        start = end == std::string::npos ? body.size() : end + 1;
    }
}

ModelPtr load_model(const std::string& path) {
    karte_model* raw = nullptr;
    check(karte_model_load(path.c_str(), &raw));
    return ModelPtr(raw, karte_model_free);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"karte: character-level finding generation for chest radiographs with soft visual attention"};
    app.footer(kFormats);
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Random seed (falls back to $KARTE_SEED, then the config value 1)");
    app.add_option("--config", g.config_file, "key=value configuration file");
    app.add_option("--set", g.settings, "Override one config key (key=value); repeatable");
    app.add_flag("--paper-scale", g.paper_scale, "Start from the 224px / 14x14x2048 / H=256 geometry");

    // synth-data
    std::size_t synth_n = 0;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth-data", "Generate a synthetic labelled corpus");
    synth->add_option("--n", synth_n, "Number of images")->required();
    synth->add_option("--out", synth_out, "Output directory (images/, manifest.tsv, report.txt)")->required();
    synth->footer(kFormats);

    // pretrain
    std::string pre_manifest, pre_out;
    auto* pretrain = app.add_subcommand("pretrain", "Pre-train the encoder as an image classifier");
    pretrain->add_option("--manifest", pre_manifest, "Manifest with a class_label column")->required();
    pretrain->add_option("--out", pre_out, "Encoder checkpoint to write")->required();
    pretrain->footer(kFormats);

    // train
    std::string train_manifest, train_out = "run", train_pretrained, train_sampling;
    std::optional<std::size_t> train_threshold;
    auto* train = app.add_subcommand("train", "Train the captioning model");
    train->add_option("--manifest", train_manifest, "Training corpus manifest")->required();
    train->add_option("--out", train_out, "Output directory")->capture_default_str();
    train->add_option("--threshold", train_threshold, "Minimum finding frequency (config default 5)");
    train->add_option("--sampling", train_sampling, "Epoch sampling: over | under | natural (config default over)")
        ->check(CLI::IsMember({"over", "under", "natural"}));
    train->add_option("--pretrained", train_pretrained, "Encoder checkpoint from `pretrain`");
    train->add_option("--config", g.config_file, "key=value configuration file");
    train->footer(kFormats);

    // predict
    std::string pred_image, pred_ckpt, pred_trace;
    std::size_t pred_beam = 0;
    auto* predict = app.add_subcommand("predict", "Generate a finding for one image");
    predict->add_option("--image", pred_image, "Input image")->required();
    predict->add_option("--checkpoint", pred_ckpt, "Caption model checkpoint")->required();
    predict->add_option("--beam", pred_beam, "Beam size (0: the model's configured beam, default 3)")
        ->capture_default_str();
    predict->add_option("--trace", pred_trace, "Attention trace output (default <image stem>.trace)");
    predict->footer(kFormats);

    // evaluate
    std::string eval_manifest, eval_ckpt, eval_out;
    std::size_t eval_beam = 0;
    bool eval_abnormal = false;
    auto* evaluate = app.add_subcommand("evaluate", "BLEU-1..4, normal exact match and distinct findings");
    evaluate->add_option("--manifest", eval_manifest, "Test manifest")->required();
    evaluate->add_option("--checkpoint", eval_ckpt, "Caption model checkpoint")->required();
    evaluate->add_flag("--abnormal-only", eval_abnormal, "Drop samples whose finding is the normal finding");
    evaluate->add_option("--beam", eval_beam, "Beam size (0: the model's configured beam)")->capture_default_str();
    evaluate->add_option("--out", eval_out, "Write report.txt, report.tsv, predictions.tsv and traces/ here");
    evaluate->footer(kFormats);

    // visualize
    std::string vis_trace, vis_image, vis_out;
    auto* visualize = app.add_subcommand("visualize", "Render attention heatmaps from a trace");
    visualize->add_option("--trace", vis_trace, "Trace file")->required();
    visualize->add_option("--image", vis_image, "The image the trace was produced from")->required();
    visualize->add_option("--out", vis_out, "Output directory for PNGs")->required();
    visualize->footer(kFormats);

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every layer and the full model");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "karte: usage error: " << one_line(e.what()) << "\n\n";
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    karte_set_log_callback(log_line, nullptr);
    try {
        if (*synth) {
            ConfigPtr cfg = make_config(g);
            log_config(cfg.get());
            CString report;
            check(karte_synth_data(cfg.get(), synth_n, synth_out.c_str(), &report.p));
            std::cout << report.str();
        } else if (*pretrain) {
            ConfigPtr cfg = make_config(g);
            log_config(cfg.get());
            CString summary;
            check(karte_pretrain(cfg.get(), pre_manifest.c_str(), pre_out.c_str(), &summary.p));
            std::cout << summary.str();
        } else if (*train) {
            ConfigPtr cfg = make_config(g);
            if (train_threshold) check(karte_config_set(cfg.get(), "threshold", std::to_string(*train_threshold).c_str()));
            if (!train_sampling.empty()) check(karte_config_set(cfg.get(), "sampling", train_sampling.c_str()));
            log_config(cfg.get());
            CString summary;
            check(karte_train(cfg.get(), train_manifest.c_str(), train_out.c_str(),
                              train_pretrained.empty() ? nullptr : train_pretrained.c_str(), &summary.p));
            std::cout << summary.str();
        } else if (*predict) {
            ModelPtr model = load_model(pred_ckpt);
            CString finding;
            double log_prob = 0.0;
            karte_trace* raw = nullptr;
            check(karte_predict(model.get(), pred_image.c_str(), pred_beam, &finding.p, &log_prob, &raw));
            TracePtr trace(raw, karte_trace_free);
            const std::string trace_path =
                pred_trace.empty() ? std::filesystem::path(pred_image).stem().string() + ".trace" : pred_trace;
            check(karte_trace_write(trace.get(), trace_path.c_str()));
            std::printf("%s\t%s\t%.10g\n", pred_image.c_str(), finding.str().c_str(), log_prob);
        } else if (*evaluate) {
            ModelPtr model = load_model(eval_ckpt);
            CString report;
            check(karte_evaluate(model.get(), eval_manifest.c_str(), eval_beam, eval_abnormal ? 1 : 0,
                                 eval_out.empty() ? nullptr : eval_out.c_str(), &report.p));
            std::cout << report.str();
        } else if (*visualize) {
            CString listing;
            check(karte_visualize(vis_trace.c_str(), vis_image.c_str(), vis_out.c_str(), &listing.p));
            std::cout << listing.str();
        } else if (*gradcheck) {
            ConfigPtr cfg = make_config(g);
            CString seed_text;
            check(karte_config_get(cfg.get(), "seed", &seed_text.p));
            CString report;
            int passed = 0;
            check(karte_gradcheck(std::stoull(seed_text.str()), &report.p, &passed));
            std::cout << report.str();
            if (!passed) throw Failure{KARTE_ERR_NUMERIC, "gradient check exceeded tolerance 1e-4"};
        }
    } catch (const Failure& f) {
        std::fprintf(stderr, "karte: error status=%s message=%s\n", karte_status_name(f.status),
                     one_line(f.message).c_str());
        return 1;
    }
    return 0;
}
