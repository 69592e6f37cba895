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

#include "karte/karte.h"

#include <cstdlib>
#include <fstream>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "../error.hpp"
#include "../pipeline/pipeline.hpp"

struct karte_config {
    karte::Config cfg;
};

struct karte_model {
    karte::CaptionModel model;
};

struct karte_trace {
    karte::AttentionTrace trace;
};

namespace {

thread_local std::string g_last_error;
karte_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

karte_status to_status(karte::ErrorCode code) {
    switch (code) {
    case karte::ErrorCode::InvalidArgument: return KARTE_ERR_INVALID_ARGUMENT;
    case karte::ErrorCode::Shape: return KARTE_ERR_SHAPE;
    case karte::ErrorCode::Io: return KARTE_ERR_IO;
    case karte::ErrorCode::Format: return KARTE_ERR_FORMAT;
    case karte::ErrorCode::Numeric: return KARTE_ERR_NUMERIC;
    case karte::ErrorCode::State: return KARTE_ERR_STATE;
    case karte::ErrorCode::Internal: return KARTE_ERR_INTERNAL;
    }
    return KARTE_ERR_INTERNAL;
}

template <typename F>
karte_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return KARTE_OK;
    } catch (const karte::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return KARTE_ERR_INTERNAL;
    } catch (const std::filesystem::filesystem_error& e) {
        g_last_error = e.what();
        return KARTE_ERR_IO;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return KARTE_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p) karte::fail(karte::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_string(char** out, const std::string& s) {
    if (out) *out = dup_string(s);
}

karte::LogSink sink() {
    if (!g_log_fn) return {};
    return [fn = g_log_fn, user = g_log_user](const std::string& line) { fn(line.c_str(), user); };
}

} // namespace

extern "C" {

const char* karte_version(void) { return "0.1.0"; }

const char* karte_last_error(void) { return g_last_error.c_str(); }

const char* karte_status_name(karte_status status) {
    switch (status) {
    case KARTE_OK: return "OK";
    case KARTE_ERR_INVALID_ARGUMENT: return "INVALID_ARGUMENT";
    case KARTE_ERR_SHAPE: return "SHAPE";
    case KARTE_ERR_IO: return "IO";
    case KARTE_ERR_FORMAT: return "FORMAT";
    case KARTE_ERR_NUMERIC: return "NUMERIC";
    case KARTE_ERR_STATE: return "STATE";
    case KARTE_ERR_INTERNAL: return "INTERNAL";
    }
    return "UNKNOWN";
}

void karte_free_string(char* s) { std::free(s); }

void karte_set_log_callback(karte_log_fn fn, void* user) {
    g_log_fn = fn;
    g_log_user = user;
}

karte_status karte_config_new(karte_config** out) {
    return guarded([&] {
        require(out, "out");
        *out = new karte_config{};
    });
}

karte_status karte_config_new_paper_scale(karte_config** out) {
    return guarded([&] {
        require(out, "out");
        *out = new karte_config{karte::paper_scale_config()};
    });
}

void karte_config_free(karte_config* cfg) { delete cfg; }

karte_status karte_config_set(karte_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        require(cfg, "cfg");
        require(key, "key");
        require(value, "value");
        karte::apply_setting(cfg->cfg, key, value);
    });
}

karte_status karte_config_load_file(karte_config* cfg, const char* path) {
    return guarded([&] {
        require(cfg, "cfg");
        require(path, "path");
        karte::load_config_file(cfg->cfg, path);
    });
}

karte_status karte_config_get(const karte_config* cfg, const char* key, char** value) {
    return guarded([&] {
        require(cfg, "cfg");
        require(key, "key");
        require(value, "value");
        std::istringstream in(karte::dump_config(cfg->cfg));
        const std::string prefix = std::string(key) + "=";
        for (std::string line; std::getline(in, line);) {
            if (line.rfind(prefix, 0) == 0) {
                *value = dup_string(line.substr(prefix.size()));
                return;
            }
        }
        karte::fail(karte::ErrorCode::InvalidArgument, std::string("config: unknown key '") + key + "'");
    });
}

karte_status karte_config_dump(const karte_config* cfg, char** text) {
    return guarded([&] {
        require(cfg, "cfg");
        require(text, "text");
        *text = dup_string(karte::dump_config(cfg->cfg));
    });
}

karte_status karte_synth_data(const karte_config* cfg, size_t count, const char* out_dir, char** report) {
    return guarded([&] {
        require(cfg, "cfg");
        require(out_dir, "out_dir");
        auto r = karte::run_synth(count, out_dir, cfg->cfg);
        set_string(report, r.report);
    });
}

karte_status karte_pretrain(const karte_config* cfg, const char* manifest, const char* out_checkpoint,
                            char** summary) {
    return guarded([&] {
        require(cfg, "cfg");
        require(manifest, "manifest");
        require(out_checkpoint, "out_checkpoint");
        auto r = karte::run_pretrain(manifest, out_checkpoint, cfg->cfg, sink());
        std::ostringstream os;
        os << "train_samples: " << r.train_count << "\n"
           << "validation_samples: " << r.validation_count << "\n"
           << "epochs: " << r.log.size() << "\n"
           << "best_epoch: " << r.best_epoch << "\n"
           << "best_validation_accuracy: " << r.best_accuracy << "\n"
           << "checkpoint: " << out_checkpoint << "\n";
        set_string(summary, os.str());
    });
}

karte_status karte_train(const karte_config* cfg, const char* manifest, const char* out_dir, const char* pretrained,
                         char** summary) {
    return guarded([&] {
        require(cfg, "cfg");
        require(manifest, "manifest");
        require(out_dir, "out_dir");
        auto o = karte::run_train(manifest, out_dir, cfg->cfg, pretrained ? pretrained : "", sink());
        std::ostringstream os;
        os << o.data.summary << "epochs: " << o.result.log.size() << "\n"
           << "stop: " << karte::stop_decision_name(o.result.stop) << "\n"
           << "best_epoch: " << o.result.best_epoch << "\n"
           << "best_validation_bleu4: " << o.result.best_bleu4 << "\n"
           << "best_checkpoint: " << o.result.best_checkpoint.string() << "\n"
           << "final_checkpoint: " << o.result.final_checkpoint.string() << "\n";
        set_string(summary, os.str());
    });
}

karte_status karte_model_load(const char* checkpoint, karte_model** out) {
    return guarded([&] {
        require(checkpoint, "checkpoint");
        require(out, "out");
        *out = new karte_model{karte::CaptionModel::load(checkpoint)};
    });
}

void karte_model_free(karte_model* model) { delete model; }

karte_status karte_model_info(const karte_model* model, char** text) {
    return guarded([&] {
        require(model, "model");
        require(text, "text");
        std::ostringstream os;
        os << karte::dump_config(model->model.config) << "vocabulary_size=" << model->model.vocab.size() << "\n"
           << "decode_max_len=" << model->model.max_len << "\n";
        *text = dup_string(os.str());
    });
}

karte_status karte_predict(const karte_model* model, const char* image, size_t beam, char** finding,
                           double* log_prob, karte_trace** trace) {
    return guarded([&] {
        require(model, "model");
        require(image, "image");
        require(finding, "finding");
        auto p = karte::predict_image(model->model, std::filesystem::path(image),
                                      beam ? beam : model->model.config.beam);
        char* f = dup_string(p.finding);
        if (trace) {
            try {
                *trace = new karte_trace{std::move(p.trace)};
            } catch (...) {
                std::free(f);
                throw;
            }
        }
        *finding = f;
        if (log_prob) *log_prob = p.log_prob;
    });
}

karte_status karte_evaluate(const karte_model* model, const char* manifest, size_t beam, int abnormal_only,
                            const char* out_dir, char** report) {
    return guarded([&] {
        require(model, "model");
        require(manifest, "manifest");
        const auto& m = model->model;
        auto samples = karte::load_manifest(manifest, m.config.normal);
        if (abnormal_only) std::erase_if(samples, [](const karte::Sample& s) { return s.is_normal; });
        if (samples.empty()) karte::fail(karte::ErrorCode::InvalidArgument, "evaluate: no samples to evaluate");
        std::filesystem::path dir = out_dir ? out_dir : "";
        auto r = karte::evaluate_split(m, samples, beam ? beam : m.config.beam, dir.empty() ? dir : dir / "traces");
        const std::string text = karte::format_eval_report(r);
        if (!dir.empty()) {
            auto write = [&](const char* name, const std::string& body) {
                std::ofstream out(dir / name, std::ios::binary);
                if (!(out << body)) karte::fail(karte::ErrorCode::Io, "cannot write " + (dir / name).string());
            };
            write("report.txt", text);
            write("report.tsv", karte::format_eval_tsv(r));
            write("predictions.tsv", karte::format_predictions(r.predictions));
        }
        set_string(report, text);
    });
}

karte_status karte_visualize(const char* trace, const char* image, const char* out_dir, char** listing) {
    return guarded([&] {
        require(trace, "trace");
        require(image, "image");
        require(out_dir, "out_dir");
        auto art = karte::run_visualize(trace, image, out_dir);
        std::string text;
        for (const auto& p : art.step_images) text += p.string() + "\n";
        text += art.summed_image.string() + "\n";
        set_string(listing, text);
    });
}

karte_status karte_gradcheck(uint64_t seed, char** report, int* passed) {
    return guarded([&] {
        auto suite = karte::run_gradcheck(seed);
        set_string(report, suite.to_text());
        if (passed) *passed = suite.passed() ? 1 : 0;
    });
}

karte_status karte_trace_read(const char* path, karte_trace** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new karte_trace{karte::read_trace(path)};
    });
}

karte_status karte_trace_write(const karte_trace* trace, const char* path) {
    return guarded([&] {
        require(trace, "trace");
        require(path, "path");
        karte::write_trace(trace->trace, path);
    });
}

size_t karte_trace_steps(const karte_trace* trace) { return trace ? trace->trace.steps() : 0; }

size_t karte_trace_positions(const karte_trace* trace) { return trace ? trace->trace.positions() : 0; }

karte_status karte_trace_weight(const karte_trace* trace, size_t step, size_t position, double* out) {
    return guarded([&] {
        require(trace, "trace");
        require(out, "out");
        const auto& t = trace->trace;
        if (step >= t.steps() || position >= t.positions())
            karte::fail(karte::ErrorCode::InvalidArgument, "trace index out of range");
        *out = t.weights[step][position];
    });
}

void karte_trace_free(karte_trace* trace) { delete trace; }

} // extern "C"
