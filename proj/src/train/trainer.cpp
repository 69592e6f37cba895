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

#include "trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "../error.hpp"
#include "../eval/bleu.hpp"
#include "../infer/decode.hpp"
#include "../numerics/optim.hpp"

namespace karte {

StepOptions step_options(const Config& cfg) {
    return {cfg.lambda, cfg.lr_encoder, cfg.lr_decoder, cfg.clip_norm, cfg.freeze_encoder};
}

Tensor load_batch_images(const std::vector<const Sample*>& batch, PreprocessMode mode, const PreprocessConfig& cfg,
                         Rng& rng, ImageCache& cache) {
    if (batch.empty()) fail(ErrorCode::InvalidArgument, "load_batch_images: empty batch");
    const std::size_t s = cfg.crop, per = 3 * s * s;
    Tensor out({batch.size(), 3, s, s});
    for (std::size_t b = 0; b < batch.size(); ++b) {
        Tensor x = preprocess_image(cache.get(batch[b]->resolved_path), mode, cfg, rng);
        std::copy_n(x.ptr(), per, out.ptr() + b * per);
    }
    return out;
}

std::vector<TokenSequence> encode_targets(const std::vector<const Sample*>& batch, const Vocabulary& vocab) {
    std::vector<TokenSequence> out;
    out.reserve(batch.size());
    for (const auto* s : batch) out.push_back(encode(s->finding, vocab, true));
    return out;
}

CaptionLoss batch_loss(CaptionModel& model, const Tensor& images, const std::vector<TokenSequence>& targets,
                       double lambda, Rng& rng, bool training, bool encoder_grads) {
    const std::size_t n = targets.size();
    if (n == 0 || images.dim(0) != n) fail(ErrorCode::Shape, "batch_loss: image and target counts differ");
    zero_grads(model.decoder_parameters());
    if (encoder_grads) zero_grads(model.encoder_parameters());

    Encoder::Cache cache;
    auto grids = model.encoder.forward(images, encoder_grads ? &cache : nullptr);
    const double scale = 1.0 / static_cast<double>(n);
    CaptionLoss total;
    std::vector<Tensor> grid_grads;
    for (std::size_t b = 0; b < n; ++b) {
        auto unroll = model.decoder.teacher_forced_unroll(grids[b], targets[b], rng, training);
        CaptionLossGrads g;
        CaptionLoss l = caption_loss(unroll.logits, unroll.targets, unroll.weights, lambda, &g, scale);
        total.total += l.total * scale;
        total.cross_entropy += l.cross_entropy * scale;
        total.regularizer += l.regularizer * scale;
        grid_grads.push_back(model.decoder.backward(grids[b], unroll, g.dlogits, g.dweights));
    }
    if (encoder_grads) model.encoder.backward(cache, grid_grads);
    return total;
}

BatchStats train_batch(CaptionModel& model, const Tensor& images, const std::vector<TokenSequence>& targets,
                       const StepOptions& opts, Rng& rng) {
    BatchStats stats;
    const bool enc = !opts.freeze_encoder;
    stats.loss = batch_loss(model, images, targets, opts.lambda, rng, true, enc);
    if (!std::isfinite(stats.loss.total)) return stats;
    ParameterList enc_params = enc ? model.encoder_parameters() : ParameterList{};
    ParameterList dec_params = model.decoder_parameters();
    ParameterList all = enc_params;
    all.insert(all.end(), dec_params.begin(), dec_params.end());
    stats.grad_norm = opts.clip_norm > 0 ? clip_grad_norm(all, opts.clip_norm) : 0.0;
    for (auto* p : enc_params) adam_step(*p, p->grad.data(), opts.lr_encoder);
    for (auto* p : dec_params) adam_step(*p, p->grad.data(), opts.lr_decoder);
    return stats;
}

std::string train_log_header() {
    return "epoch\ttrain_loss\ttrain_ce\ttrain_reg\tval_bleu4\tlr_encoder\tlr_decoder\tplan_size\tnormal\tabnormal\t"
           "batches\tseconds\tbest";
}

std::string format_train_log(const TrainLogRecord& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f\t%.6f\t%.6f\t%.6g\t%.6g\t%zu\t%zu\t%zu\t%zu\t%.2f\t%d", r.epoch,
                  r.train_loss, r.train_cross_entropy, r.train_regularizer, r.validation_bleu4, r.lr_encoder,
                  r.lr_decoder, r.plan_size, r.normal_count, r.abnormal_count, r.batches, r.seconds, r.is_best ? 1 : 0);
    return buf;
}

TrainLogRecord train_epoch(CaptionModel& model, const std::vector<Sample>& train, const EpochPlan& plan,
                           const StepOptions& opts, std::size_t batch_size, Rng& rng, ImageCache& cache,
                           std::size_t epoch) {
    if (batch_size == 0) fail(ErrorCode::InvalidArgument, "train_epoch: batch size must be positive");
    const auto t0 = std::chrono::steady_clock::now();
    TrainLogRecord rec;
    rec.epoch = epoch;
    rec.lr_encoder = opts.lr_encoder;
    rec.lr_decoder = opts.lr_decoder;
    rec.plan_size = plan.order.size();
    rec.normal_count = plan.normal_count;
    rec.abnormal_count = plan.abnormal_count;
    const PreprocessConfig pre = preprocess_config(model.config);

    std::size_t seen = 0;
    for (std::size_t start = 0; start < plan.order.size(); start += batch_size) {
        std::vector<const Sample*> batch;
        for (std::size_t i = start; i < std::min(start + batch_size, plan.order.size()); ++i) {
            const std::size_t idx = plan.order[i];
            if (idx >= train.size()) fail(ErrorCode::InvalidArgument, "train_epoch: plan index out of range");
            batch.push_back(&train[idx]);
        }
        Tensor images = load_batch_images(batch, PreprocessMode::Train, pre, rng, cache);
        BatchStats s = train_batch(model, images, encode_targets(batch, model.vocab), opts, rng);
        if (!std::isfinite(s.loss.total))
            fail(ErrorCode::Numeric, "epoch " + std::to_string(epoch) + " batch " + std::to_string(rec.batches) +
                                         " (plan entries " + std::to_string(start) + ".." +
                                         std::to_string(start + batch.size() - 1) + "): non-finite loss");
        const double w = static_cast<double>(batch.size());
        rec.train_loss += s.loss.total * w;
        rec.train_cross_entropy += s.loss.cross_entropy * w;
        rec.train_regularizer += s.loss.regularizer * w;
        seen += batch.size();
        ++rec.batches;
    }
    if (seen > 0) {
        rec.train_loss /= static_cast<double>(seen);
        rec.train_cross_entropy /= static_cast<double>(seen);
        rec.train_regularizer /= static_cast<double>(seen);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

double validation_bleu4(const CaptionModel& model, const std::vector<Sample>& samples, ImageCache& cache) {
    if (samples.empty()) fail(ErrorCode::InvalidArgument, "validation_bleu4: no samples");
    const PreprocessConfig pre = preprocess_config(model.config);
    Rng unused(0);
    std::vector<TextPair> pairs;
    const std::size_t chunk = 32;
    for (std::size_t start = 0; start < samples.size(); start += chunk) {
        std::vector<const Sample*> batch;
        for (std::size_t i = start; i < std::min(start + chunk, samples.size()); ++i) batch.push_back(&samples[i]);
        auto grids = model.encoder.forward(load_batch_images(batch, PreprocessMode::Eval, pre, unused, cache));
        for (std::size_t b = 0; b < batch.size(); ++b) {
            Hypothesis h = greedy_decode(model.decoder, grids[b], model.max_len);
            pairs.emplace_back(decode(h.tokens, model.vocab), batch[b]->finding);
        }
    }
    return corpus_bleu(pairs, 4).bleu[3];
}

TrainResult train_captioner(CaptionModel& model, const std::vector<Sample>& train,
                            const std::vector<Sample>& validation, const std::filesystem::path& out_dir, Rng& rng,
                            const LogSink& log) {
    const Config& cfg = model.config;
    cfg.validate();
    if (train.empty()) fail(ErrorCode::InvalidArgument, "train: empty training set");
    if (validation.empty()) fail(ErrorCode::InvalidArgument, "train: empty validation set");
    std::filesystem::create_directories(out_dir);

    TrainResult result;
    result.best_checkpoint = out_dir / "best.kcpt";
    result.final_checkpoint = out_dir / "final.kcpt";
    result.log_path = out_dir / "train_log.tsv";
    std::ofstream log_file(result.log_path, std::ios::binary);
    if (!log_file) fail(ErrorCode::Io, "cannot write " + result.log_path.string());
    log_file << train_log_header() << "\n";

    ImageCache cache;
    StepOptions opts = step_options(cfg);
    std::vector<double> history;
    double best = -1.0;
    for (std::size_t epoch = 1;; ++epoch) {
        EpochPlan plan = plan_epoch(train, cfg.sampling, cfg.per_class, rng);
        TrainLogRecord rec = train_epoch(model, train, plan, opts, cfg.batch_size, rng, cache, epoch);
        const auto t0 = std::chrono::steady_clock::now();
        rec.validation_bleu4 = validation_bleu4(model, validation, cache);
        rec.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.push_back(rec.validation_bleu4);
        if (rec.validation_bleu4 > best) {
            best = rec.validation_bleu4;
            rec.is_best = true;
            result.best_epoch = epoch;
            result.best_bleu4 = best;
            model.save(result.best_checkpoint);
        }
        log_file << format_train_log(rec) << "\n";
        log_file.flush();
        if (log) log(format_train_log(rec));
        result.log.push_back(rec);

        LearningRates lr = lr_plateau_update(history, cfg.plateau_patience, cfg.plateau_factor,
                                             {opts.lr_encoder, opts.lr_decoder});
        opts.lr_encoder = lr.encoder;
        opts.lr_decoder = lr.decoder;

        result.stop = early_stop_check(history, cfg.early_stop_patience, cfg.max_epochs);
        if (result.stop == StopDecision::Continue && cfg.target_bleu > 0 && rec.validation_bleu4 >= cfg.target_bleu)
            result.stop = StopDecision::TargetReached;
        if (result.stop != StopDecision::Continue) break;
    }
    model.save(result.final_checkpoint);
    return result;
}

// ---- encoder pre-training --------------------------------------------------

double pretrain_loss(Encoder& encoder, const Tensor& images, const std::vector<int>& labels, bool with_grad,
                     std::vector<int>* predicted) {
    const std::size_t n = labels.size();
    const std::size_t classes = encoder.config().pretrain_classes;
    if (n == 0 || images.dim(0) != n) fail(ErrorCode::Shape, "pretrain: image and label counts differ");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            fail(ErrorCode::InvalidArgument, "pretrain: label " + std::to_string(y) + " outside [0," +
                                                 std::to_string(classes) + ")");
    Encoder::Cache cache;
    auto grids = encoder.forward(images, with_grad ? &cache : nullptr);
    Tensor pooled;
    Tensor logits = encoder.head_logits(grids, &pooled);
    Tensor dlogits({n, classes});
    double loss = 0.0;
    if (predicted) predicted->assign(n, 0);
    for (std::size_t b = 0; b < n; ++b) {
        auto lp = log_softmax(std::span<const double>(logits.ptr() + b * classes, classes));
        loss -= lp[static_cast<std::size_t>(labels[b])];
        for (std::size_t c = 0; c < classes; ++c) {
            dlogits.at(b, c) = std::exp(lp[c]) / static_cast<double>(n);
            if (predicted && lp[c] > lp[static_cast<std::size_t>((*predicted)[b])]) (*predicted)[b] = static_cast<int>(c);
        }
        dlogits.at(b, static_cast<std::size_t>(labels[b])) -= 1.0 / static_cast<double>(n);
    }
    loss /= static_cast<double>(n);
    if (with_grad) {
        auto grid_grads = encoder.head_backward(grids, pooled, dlogits);
        encoder.backward(cache, grid_grads);
    }
    return loss;
}

double pretrain_step(Encoder& encoder, const Tensor& images, const std::vector<int>& labels, double lr) {
    ParameterList params = encoder.conv_parameters();
    for (auto* p : encoder.head_parameters()) params.push_back(p);
    zero_grads(params);
    const double loss = pretrain_loss(encoder, images, labels, true);
    if (!std::isfinite(loss)) fail(ErrorCode::Numeric, "pretrain: non-finite loss");
    for (auto* p : params) adam_step(*p, p->grad.data(), lr);
    return loss;
}

double classification_accuracy(const Encoder& encoder, const std::vector<Sample>& samples, const Config& cfg,
                               ImageCache& cache) {
    if (samples.empty()) return 0.0;
    const PreprocessConfig pre = preprocess_config(cfg);
    Rng unused(0);
    std::size_t hits = 0;
    const std::size_t chunk = 32;
    for (std::size_t start = 0; start < samples.size(); start += chunk) {
        std::vector<const Sample*> batch;
        std::vector<int> labels;
        for (std::size_t i = start; i < std::min(start + chunk, samples.size()); ++i) {
            batch.push_back(&samples[i]);
            labels.push_back(samples[i].class_label);
        }
        std::vector<int> predicted;
        pretrain_loss(const_cast<Encoder&>(encoder), load_batch_images(batch, PreprocessMode::Eval, pre, unused, cache),
                      labels, false, &predicted);
        for (std::size_t b = 0; b < batch.size(); ++b) hits += predicted[b] == labels[b];
    }
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

PretrainResult pretrain_encoder(Encoder& encoder, const std::vector<Sample>& samples, const Config& cfg, Rng& rng,
                                const std::filesystem::path& out, const LogSink& log) {
    for (const auto& s : samples)
        if (s.class_label < 0)
            fail(ErrorCode::InvalidArgument, "pretrain: sample " + s.image_path + " has no class label");
    DatasetSplit split = split_dataset(samples, {0.8, 0.2, 0.0}, rng);
    PretrainResult result;
    result.train_count = split.train.size();
    result.validation_count = split.validation.size();
    if (split.train.empty()) fail(ErrorCode::InvalidArgument, "pretrain: empty training split");

    ImageCache cache;
    const PreprocessConfig pre = preprocess_config(cfg);
    result.best_accuracy = classification_accuracy(encoder, split.validation, cfg, cache);
    save_encoder(out, encoder, cfg);
    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        PretrainRecord rec;
        rec.epoch = epoch;
        for (std::size_t start = 0; start < order.size(); start += cfg.pretrain_batch) {
            std::vector<const Sample*> batch;
            std::vector<int> labels;
            for (std::size_t i = start; i < std::min(start + cfg.pretrain_batch, order.size()); ++i) {
                batch.push_back(&split.train[order[i]]);
                labels.push_back(split.train[order[i]].class_label);
            }
            Tensor images = load_batch_images(batch, PreprocessMode::Train, pre, rng, cache);
            rec.train_loss += pretrain_step(encoder, images, labels, cfg.pretrain_lr) * static_cast<double>(batch.size());
        }
        rec.train_loss /= static_cast<double>(order.size());
        rec.train_accuracy = classification_accuracy(encoder, split.train, cfg, cache);
        rec.validation_accuracy = classification_accuracy(encoder, split.validation, cfg, cache);
        if (rec.validation_accuracy > result.best_accuracy) {
            result.best_accuracy = rec.validation_accuracy;
            result.best_epoch = epoch;
            save_encoder(out, encoder, cfg);
        }
        if (log) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "pretrain epoch %zu loss %.6f train_acc %.4f val_acc %.4f", epoch,
                          rec.train_loss, rec.train_accuracy, rec.validation_accuracy);
            log(buf);
        }
        result.log.push_back(rec);
    }
    return result;
}

} // namespace karte
