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
#include <functional>
#include <string>
#include <vector>

#include "../data/corpus.hpp"
#include "../model/caption_model.hpp"
#include "loss.hpp"
#include "schedule.hpp"

namespace karte {

using LogSink = std::function<void(const std::string&)>;

struct StepOptions {
    double lambda = 1.0;
    double lr_encoder = 1e-4;
    double lr_decoder = 4e-4;
    double clip_norm = 5.0;
    bool freeze_encoder = false;
};

StepOptions step_options(const Config& cfg);

Tensor load_batch_images(const std::vector<const Sample*>& batch, PreprocessMode mode, const PreprocessConfig& cfg,
                         Rng& rng, ImageCache& cache);

std::vector<TokenSequence> encode_targets(const std::vector<const Sample*>& batch, const Vocabulary& vocab);

// Batch-mean caption loss; zeroes and then fills the gradients of every
// parameter that takes part (encoder ones only when not frozen).
CaptionLoss batch_loss(CaptionModel& model, const Tensor& images, const std::vector<TokenSequence>& targets,
                       double lambda, Rng& rng, bool training, bool encoder_grads);

struct BatchStats {
    CaptionLoss loss;
    double grad_norm = 0.0;
};

// batch_loss, gradient clipping, then Adam with the encoder rate on the
// encoder parameters and the decoder rate on the rest.
BatchStats train_batch(CaptionModel& model, const Tensor& images, const std::vector<TokenSequence>& targets,
                       const StepOptions& opts, Rng& rng);

struct TrainLogRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_cross_entropy = 0.0;
    double train_regularizer = 0.0;
    double validation_bleu4 = 0.0;
    double lr_encoder = 0.0;
    double lr_decoder = 0.0;
    std::size_t plan_size = 0;
    std::size_t normal_count = 0;
    std::size_t abnormal_count = 0;
    std::size_t batches = 0;
    double seconds = 0.0;
    bool is_best = false;
};

std::string train_log_header();
std::string format_train_log(const TrainLogRecord& r);

// One pass over the plan in order, batch_size samples at a time. A
// non-finite batch loss aborts with a Numeric error naming the batch.
TrainLogRecord train_epoch(CaptionModel& model, const std::vector<Sample>& train, const EpochPlan& plan,
                           const StepOptions& opts, std::size_t batch_size, Rng& rng, ImageCache& cache,
                           std::size_t epoch);

// Corpus BLEU-4 of greedy decodes against the samples' findings.
double validation_bleu4(const CaptionModel& model, const std::vector<Sample>& samples, ImageCache& cache);

struct TrainResult {
    std::vector<TrainLogRecord> log;
    std::size_t best_epoch = 0;
    double best_bleu4 = 0.0;
    StopDecision stop = StopDecision::Continue;
    std::filesystem::path best_checkpoint;
    std::filesystem::path final_checkpoint;
    std::filesystem::path log_path;
};

// Epoch loop with plateau decay and early stopping, writing best.kcpt,
// final.kcpt and train_log.tsv into out_dir. On return the model holds the
// final-epoch weights.
TrainResult train_captioner(CaptionModel& model, const std::vector<Sample>& train,
                            const std::vector<Sample>& validation, const std::filesystem::path& out_dir, Rng& rng,
                            const LogSink& log = {});

// ---- encoder pre-training --------------------------------------------------

// Mean softmax cross-entropy of the classification head; fills head and
// conv gradients when with_grad.
double pretrain_loss(Encoder& encoder, const Tensor& images, const std::vector<int>& labels, bool with_grad,
                     std::vector<int>* predicted = nullptr);

// One Adam step on the encoder and its head; returns the batch loss.
double pretrain_step(Encoder& encoder, const Tensor& images, const std::vector<int>& labels, double lr);

struct PretrainRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double validation_accuracy = 0.0;
};

struct PretrainResult {
    std::vector<PretrainRecord> log;
    std::size_t best_epoch = 0;
    double best_accuracy = 0.0;
    std::size_t train_count = 0;
    std::size_t validation_count = 0;
};

double classification_accuracy(const Encoder& encoder, const std::vector<Sample>& samples, const Config& cfg,
                               ImageCache& cache);

// 80/20 stratified split; the checkpoint at `out` holds the weights with
// the best validation accuracy (epoch 0 is the initialisation).
PretrainResult pretrain_encoder(Encoder& encoder, const std::vector<Sample>& samples, const Config& cfg, Rng& rng,
                                const std::filesystem::path& out, const LogSink& log = {});

} // namespace karte
