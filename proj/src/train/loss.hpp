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

#include <vector>

#include "../text/charvocab.hpp"

namespace karte {

struct CaptionLoss {
    double total = 0.0;
    double cross_entropy = 0.0;
    double regularizer = 0.0;
};

struct CaptionLossGrads {
    std::vector<std::vector<double>> dlogits;  // per step, K
    std::vector<std::vector<double>> dweights; // per step, L
};

// sum_t CE(softmax(logits_t), target_t) + lambda * sum_i (1 - sum_t w_ti)^2
// Steps whose target is <pad> are left out of both terms. `scale` multiplies
// the returned gradients (1/B for a batch mean).
CaptionLoss caption_loss(const std::vector<std::vector<double>>& logits, const std::vector<TokenId>& targets,
                         const std::vector<std::vector<double>>& weights, double lambda,
                         CaptionLossGrads* grads = nullptr, double scale = 1.0);

// Only the regularizer term, over all rows.
double attention_regularizer(const std::vector<std::vector<double>>& weights, double lambda);

} // namespace karte
