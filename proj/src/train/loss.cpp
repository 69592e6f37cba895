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

#include "loss.hpp"

#include <cmath>

#include "../error.hpp"
#include "../numerics/layers.hpp"

namespace karte {

CaptionLoss caption_loss(const std::vector<std::vector<double>>& logits, const std::vector<TokenId>& targets,
                         const std::vector<std::vector<double>>& weights, double lambda, CaptionLossGrads* grads,
                         double scale) {
    const std::size_t steps = logits.size();
    if (targets.size() != steps)
        fail(ErrorCode::Shape, "caption_loss: " + std::to_string(steps) + " logit rows but " +
                                   std::to_string(targets.size()) + " targets");
    if (weights.size() != steps)
        fail(ErrorCode::Shape, "caption_loss: " + std::to_string(steps) + " logit rows but " +
                                   std::to_string(weights.size()) + " attention rows");
    const std::size_t l = steps ? weights[0].size() : 0;

    CaptionLoss out;
    std::vector<double> colsum(l, 0.0);
    if (grads) {
        grads->dlogits.assign(steps, {});
        grads->dweights.assign(steps, std::vector<double>(l, 0.0));
    }
    for (std::size_t t = 0; t < steps; ++t) {
        const auto& row = logits[t];
        if (weights[t].size() != l) fail(ErrorCode::Shape, "caption_loss: ragged attention rows");
        if (grads) grads->dlogits[t].assign(row.size(), 0.0);
        if (targets[t] == kPadId) continue;
        if (targets[t] >= row.size())
            fail(ErrorCode::InvalidArgument, "caption_loss: target id " + std::to_string(targets[t]) + " >= K");
        const auto lp = log_softmax(row);
        out.cross_entropy -= lp[targets[t]];
        if (grads) {
            for (std::size_t k = 0; k < row.size(); ++k) grads->dlogits[t][k] = scale * std::exp(lp[k]);
            grads->dlogits[t][targets[t]] -= scale;
        }
        for (std::size_t i = 0; i < l; ++i) colsum[i] += weights[t][i];
    }
    for (std::size_t i = 0; i < l; ++i) {
        const double gap = 1.0 - colsum[i];
        out.regularizer += gap * gap;
    }
    out.regularizer *= lambda;
    if (grads) {
        for (std::size_t t = 0; t < steps; ++t) {
            if (targets[t] == kPadId) continue;
            for (std::size_t i = 0; i < l; ++i) grads->dweights[t][i] = -2.0 * lambda * (1.0 - colsum[i]) * scale;
        }
    }
    out.total = out.cross_entropy + out.regularizer;
    return out;
}

double attention_regularizer(const std::vector<std::vector<double>>& weights, double lambda) {
    if (weights.empty()) return 0.0;
    std::vector<double> colsum(weights[0].size(), 0.0);
    for (const auto& row : weights) {
        if (row.size() != colsum.size()) fail(ErrorCode::Shape, "attention_regularizer: ragged rows");
        for (std::size_t i = 0; i < row.size(); ++i) colsum[i] += row[i];
    }
    double r = 0.0;
    for (double s : colsum) r += (1.0 - s) * (1.0 - s);
    return lambda * r;
}

} // namespace karte
