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

#include "../numerics/tensor.hpp"
#include "encoder.hpp"

namespace karte {

// Soft attention:
//   e_ti  = w_score . relu(W_feat a_i + W_hidden h_{t-1} + b)
//   alpha = softmax_i(e_t)
//   z_t   = sum_i alpha_ti a_i
struct AttentionParams {
    Parameter w_feat;   // [D x A]
    Parameter w_hidden; // [H x A]
    Parameter bias;     // [A]
    Parameter w_score;  // [A x 1]

    AttentionParams() = default;
    AttentionParams(std::size_t channels, std::size_t hidden, std::size_t width);

    std::size_t channels() const { return w_feat.shape()[0]; }
    std::size_t hidden() const { return w_hidden.shape()[0]; }
    std::size_t width() const { return w_feat.shape()[1]; }
    void collect(ParameterList& out);
};

// W_feat a_i + b for every position; independent of the decoder step, so it
// is computed once per image.
struct ProjectedGrid {
    Tensor proj; // [L x A]
};

struct AttentionStep {
    std::vector<double> scores;  // e_t  [L]
    std::vector<double> weights; // alpha_t [L]
    Tensor context;              // z_t [1 x D]
    Tensor pre;                  // pre-relu [L x A], kept for backward
};

ProjectedGrid project(const AnnotationGrid& grid, const AttentionParams& params);
void project_backward(const AnnotationGrid& grid, AttentionParams& params, const Tensor& d_proj, Tensor& d_grid);

// h_prev is [1 x H].
AttentionStep attend(const AnnotationGrid& grid, const ProjectedGrid& projected, const Tensor& h_prev,
                     const AttentionParams& params);
AttentionStep attend(const AnnotationGrid& grid, const Tensor& h_prev, const AttentionParams& params);

// Backward of one attend call. dz is [1 x D]; dweights (may be empty) is an
// extra gradient arriving directly at alpha. Accumulates into d_grid [L x D],
// d_proj [L x A] and params; returns d h_prev [1 x H].
Tensor attend_backward(const AnnotationGrid& grid, const Tensor& h_prev, const AttentionStep& step,
                       AttentionParams& params, const Tensor& dz, const std::vector<double>& dweights,
                       Tensor& d_grid, Tensor& d_proj);

// Mean annotation vector, [1 x D].
Tensor initial_context(const AnnotationGrid& grid);

// sum_i w_i a_i, [1 x D].
Tensor weighted_context(const AnnotationGrid& grid, const std::vector<double>& weights);

} // namespace karte
