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

#include "attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "../error.hpp"
#include "../numerics/layers.hpp"
#include "../numerics/linalg.hpp"

namespace karte {

AttentionParams::AttentionParams(std::size_t channels, std::size_t hidden, std::size_t width)
    : w_feat("dec.att.W_feat", {channels, width}),
      w_hidden("dec.att.W_hidden", {hidden, width}),
      bias("dec.att.b", {width}),
      w_score("dec.att.w_score", {width, 1}) {}

void AttentionParams::collect(ParameterList& out) {
    out.push_back(&w_feat);
    out.push_back(&w_hidden);
    out.push_back(&bias);
    out.push_back(&w_score);
}

ProjectedGrid project(const AnnotationGrid& grid, const AttentionParams& params) {
    if (grid.features.rank() != 2 || grid.channels() != params.channels())
        fail(ErrorCode::Shape, "attention: annotation grid " + shape_string(grid.features.shape()) +
                                   " does not match W_feat " + shape_string(params.w_feat.shape()));
    return {dense(grid.features, params.w_feat, params.bias)};
}

void project_backward(const AnnotationGrid& grid, AttentionParams& params, const Tensor& d_proj, Tensor& d_grid) {
    const Tensor dx = dense_backward(grid.features, params.w_feat, params.bias, d_proj);
    for (std::size_t i = 0; i < dx.size(); ++i) d_grid[i] += dx[i];
}

AttentionStep attend(const AnnotationGrid& grid, const ProjectedGrid& projected, const Tensor& h_prev,
                     const AttentionParams& params) {
    const std::size_t l = grid.positions(), d = grid.channels(), a = params.width(), h = params.hidden();
    if (h_prev.shape() != Shape({1, h}))
        fail(ErrorCode::Shape, "attention: hidden state " + shape_string(h_prev.shape()) + " does not match W_hidden " +
                                   shape_string(params.w_hidden.shape()));
    if (projected.proj.shape() != Shape({l, a}))
        fail(ErrorCode::Shape, "attention: projection " + shape_string(projected.proj.shape()) + " does not match grid");

    std::vector<double> q(a, 0.0);
    linalg::gemm(false, false, 1, a, h, 1.0, h_prev.ptr(), params.w_hidden.value.ptr(), 0.0, q.data());

    AttentionStep step{std::vector<double>(l), std::vector<double>(l), Tensor({1, d}), Tensor({l, a})};
    const double* w = params.w_score.value.ptr();
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < l; ++i) {
        double e = 0.0;
        for (std::size_t k = 0; k < a; ++k) {
            const double pre = projected.proj[i * a + k] + q[k];
            step.pre[i * a + k] = pre;
            if (pre > 0.0) e += w[k] * pre;
        }
        step.scores[i] = e;
        mx = std::max(mx, e);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
        step.weights[i] = std::exp(step.scores[i] - mx);
        sum += step.weights[i];
    }
    for (auto& v : step.weights) v /= sum;
    step.context = weighted_context(grid, step.weights);
    return step;
}

AttentionStep attend(const AnnotationGrid& grid, const Tensor& h_prev, const AttentionParams& params) {
    return attend(grid, project(grid, params), h_prev, params);
}

Tensor attend_backward(const AnnotationGrid& grid, const Tensor& h_prev, const AttentionStep& step,
                       AttentionParams& params, const Tensor& dz, const std::vector<double>& dweights,
                       Tensor& d_grid, Tensor& d_proj) {
    const std::size_t l = grid.positions(), d = grid.channels(), a = params.width(), h = params.hidden();
    // z = sum alpha_i a_i
    std::vector<double> dalpha(l, 0.0);
    for (std::size_t i = 0; i < l; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            s += grid.features[i * d + c] * dz[c];
            d_grid[i * d + c] += step.weights[i] * dz[c];
        }
        dalpha[i] = s + (dweights.empty() ? 0.0 : dweights[i]);
    }
    // softmax
    double dot = 0.0;
    for (std::size_t i = 0; i < l; ++i) dot += step.weights[i] * dalpha[i];
    std::vector<double> q_grad(a, 0.0);
    double* dw = params.w_score.grad.ptr();
    const double* w = params.w_score.value.ptr();
    for (std::size_t i = 0; i < l; ++i) {
        const double de = step.weights[i] * (dalpha[i] - dot);
        for (std::size_t k = 0; k < a; ++k) {
            const double pre = step.pre[i * a + k];
            if (pre <= 0.0) continue;
            dw[k] += de * pre;
            const double dpre = de * w[k];
            d_proj[i * a + k] += dpre;
            q_grad[k] += dpre;
        }
    }
    // q = h_prev W_hidden
    linalg::gemm(true, false, h, a, 1, 1.0, h_prev.ptr(), q_grad.data(), 1.0, params.w_hidden.grad.ptr());
    Tensor dh({1, h});
    linalg::gemm(false, true, 1, h, a, 1.0, q_grad.data(), params.w_hidden.value.ptr(), 0.0, dh.ptr());
    return dh;
}

Tensor initial_context(const AnnotationGrid& grid) {
    const std::size_t l = grid.positions();
    return weighted_context(grid, std::vector<double>(l, 1.0 / static_cast<double>(l)));
}

Tensor weighted_context(const AnnotationGrid& grid, const std::vector<double>& weights) {
    const std::size_t l = grid.positions(), d = grid.channels();
    if (weights.size() != l) fail(ErrorCode::Shape, "attention: weight count does not match grid positions");
    Tensor z({1, d});
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t c = 0; c < d; ++c) z[c] += weights[i] * grid.features[i * d + c];
    return z;
}

} // namespace karte
