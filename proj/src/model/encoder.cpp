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

#include "encoder.hpp"

#include "../error.hpp"
#include "../numerics/optim.hpp"

namespace karte {

std::size_t EncoderConfig::grid_size() const {
    return channels.empty() ? 0 : image_size >> (channels.size() - 1);
}

void EncoderConfig::validate() const {
    if (channels.empty()) fail(ErrorCode::InvalidArgument, "encoder: at least one stage required");
    for (auto c : channels)
        if (c == 0) fail(ErrorCode::InvalidArgument, "encoder: channel widths must be positive");
    if (kernel % 2 == 0) fail(ErrorCode::InvalidArgument, "encoder: kernel size must be odd");
    const std::size_t div = std::size_t{1} << (channels.size() - 1);
    if (image_size % div != 0)
        fail(ErrorCode::Shape, "encoder: image size " + std::to_string(image_size) + " not divisible by " +
                                   std::to_string(div));
    if (grid_size() < 4) fail(ErrorCode::Shape, "encoder: final grid smaller than 4x4");
    if (pretrain_classes == 0) fail(ErrorCode::InvalidArgument, "encoder: pretrain class count must be positive");
}

Encoder::Encoder(EncoderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::size_t in = cfg_.input_channels;
    for (std::size_t s = 0; s < cfg_.channels.size(); ++s) {
        const auto out = cfg_.channels[s];
        kernels_.emplace_back("enc.conv" + std::to_string(s) + ".W", Shape{out, in, cfg_.kernel, cfg_.kernel});
        biases_.emplace_back("enc.conv" + std::to_string(s) + ".b", Shape{out});
        in = out;
    }
    head_w_ = Parameter("enc.head.W", {in, cfg_.pretrain_classes});
    head_b_ = Parameter("enc.head.b", {cfg_.pretrain_classes});
}

void Encoder::init(Rng& rng) {
    for (auto& k : kernels_) {
        const auto& s = k.shape();
        init_glorot(k, s[1] * s[2] * s[3], s[0] * s[2] * s[3], rng);
    }
    for (auto& b : biases_) b.value.fill(0.0);
    init_glorot(head_w_, head_w_.shape()[0], head_w_.shape()[1], rng);
    head_b_.value.fill(0.0);
}

std::vector<AnnotationGrid> Encoder::forward(const Tensor& images, Cache* cache) const {
    if (images.rank() != 4 || images.dim(1) != cfg_.input_channels || images.dim(2) != cfg_.image_size ||
        images.dim(3) != cfg_.image_size)
        fail(ErrorCode::Shape, "encoder: expected [N x " + std::to_string(cfg_.input_channels) + " x " +
                                   std::to_string(cfg_.image_size) + " x " + std::to_string(cfg_.image_size) +
                                   "], got " + shape_string(images.shape()));
    const Conv2dSpec spec{1, cfg_.kernel / 2};
    Tensor x = images;
    if (cache) *cache = Cache{};
    const std::size_t stages = kernels_.size();
    for (std::size_t s = 0; s < stages; ++s) {
        Tensor pre = conv2d(x, kernels_[s], biases_[s], spec);
        Tensor act = relu(pre);
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->pre_relu.push_back(std::move(pre));
        }
        if (s + 1 < stages) {
            PoolResult pool = maxpool2d(act, 2, 2);
            x = pool.output;
            if (cache) {
                cache->activations.push_back(std::move(act));
                cache->pools.push_back(std::move(pool));
            }
        } else {
            x = std::move(act);
        }
    }

    const std::size_t n = x.dim(0), d = x.dim(1), h = x.dim(2), w = x.dim(3), l = h * w;
    std::vector<AnnotationGrid> grids;
    grids.reserve(n);
    for (std::size_t b = 0; b < n; ++b) {
        AnnotationGrid g{Tensor({l, d}), h, w};
        const double* src = x.ptr() + b * d * l;
        for (std::size_t c = 0; c < d; ++c)
            for (std::size_t i = 0; i < l; ++i) g.features[i * d + c] = src[c * l + i];
        grids.push_back(std::move(g));
    }
    return grids;
}

void Encoder::backward(const Cache& cache, const std::vector<Tensor>& grid_grads) {
    const std::size_t stages = kernels_.size();
    const Tensor& last = cache.pre_relu.back();
    const std::size_t n = last.dim(0), d = last.dim(1), l = last.dim(2) * last.dim(3);
    if (grid_grads.size() != n) fail(ErrorCode::Shape, "encoder backward: gradient count does not match batch");
    Tensor dy(last.shape());
    for (std::size_t b = 0; b < n; ++b) {
        if (grid_grads[b].shape() != Shape({l, d}))
            fail(ErrorCode::Shape, "encoder backward: grid gradient " + shape_string(grid_grads[b].shape()));
        double* dst = dy.ptr() + b * d * l;
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t c = 0; c < d; ++c) dst[c * l + i] = grid_grads[b][i * d + c];
    }
    const Conv2dSpec spec{1, cfg_.kernel / 2};
    for (std::size_t s = stages; s-- > 0;) {
        if (s + 1 < stages) dy = maxpool2d_backward(cache.pools[s], dy);
        dy = relu_backward(cache.pre_relu[s], dy);
        dy = conv2d_backward(cache.inputs[s], kernels_[s], biases_[s], spec, dy);
    }
}

Tensor Encoder::head_logits(const std::vector<AnnotationGrid>& grids, Tensor* pooled_out) const {
    const std::size_t n = grids.size(), d = cfg_.annotation_channels();
    Tensor pooled({n, d});
    for (std::size_t b = 0; b < n; ++b) {
        const auto& f = grids[b].features;
        const std::size_t l = f.dim(0);
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t c = 0; c < d; ++c) pooled[b * d + c] += f[i * d + c];
        for (std::size_t c = 0; c < d; ++c) pooled[b * d + c] /= static_cast<double>(l);
    }
    Tensor logits = dense(pooled, head_w_, head_b_);
    if (pooled_out) *pooled_out = std::move(pooled);
    return logits;
}

std::vector<Tensor> Encoder::head_backward(const std::vector<AnnotationGrid>& grids, const Tensor& pooled,
                                           const Tensor& dlogits) {
    const Tensor dpooled = dense_backward(pooled, head_w_, head_b_, dlogits);
    const std::size_t d = cfg_.annotation_channels();
    std::vector<Tensor> out;
    for (std::size_t b = 0; b < grids.size(); ++b) {
        const std::size_t l = grids[b].positions();
        Tensor g({l, d});
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t c = 0; c < d; ++c) g[i * d + c] = dpooled[b * d + c] / static_cast<double>(l);
        out.push_back(std::move(g));
    }
    return out;
}

ParameterList Encoder::conv_parameters() {
    ParameterList out;
    for (std::size_t s = 0; s < kernels_.size(); ++s) {
        out.push_back(&kernels_[s]);
        out.push_back(&biases_[s]);
    }
    return out;
}

ParameterList Encoder::head_parameters() { return {&head_w_, &head_b_}; }

std::vector<const Parameter*> Encoder::all_parameters() const {
    std::vector<const Parameter*> out;
    for (std::size_t s = 0; s < kernels_.size(); ++s) {
        out.push_back(&kernels_[s]);
        out.push_back(&biases_[s]);
    }
    out.push_back(&head_w_);
    out.push_back(&head_b_);
    return out;
}

} // namespace karte
