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

#include <string>
#include <vector>

#include "../numerics/layers.hpp"
#include "../numerics/rng.hpp"
#include "../numerics/tensor.hpp"

namespace karte {

// Encoder output for one image: L = grid_h * grid_w positions, each a
// D-dimensional annotation vector. Row i of `features` is grid cell
// (i / grid_w, i % grid_w).
struct AnnotationGrid {
    Tensor features; // [L x D]
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;

    std::size_t positions() const { return features.dim(0); }
    std::size_t channels() const { return features.dim(1); }
};

struct EncoderConfig {
    std::vector<std::size_t> channels{16, 32, 64, 128}; // one conv stage each
    std::size_t input_channels = 3;
    std::size_t kernel = 3;
    std::size_t image_size = 64;
    std::size_t pretrain_classes = 11;

    // Every stage but the last halves the resolution with a 2x2 max-pool.
    std::size_t grid_size() const;
    std::size_t annotation_channels() const { return channels.back(); }
    void validate() const;
};

// conv(3x3, pad 1) -> ReLU -> maxpool(2) stages; the last stage skips the
// pool and its ReLU output is the annotation grid. A global-average-pool
// classification head ("enc.head.*") is used only for pre-training.
class Encoder {
public:
    struct Cache {
        std::vector<Tensor> inputs;      // stage inputs
        std::vector<Tensor> pre_relu;    // conv outputs
        std::vector<Tensor> activations; // relu outputs
        std::vector<PoolResult> pools;
    };

    Encoder() = default;
    explicit Encoder(EncoderConfig cfg);

    const EncoderConfig& config() const noexcept { return cfg_; }
    void init(Rng& rng);

    // images [N x C x S x S] -> one grid per image.
    std::vector<AnnotationGrid> forward(const Tensor& images, Cache* cache = nullptr) const;
    // Accumulates parameter gradients; grid_grads are [L x D] per image.
    void backward(const Cache& cache, const std::vector<Tensor>& grid_grads);

    // Pre-training head: logits [N x classes] from mean-pooled grids.
    Tensor head_logits(const std::vector<AnnotationGrid>& grids, Tensor* pooled = nullptr) const;
    // Returns grid gradients for a logits gradient.
    std::vector<Tensor> head_backward(const std::vector<AnnotationGrid>& grids, const Tensor& pooled,
                                      const Tensor& dlogits);

    ParameterList conv_parameters();
    ParameterList head_parameters();
    std::vector<const Parameter*> all_parameters() const;

private:
    EncoderConfig cfg_;
    std::vector<Parameter> kernels_;
    std::vector<Parameter> biases_;
    Parameter head_w_;
    Parameter head_b_;
};

} // namespace karte
