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

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

// Forward and backward passes for the handful of layers the captioning model
// uses. Forward functions never mutate their inputs; backward functions
// accumulate into Parameter::grad and return the gradient w.r.t. the input.
namespace karte {

// ---- dense ---------------------------------------------------------------

// out[n,o] = sum_i x[n,i] * w[i,o] + b[o]
Tensor dense(const Tensor& x, const Parameter& weight, const Parameter& bias);
Tensor dense_backward(const Tensor& x, Parameter& weight, Parameter& bias, const Tensor& dy);

// ---- conv2d --------------------------------------------------------------

struct Conv2dSpec {
    std::size_t stride = 1;
    std::size_t padding = 0;
};

// Cross-correlation of x [N x C x H x W] with kernels [F x C x k x k].
Tensor conv2d(const Tensor& x, const Parameter& kernels, const Parameter& bias, Conv2dSpec spec);
Tensor conv2d_backward(const Tensor& x, Parameter& kernels, Parameter& bias, Conv2dSpec spec,
                       const Tensor& dy);

// ---- maxpool2d -----------------------------------------------------------

struct PoolResult {
    Tensor output;
    std::vector<std::size_t> argmax; // flat input index per output cell
    Shape input_shape;
};

// Ties go to the lowest flat index inside the window.
PoolResult maxpool2d(const Tensor& x, std::size_t window, std::size_t stride);
Tensor maxpool2d_backward(const PoolResult& pool, const Tensor& dy);

// ---- elementwise ---------------------------------------------------------

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);

// Numerically stable softmax along `axis` (negative counts from the back).
Tensor softmax(const Tensor& x, int axis = -1);
Tensor softmax_backward(const Tensor& y, const Tensor& dy, int axis = -1);

// log-softmax of a single vector.
std::vector<double> log_softmax(std::span<const double> logits);

inline double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// ---- dropout -------------------------------------------------------------

struct DropoutResult {
    Tensor output;
    std::vector<double> scale; // 0 or 1/(1-rate) per element; empty when identity
};

// Inverted dropout. Evaluation mode (or rate 0) is the identity.
DropoutResult dropout(const Tensor& x, double rate, Rng& rng, bool training);
Tensor dropout_backward(const DropoutResult& fwd, const Tensor& dy);

// ---- lstm ----------------------------------------------------------------

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCellGate = 3 };

// One weight [(X+H) x H] and one bias [H] per gate, acting on concat(x, h).
struct LstmParams {
    std::array<Parameter, 4> weight;
    std::array<Parameter, 4> bias;

    LstmParams() = default;
    LstmParams(const std::string& prefix, std::size_t input_size, std::size_t hidden_size);

    std::size_t input_size() const { return weight[0].shape()[0] - hidden_size(); }
    std::size_t hidden_size() const { return weight[0].shape()[1]; }
    void collect(ParameterList& out);
};

struct LstmCache {
    Tensor xh;      // [N x (X+H)]
    std::array<Tensor, 4> gate; // post-activation i, f, o, g
    Tensor c_prev;
    Tensor c;
    Tensor tanh_c;
    Tensor h;
};

LstmCache lstm_cell(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev, const LstmParams& params);

struct LstmGrads {
    Tensor dx;
    Tensor dh_prev;
    Tensor dc_prev;
};

// dh and dc are the gradients arriving at this step's outputs h and c.
LstmGrads lstm_cell_backward(const LstmCache& cache, LstmParams& params, const Tensor& dh, const Tensor& dc);

} // namespace karte
