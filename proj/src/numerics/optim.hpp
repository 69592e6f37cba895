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

#include <span>

#include "rng.hpp"
#include "tensor.hpp"

namespace karte {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam update of param.value using `grad`. Throws Numeric
// (naming the parameter) when the gradient holds a NaN or Inf.
void adam_step(Parameter& param, std::span<const double> grad, double lr, const AdamConfig& cfg = {});

// Scales all gradients so their joint L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(const ParameterList& params, double max_norm);

// Glorot-uniform in +-sqrt(6 / (fan_in + fan_out)).
void init_glorot(Parameter& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

} // namespace karte
