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

#include "optim.hpp"

#include <cmath>

#include "../error.hpp"

namespace karte {

void adam_step(Parameter& param, std::span<const double> grad, double lr, const AdamConfig& cfg) {
    if (grad.size() != param.size())
        fail(ErrorCode::Shape, "adam_step: gradient length " + std::to_string(grad.size()) + " does not match " +
                                   param.name + " " + shape_string(param.shape()));
    for (double g : grad)
        if (!std::isfinite(g)) fail(ErrorCode::Numeric, "adam_step: non-finite gradient for parameter " + param.name);

    param.step_count += 1;
    const double t = static_cast<double>(param.step_count);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    double* w = param.value.ptr();
    double* m = param.first_moment.ptr();
    double* v = param.second_moment.ptr();
    for (std::size_t i = 0; i < grad.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
}

double clip_grad_norm(const ParameterList& params, double max_norm) {
    double sq = 0.0;
    for (const auto* p : params)
        for (double g : p->grad.data()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (auto* p : params)
            for (double& g : p->grad.data()) g *= s;
    }
    return norm;
}

void init_glorot(Parameter& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : p.value.data()) v = rng.uniform(-limit, limit);
}

} // namespace karte
