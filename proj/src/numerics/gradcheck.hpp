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

#include <functional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace karte {

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t retried = 0; // entries that needed a fallback step
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;

    double max_rel_error() const;
    bool passed(double tolerance) const { return max_rel_error() < tolerance; }
    std::string to_text(double tolerance) const;
};

// Returns the scalar loss; when `with_grad` is true it must also leave the
// analytic gradient in every parameter's grad (grads are zeroed beforehand).
using LossFn = std::function<double(bool with_grad)>;

struct GradCheckOptions {
    double eps = 1e-5;
    // |a - n| / max(|a| + |n|, floor); keeps pure round-off on ~0 gradients
    // from reading as a large relative error.
    double denominator_floor = 1e-6;
    // Check at most this many entries per parameter (0 = all), spread evenly.
    std::size_t max_entries = 0;
    // Step sizes tried, in order, for an entry that fails at eps. A wrong
    // gradient fails at every step; a ReLU/max-pool decision flipping
    // inside +-eps, or round-off on a ~zero gradient, does not.
    std::vector<double> fallback_eps;
    double tolerance = 1e-4; // what "fails" means for the fallback
};

// Central differences (f(w + eps) - f(w - eps)) / 2 eps against the analytic
// gradient, one report entry per parameter.
GradCheckReport finite_diff_check(const LossFn& loss, const ParameterList& params, const GradCheckOptions& opts = {});

double relative_error(double analytic, double numeric, double floor = 1e-6);

} // namespace karte
