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

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace karte {

double relative_error(double analytic, double numeric, double floor) {
    return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

double GradCheckReport::max_rel_error() const {
    double worst = 0.0;
    for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
    return worst;
}

std::string GradCheckReport::to_text(double tolerance) const {
    std::ostringstream os;
    char buf[256];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%-28s max_rel_err=%.3e at[%zu] analytic=% .6e numeric=% .6e retried=%zu %s\n",
                      e.name.c_str(), e.max_rel_error, e.worst_index, e.analytic, e.numeric, e.retried,
                      e.max_rel_error < tolerance ? "ok" : "FAIL");
        os << buf;
    }
    return os.str();
}

GradCheckReport finite_diff_check(const LossFn& loss, const ParameterList& params, const GradCheckOptions& opts) {
    zero_grads(params);
    loss(true);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto* p : params) analytic.emplace_back(p->grad.values());

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        GradCheckEntry entry{p.name};
        const std::size_t n = p.size();
        const std::size_t stride = (opts.max_entries == 0 || n <= opts.max_entries) ? 1 : n / opts.max_entries;
        for (std::size_t i = 0; i < n; i += stride) {
            const double orig = p.value[i];
            auto central = [&](double eps) {
                p.value[i] = orig + eps;
                const double up = loss(false);
                p.value[i] = orig - eps;
                const double down = loss(false);
                p.value[i] = orig;
                return (up - down) / (2.0 * eps);
            };
            double numeric = central(opts.eps);
            double err = relative_error(analytic[pi][i], numeric, opts.denominator_floor);
            if (err >= opts.tolerance && !opts.fallback_eps.empty()) {
                ++entry.retried;
                for (double eps : opts.fallback_eps) {
                    const double alt = central(eps);
                    const double alt_err = relative_error(analytic[pi][i], alt, opts.denominator_floor);
                    if (alt_err < err) {
                        err = alt_err;
                        numeric = alt;
                    }
                    if (err < opts.tolerance) break;
                }
            }
            if (err >= entry.max_rel_error) {
                entry.max_rel_error = err;
                entry.worst_index = i;
                entry.analytic = analytic[pi][i];
                entry.numeric = numeric;
            }
        }
        report.entries.push_back(entry);
    }
    // Leave the analytic gradient in place for callers that inspect it.
    for (std::size_t pi = 0; pi < params.size(); ++pi)
        std::copy(analytic[pi].begin(), analytic[pi].end(), params[pi]->grad.ptr());
    return report;
}

} // namespace karte
