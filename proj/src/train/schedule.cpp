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

#include "schedule.hpp"

#include <limits>

#include "../error.hpp"

namespace karte {

ScheduleState replay_schedule(const std::vector<double>& history, std::size_t plateau_patience) {
    if (plateau_patience == 0) fail(ErrorCode::InvalidArgument, "schedule: plateau patience must be positive");
    ScheduleState s;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < history.size(); ++e) {
        s.improved_last = e > 0 && history[e] > best;
        s.decayed_last = false;
        if (s.improved_last) {
            s.plateau_counter = 0;
            s.stale_epochs = 0;
        } else {
            ++s.plateau_counter;
            ++s.stale_epochs;
            if (s.plateau_counter == plateau_patience) {
                ++s.decays;
                s.decayed_last = true;
                s.plateau_counter = 0;
            }
        }
        if (history[e] > best) best = history[e];
    }
    return s;
}

LearningRates lr_plateau_update(const std::vector<double>& history, std::size_t patience, double factor,
                                LearningRates current) {
    if (history.empty()) fail(ErrorCode::InvalidArgument, "lr_plateau_update: empty history");
    if (!(factor > 0.0 && factor < 1.0)) fail(ErrorCode::InvalidArgument, "lr_plateau_update: factor outside (0,1)");
    if (replay_schedule(history, patience).decayed_last) {
        current.encoder *= factor;
        current.decoder *= factor;
    }
    return current;
}

StopDecision early_stop_check(const std::vector<double>& history, std::size_t patience, std::size_t max_epochs) {
    if (max_epochs > 0 && history.size() >= max_epochs) return StopDecision::EpochCap;
    if (patience > 0 && replay_schedule(history, patience).stale_epochs >= patience) return StopDecision::Stagnated;
    return StopDecision::Continue;
}

const char* stop_decision_name(StopDecision d) {
    switch (d) {
    case StopDecision::Continue: return "continue";
    case StopDecision::Stagnated: return "stagnated";
    case StopDecision::EpochCap: return "epoch_cap";
    case StopDecision::TargetReached: return "target_reached";
    }
    return "?";
}

} // namespace karte
