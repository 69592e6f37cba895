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

#include <cstddef>
#include <vector>

namespace karte {

// An epoch counts as an improvement only when its validation score strictly
// exceeds every earlier epoch's; the first epoch has nothing to beat.
struct ScheduleState {
    std::size_t plateau_counter = 0; // reset on improvement and after each decay
    std::size_t stale_epochs = 0;    // reset on improvement only
    std::size_t decays = 0;
    bool decayed_last = false;       // the last epoch triggered a decay
    bool improved_last = false;
};

ScheduleState replay_schedule(const std::vector<double>& history, std::size_t plateau_patience);

struct LearningRates {
    double encoder = 0.0;
    double decoder = 0.0;
};

// Applies the decay (both rates times `factor`) when the newest history
// entry completes a run of `patience` non-improving epochs.
LearningRates lr_plateau_update(const std::vector<double>& history, std::size_t patience, double factor,
                                LearningRates current);

enum class StopDecision { Continue, Stagnated, EpochCap, TargetReached };

// patience 0 disables the stagnation rule.
StopDecision early_stop_check(const std::vector<double>& history, std::size_t patience, std::size_t max_epochs);

const char* stop_decision_name(StopDecision d);

} // namespace karte
