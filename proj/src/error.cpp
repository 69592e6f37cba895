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

#include "error.hpp"

namespace karte {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::Shape: return "SHAPE";
        case ErrorCode::Io: return "IO";
        case ErrorCode::Format: return "FORMAT";
        case ErrorCode::Numeric: return "NUMERIC";
        case ErrorCode::State: return "STATE";
        case ErrorCode::Internal: return "INTERNAL";
    }
    return "UNKNOWN";
}

} // namespace karte
