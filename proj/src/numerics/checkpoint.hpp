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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tensor.hpp"

// Binary checkpoint layout (all integers little-endian):
//
//   "KCPT" | u16 version
//   u32 count, then per parameter:
//       u32 name_len | name (UTF-8) | u32 rank | rank x u32 dims | u8 dtype (1 = f32)
//   raw f32 values of every parameter, in manifest order
//   u8 has_moments; if 1, per parameter: u64 step_count | f32 first moment | f32 second moment
//   u32 metadata count, then per entry: u32 key_len | key | u32 value_len | value
namespace karte {

inline constexpr std::uint16_t kCheckpointVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;

struct Checkpoint {
    std::vector<Parameter> params;
    bool has_moments = false;
    std::map<std::string, std::string> metadata;

    const Parameter* find(const std::string& name) const;
};

std::vector<std::uint8_t> serialize_checkpoint(const std::vector<const Parameter*>& params, bool with_moments,
                                               const std::map<std::string, std::string>& metadata);
Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<const Parameter*>& params,
                     bool with_moments, const std::map<std::string, std::string>& metadata);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies values (and moments, when present) into every target whose name
// starts with `prefix`. Missing names or shape mismatches throw.
void restore_parameters(const Checkpoint& ckpt, const ParameterList& targets, const std::string& prefix = "");

// Round every value to single precision, as a save/load cycle would.
void round_to_storage_precision(const ParameterList& params);

} // namespace karte
