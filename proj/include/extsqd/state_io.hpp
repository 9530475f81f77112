// Copyright 2026 The extsqd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "extsqd/pipelines.hpp"

namespace extsqd {

inline constexpr std::uint32_t kStateFileVersion = 1;

/// Binary state file, all integers and doubles little-endian:
///   "EXTSQDST", version u32, M i32, N_alpha i32, N_beta i32, n_roots u64,
///   |basis| u64, mask words u32, method length u32 + bytes,
///   basis (alpha words then beta words per configuration), coefficients
///   (column-major f64), energies (f64), converged flags (u8),
///   FNV-1a 64 checksum of everything before it.
std::vector<std::uint8_t> serialize_state(const CIState& state);
/// Throws InputError on a bad magic, version, size or checksum.
CIState deserialize_state(const std::vector<std::uint8_t>& bytes);

void persist_state(const std::string& path, const CIState& state);
CIState load_state(const std::string& path);

}  // namespace extsqd
