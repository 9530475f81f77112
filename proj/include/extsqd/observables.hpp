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

#include <array>
#include <string>
#include <vector>

#include "extsqd/hamiltonian.hpp"

namespace extsqd {

/// A named set of spatial orbitals, e.g. the d shell of one metal centre.
struct OrbitalGroup {
    std::string name;
    std::vector<int> orbitals;
};

/// Throws InputError for an empty group, repeated or out-of-range indices.
void validate_group(const OrbitalGroup& g, int n_orbitals);

/// <S^2> = |S+ v|^2 + Sz (Sz + 1) |v|^2 by exact sparse application.
double total_s_squared(const SparseState& v);

/// (<N_up>, <N_down>) summed over the group's orbitals.
std::pair<double, double> group_charges(const SparseState& v, const OrbitalGroup& g);

/// (<S_x>, <S_y>, <S_z>) of the group. The state is real, so <S_y> vanishes.
std::array<double, 3> local_spin(const SparseState& v, const OrbitalGroup& g);

struct SpinCorrelation {
    double raw = 0.0;        // <S1 . S2>
    double connected = 0.0;  // <S1 . S2> - <S1> . <S2>
};

/// S1.S2 = S1z S2z + (S1+ S2- + S1- S2+) / 2, with
/// <S1+ S2-> = <S1- v | S2- v> and <S1- S2+> = <S1+ v | S2+ v>.
SpinCorrelation spin_correlation(const SparseState& v, const OrbitalGroup& g1, const OrbitalGroup& g2);

struct OccupancyProfile {
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> total;
};

/// Per-orbital <n_alpha>, <n_beta> and their sum.
OccupancyProfile occupancy_profile(const SparseState& v);

struct RootLabel {
    double s_squared = 0.0;
    std::string kind;   // "singlet", "triplet" or "mixed(<S^2>)"
    std::string label;  // S0, S1, ..., T1, T2, ... or M1, M2, ...
};

/// Labels roots (given in ascending energy) by <S^2>: singlet within 0.5 of
/// 0, triplet within 0.5 of 2, otherwise mixed. Singlets count from S0,
/// triplets from T1, mixed roots from M1; ties keep input order.
std::vector<RootLabel> classify_roots(const std::vector<double>& s_squared);

}  // namespace extsqd
