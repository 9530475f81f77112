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
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "extsqd/configuration.hpp"
#include "extsqd/hamiltonian.hpp"

namespace extsqd {

/// Multiset of measured bitstrings over 2M spin-orbitals.
class SampleSet {
   public:
    SampleSet() = default;
    explicit SampleSet(int n_orbitals);

    int n_orbitals() const { return n_orbitals_; }
    /// Adds `multiplicity` copies of x. Throws InputError for bits at or above M.
    void add(const Configuration& x, std::uint64_t multiplicity = 1);

    const std::map<Configuration, std::uint64_t>& counts() const { return counts_; }
    std::uint64_t total() const { return total_; }
    std::size_t distinct() const { return counts_.size(); }
    bool empty() const { return total_ == 0; }

    bool operator==(const SampleSet&) const = default;

   private:
    int n_orbitals_ = 0;
    std::map<Configuration, std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// One bitstring of length 2M per line (alpha block then beta block),
/// optionally followed by a positive multiplicity.
SampleSet read_samples(std::string_view text, int n_orbitals);
SampleSet read_samples_file(const std::string& path, int n_orbitals);
void write_samples(std::ostream& out, const SampleSet& samples);

/// n draws, each uniform over the configurations of s.
SampleSet sample_uniform_sector(const Sector& s, std::uint64_t n, std::uint64_t seed);

/// n draws from |amplitude|^2, then every bit flipped independently with
/// probability noise_rate. Throws InputError unless |v| = 1 to 1e-8.
SampleSet sample_state(const SparseState& v, std::uint64_t n, double noise_rate, std::uint64_t seed);

struct ParticleNumberStats {
    std::uint64_t in_sector = 0;
    std::uint64_t total = 0;
    double p_hw = 0.0;
    double ci95_low = 0.0;
    double ci95_high = 0.0;
    double p_unif = 0.0;
};

/// Probability that a uniformly random 2M-bit string lies in s.
double uniform_sector_probability(const Sector& s);

/// In-sector fraction with a Wilson 95% interval. Throws InputError when empty.
ParticleNumberStats particle_number_stats(const SampleSet& samples, const Sector& s);

/// Mean orbital occupancies used to guide configuration recovery.
struct RecoveryModel {
    std::vector<double> occ_alpha;
    std::vector<double> occ_beta;

    /// Every orbital filled to N_sigma / M.
    static RecoveryModel flat(const Sector& s);
    /// Throws InputError unless both vectors have length M with entries in [0, 1].
    void validate(int n_orbitals) const;
};

/// Smoothing added to every repair weight.
inline constexpr double kRecoverySmoothing = 1e-6;

/// Repairs out-of-sector samples bit by bit, per spin channel: excess
/// electrons are removed from orbital p with weight (1 - occ[p]) + delta,
/// missing ones are added with weight occ[p] + delta. Each copy of a
/// repeated sample is repaired independently. In-sector samples pass through.
SampleSet recover_configurations(const SampleSet& samples, const RecoveryModel& model, const Sector& s,
                                 std::uint64_t seed);

/// Occupancies sum_x |c_x|^2 x_{p sigma} of a normalized state.
RecoveryModel update_model(const SparseState& ground);

struct BatchOptions {
    /// Draw with probability proportional to multiplicity (else uniform over distinct keys).
    bool weighted = true;
    bool include_reference = true;
};

/// K independent batches of up to B distinct configurations drawn without
/// replacement, each with the aufbau reference added and then closed under
/// spin inversion (closure is skipped when N_alpha != N_beta). Batch k uses
/// seed stream k. Throws InputError on an empty or out-of-sector set.
std::vector<SubspaceBasis> make_batches(const SampleSet& recovered, const Sector& s, std::size_t n_batches,
                                        std::size_t batch_size, std::uint64_t seed, BatchOptions options = {});

}  // namespace extsqd
