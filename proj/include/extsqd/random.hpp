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
#include <random>

namespace extsqd {

/// Seeds a 64-bit Mersenne Twister from (master seed, stream id).
///
/// Streams are decorrelated through SplitMix64 so that stream k of a run
/// does not depend on how many values other streams consumed. Uniform
/// helpers are written out explicitly because the standard distributions
/// are implementation-defined.
class Rng {
   public:
    Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
        std::seed_seq seq{static_cast<std::uint32_t>(splitmix(s)), static_cast<std::uint32_t>(splitmix(s)),
                          static_cast<std::uint32_t>(splitmix(s)), static_cast<std::uint32_t>(splitmix(s))};
        engine_.seed(seq);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), n >= 1, without modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
        std::uint64_t x;
        do x = engine_();
        while (x >= limit);
        return x % n;
    }

    static std::uint64_t splitmix(std::uint64_t& state) {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

   private:
    std::mt19937_64 engine_;
};

}  // namespace extsqd
