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

#include <algorithm>
#include <random>
#include <vector>

#include "extsqd/configuration.hpp"
#include "extsqd/hamiltonian.hpp"

namespace extsqd::testing {

/// Random real Hamiltonian with full 8-fold symmetry and entries in [-1, 1].
inline Hamiltonian random_hamiltonian(int m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Hamiltonian h(m);
    h.set_core_energy(u(rng));
    for (int p = 0; p < m; ++p)
        for (int r = 0; r <= p; ++r) h.set_one_body(p, r, u(rng));
    for (int p = 0; p < m; ++p)
        for (int r = 0; r <= p; ++r)
            for (int q = 0; q < m; ++q)
                for (int s = 0; s <= q; ++s) {
                    if (q * (q + 1) / 2 + s > p * (p + 1) / 2 + r) continue;
                    h.set_eri(p, r, q, s, 0.5 * u(rng));
                }
    return h;
}

inline Configuration random_configuration(const Sector& s, std::mt19937_64& rng) {
    Configuration c;
    for (Spin sp : {Spin::Alpha, Spin::Beta}) {
        std::vector<int> orbs(static_cast<std::size_t>(s.n_orbitals));
        for (int i = 0; i < s.n_orbitals; ++i) orbs[static_cast<std::size_t>(i)] = i;
        std::shuffle(orbs.begin(), orbs.end(), rng);
        const int n = sp == Spin::Alpha ? s.n_alpha : s.n_beta;
        for (int i = 0; i < n; ++i) c.mask(sp).set(static_cast<std::size_t>(orbs[static_cast<std::size_t>(i)]));
    }
    return c;
}

inline Configuration config(const char* bits) { return Configuration::parse(bits); }

}  // namespace extsqd::testing
