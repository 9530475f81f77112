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

#include "extsqd/observables.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "extsqd/error.hpp"

namespace extsqd {

namespace {

FermionOperator raising(const std::vector<int>& orbitals) {
    FermionOperator op;
    for (int p : orbitals) op.push_back({1.0, ExcitationOperator::single({p, Spin::Alpha}, {p, Spin::Beta})});
    return op;
}

FermionOperator lowering(const std::vector<int>& orbitals) {
    FermionOperator op;
    for (int p : orbitals) op.push_back({1.0, ExcitationOperator::single({p, Spin::Beta}, {p, Spin::Alpha})});
    return op;
}

std::vector<int> all_orbitals(int m) {
    std::vector<int> out(static_cast<std::size_t>(m));
    for (int p = 0; p < m; ++p) out[static_cast<std::size_t>(p)] = p;
    return out;
}

// <Sz(g)> restricted to one configuration.
double sz_of(const Configuration& x, const std::vector<int>& orbitals) {
    double s = 0.0;
    for (int p : orbitals) {
        const auto q = static_cast<std::size_t>(p);
        s += 0.5 * (static_cast<double>(x.alpha.test(q)) - static_cast<double>(x.beta.test(q)));
    }
    return s;
}

}  // namespace

void validate_group(const OrbitalGroup& g, int n_orbitals) {
    if (g.orbitals.empty()) throw InputError("orbital group '" + g.name + "' is empty");
    std::set<int> seen;
    for (int p : g.orbitals) {
        if (p < 0 || p >= n_orbitals)
            throw InputError("orbital group '" + g.name + "' has index " + std::to_string(p) + " outside [0, M)");
        if (!seen.insert(p).second) throw InputError("orbital group '" + g.name + "' repeats index " + std::to_string(p));
    }
}

double total_s_squared(const SparseState& v) {
    const Sector& s = v.sector();
    const SparseState up = apply_operator(raising(all_orbitals(s.n_orbitals)), v);
    const double sz = 0.5 * (s.n_alpha - s.n_beta);
    const double n2 = v.dot(v);
    return up.dot(up) + sz * (sz + 1.0) * n2;
}

std::pair<double, double> group_charges(const SparseState& v, const OrbitalGroup& g) {
    validate_group(g, v.sector().n_orbitals);
    double up = 0.0, down = 0.0;
    for (const auto& [x, c] : v.entries()) {
        const double w = c * c;
        for (int p : g.orbitals) {
            if (x.alpha.test(static_cast<std::size_t>(p))) up += w;
            if (x.beta.test(static_cast<std::size_t>(p))) down += w;
        }
    }
    return {up, down};
}

std::array<double, 3> local_spin(const SparseState& v, const OrbitalGroup& g) {
    validate_group(g, v.sector().n_orbitals);
    double z = 0.0;
    for (const auto& [x, c] : v.entries()) z += c * c * sz_of(x, g.orbitals);
    // S+ and S- change the sector, so these overlaps vanish for sector-pure
    // states; they are evaluated anyway to keep the definition explicit.
    const double plus = v.dot(apply_operator(raising(g.orbitals), v));
    const double minus = v.dot(apply_operator(lowering(g.orbitals), v));
    return {0.5 * (plus + minus), 0.5 * (plus - minus), z};
}

SpinCorrelation spin_correlation(const SparseState& v, const OrbitalGroup& g1, const OrbitalGroup& g2) {
    validate_group(g1, v.sector().n_orbitals);
    validate_group(g2, v.sector().n_orbitals);
    double zz = 0.0;
    for (const auto& [x, c] : v.entries()) zz += c * c * sz_of(x, g1.orbitals) * sz_of(x, g2.orbitals);
    const SparseState down1 = apply_operator(lowering(g1.orbitals), v);
    const SparseState down2 = apply_operator(lowering(g2.orbitals), v);
    const SparseState up1 = apply_operator(raising(g1.orbitals), v);
    const SparseState up2 = apply_operator(raising(g2.orbitals), v);
    SpinCorrelation out;
    out.raw = zz + 0.5 * (down1.dot(down2) + up1.dot(up2));
    const auto s1 = local_spin(v, g1);
    const auto s2 = local_spin(v, g2);
    // The y components are imaginary parts of a real state's expectation and
    // enter the dot product as -(i<Sy1>)(i<Sy2>); both are zero here.
    out.connected = out.raw - (s1[0] * s2[0] + s1[1] * s2[1] + s1[2] * s2[2]);
    return out;
}

OccupancyProfile occupancy_profile(const SparseState& v) {
    const auto m = static_cast<std::size_t>(v.sector().n_orbitals);
    OccupancyProfile out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
    for (const auto& [x, c] : v.entries()) {
        const double w = c * c;
        for (int p : x.alpha.ones()) out.alpha[static_cast<std::size_t>(p)] += w;
        for (int p : x.beta.ones()) out.beta[static_cast<std::size_t>(p)] += w;
    }
    for (std::size_t p = 0; p < m; ++p) out.total[p] = out.alpha[p] + out.beta[p];
    return out;
}

std::vector<RootLabel> classify_roots(const std::vector<double>& s_squared) {
    std::vector<RootLabel> out;
    int singlets = 0, triplets = 0, mixed = 0;
    for (double s2 : s_squared) {
        RootLabel r;
        r.s_squared = s2;
        if (std::abs(s2) < 0.5) {
            r.kind = "singlet";
            r.label = "S" + std::to_string(singlets++);
        } else if (std::abs(s2 - 2.0) < 0.5) {
            r.kind = "triplet";
            r.label = "T" + std::to_string(++triplets);
        } else {
            char buf[48];
            std::snprintf(buf, sizeof buf, "mixed(%.4f)", s2);
            r.kind = buf;
            r.label = "M" + std::to_string(++mixed);
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace extsqd
