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

#include "extsqd/configuration.hpp"

#include <algorithm>
#include <cmath>

#include "extsqd/error.hpp"

namespace extsqd {

Bitmask Bitmask::lowest(std::size_t n) {
    Bitmask m;
    for (std::size_t p = 0; p < n; ++p) m.set(p);
    return m;
}

bool Bitmask::any_at_or_above(std::size_t n) const {
    for (std::size_t i = 0; i < kMaskWords; ++i) {
        const std::size_t lo = i * 64;
        if (lo + 64 <= n) continue;
        std::uint64_t w = words_[i];
        if (n > lo) w &= ~((std::uint64_t{1} << (n - lo)) - 1);
        if (w) return true;
    }
    return false;
}

std::vector<int> Bitmask::ones() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < kMaskWords; ++i) {
        std::uint64_t w = words_[i];
        while (w) {
            out.push_back(static_cast<int>(i * 64 + std::countr_zero(w)));
            w &= w - 1;
        }
    }
    return out;
}

std::vector<int> Bitmask::zeros(std::size_t n) const {
    std::vector<int> out;
    for (std::size_t p = 0; p < n; ++p)
        if (!test(p)) out.push_back(static_cast<int>(p));
    return out;
}

Configuration Configuration::parse(std::string_view bits) {
    if (bits.size() % 2 != 0 || bits.size() / 2 > kMaxOrbitals)
        throw InputError("configuration string has invalid length " + std::to_string(bits.size()));
    const std::size_t m = bits.size() / 2;
    Configuration c;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const char ch = bits[i];
        if (ch != '0' && ch != '1')
            throw InputError("non-binary character in configuration string '" + std::string(bits) + "'");
        if (ch == '1') {
            if (i < m)
                c.alpha.set(i);
            else
                c.beta.set(i - m);
        }
    }
    return c;
}

std::string Configuration::to_string(std::size_t n_orbitals) const {
    std::string s(2 * n_orbitals, '0');
    for (std::size_t p = 0; p < n_orbitals; ++p) {
        if (alpha.test(p)) s[p] = '1';
        if (beta.test(p)) s[n_orbitals + p] = '1';
    }
    return s;
}

void Sector::validate() const {
    if (n_orbitals < 0 || static_cast<std::size_t>(n_orbitals) > kMaxOrbitals)
        throw InputError("orbital count " + std::to_string(n_orbitals) + " outside [0, " +
                         std::to_string(kMaxOrbitals) + "]");
    if (n_alpha < 0 || n_alpha > n_orbitals || n_beta < 0 || n_beta > n_orbitals)
        throw InputError("electron counts (" + std::to_string(n_alpha) + "," + std::to_string(n_beta) +
                         ") do not fit in " + std::to_string(n_orbitals) + " orbitals");
}

double Sector::dimension() const { return binomial(n_orbitals, n_alpha) * binomial(n_orbitals, n_beta); }

Configuration Sector::reference() const {
    return {Bitmask::lowest(static_cast<std::size_t>(n_alpha)), Bitmask::lowest(static_cast<std::size_t>(n_beta))};
}

std::pair<int, int> hamming_weights(const Configuration& x) { return {x.alpha.count(), x.beta.count()}; }

bool in_sector(const Configuration& x, const Sector& s) {
    const auto m = static_cast<std::size_t>(s.n_orbitals);
    if (x.alpha.any_at_or_above(m) || x.beta.any_at_or_above(m)) return false;
    return x.alpha.count() == s.n_alpha && x.beta.count() == s.n_beta;
}

ExcitationOperator::ExcitationOperator(std::vector<SpinOrbital> creates, std::vector<SpinOrbital> annihilates)
    : creates_(std::move(creates)), annihilates_(std::move(annihilates)) {
    if (creates_.size() != annihilates_.size())
        throw InputError("excitation operator is not particle-conserving");
    auto distinct = [](std::vector<SpinOrbital> v) {
        std::sort(v.begin(), v.end());
        return std::adjacent_find(v.begin(), v.end()) == v.end();
    };
    if (!distinct(creates_) || !distinct(annihilates_))
        throw InputError("excitation operator repeats a spin-orbital");
    for (const auto& so : creates_)
        if (so.orbital < 0) throw InputError("negative orbital index in excitation operator");
    for (const auto& so : annihilates_)
        if (so.orbital < 0) throw InputError("negative orbital index in excitation operator");
}

std::pair<int, int> ExcitationOperator::spin_shift() const {
    int da = 0, db = 0;
    for (const auto& so : creates_) (so.spin == Spin::Alpha ? da : db) += 1;
    for (const auto& so : annihilates_) (so.spin == Spin::Alpha ? da : db) -= 1;
    return {da, db};
}

bool ExcitationOperator::spin_preserving() const { return spin_shift() == std::pair{0, 0}; }

int ExcitationOperator::max_orbital() const {
    int m = -1;
    for (const auto& so : creates_) m = std::max(m, so.orbital);
    for (const auto& so : annihilates_) m = std::max(m, so.orbital);
    return m;
}

ExcitationResult apply_excitation(const ExcitationOperator& op, const Configuration& y, int n_orbitals) {
    if (op.max_orbital() >= n_orbitals)
        throw InputError("excitation operator index " + std::to_string(op.max_orbital()) +
                         " out of range for " + std::to_string(n_orbitals) + " orbitals");
    ExcitationResult r{1, y};
    const auto& ann = op.annihilates();
    for (auto it = ann.rbegin(); it != ann.rend(); ++it) {
        const int s = ladder(r.config, *it, false);
        if (s == 0) return {};
        r.sign *= s;
    }
    const auto& cre = op.creates();
    for (auto it = cre.rbegin(); it != cre.rend(); ++it) {
        const int s = ladder(r.config, *it, true);
        if (s == 0) return {};
        r.sign *= s;
    }
    return r;
}

SubspaceBasis::SubspaceBasis(std::vector<Configuration> configs) : configs_(std::move(configs)) {
    std::sort(configs_.begin(), configs_.end());
    configs_.erase(std::unique(configs_.begin(), configs_.end()), configs_.end());
    index_.reserve(configs_.size());
    for (std::size_t i = 0; i < configs_.size(); ++i) index_.emplace(configs_[i], i);
}

SubspaceBasis spin_inversion_closure(std::span<const Configuration> configs) {
    std::vector<Configuration> out;
    out.reserve(2 * configs.size());
    if (!configs.empty()) {
        const auto [na, nb] = hamming_weights(configs.front());
        if (na != nb) throw InputError("spin-inversion closure requires N_alpha == N_beta");
        for (const auto& c : configs) {
            if (hamming_weights(c) != std::pair{na, nb})
                throw InputError("spin-inversion closure input mixes particle-number sectors");
            out.push_back(c);
            out.push_back(c.spin_flipped());
        }
    }
    return SubspaceBasis(std::move(out));
}

std::vector<Bitmask> combinations(int n, int k) {
    std::vector<Bitmask> out;
    if (k < 0 || k > n) return out;
    // Lexicographic over index tuples i_0 < ... < i_{k-1}; output is then sorted
    // as integers.
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        Bitmask m;
        for (int i : idx) m.set(static_cast<std::size_t>(i));
        out.push_back(m);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    std::sort(out.begin(), out.end());
    return out;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r) < 9.0e15 ? std::round(r) : r;
}

SubspaceBasis enumerate_sector(const Sector& s, double cap) {
    s.validate();
    if (s.dimension() > cap)
        throw InputError("sector dimension " + std::to_string(s.dimension()) + " exceeds enumeration cap " +
                         std::to_string(cap));
    const auto as = combinations(s.n_orbitals, s.n_alpha);
    const auto bs = combinations(s.n_orbitals, s.n_beta);
    std::vector<Configuration> out;
    out.reserve(as.size() * bs.size());
    for (const auto& a : as)
        for (const auto& b : bs) out.push_back({a, b});
    return SubspaceBasis(std::move(out));
}

}  // namespace extsqd
