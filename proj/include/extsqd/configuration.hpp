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
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace extsqd {

/// Number of 64-bit words backing one spin channel.
inline constexpr std::size_t kMaskWords = 2;
/// Largest supported number of spatial orbitals.
inline constexpr std::size_t kMaxOrbitals = 64 * kMaskWords;

enum class Spin : std::uint8_t { Alpha = 0, Beta = 1 };

/// Occupation bitmask over the spatial orbitals of one spin channel.
///
/// Bit p is orbital p. Comparison treats the mask as an unsigned integer,
/// most significant word first.
class Bitmask {
   public:
    constexpr Bitmask() = default;
    static Bitmask from_word(std::uint64_t w) {
        Bitmask m;
        m.words_[0] = w;
        return m;
    }
    /// Mask with orbitals 0..n-1 set.
    static Bitmask lowest(std::size_t n);

    bool test(std::size_t p) const { return (words_[p >> 6] >> (p & 63)) & 1u; }
    void set(std::size_t p) { words_[p >> 6] |= std::uint64_t{1} << (p & 63); }
    void reset(std::size_t p) { words_[p >> 6] &= ~(std::uint64_t{1} << (p & 63)); }
    void flip(std::size_t p) { words_[p >> 6] ^= std::uint64_t{1} << (p & 63); }

    int count() const {
        int c = 0;
        for (auto w : words_) c += std::popcount(w);
        return c;
    }
    /// Number of set bits strictly below position p.
    int count_below(std::size_t p) const {
        const std::size_t word = p >> 6;
        const std::uint64_t low = (std::uint64_t{1} << (p & 63)) - 1;
        int c = std::popcount(words_[word] & low);
        for (std::size_t i = 0; i < word; ++i) c += std::popcount(words_[i]);
        return c;
    }
    bool any_at_or_above(std::size_t n) const;
    bool none() const {
        for (auto w : words_)
            if (w) return false;
        return true;
    }
    /// Indices of set bits in ascending order.
    std::vector<int> ones() const;
    /// Indices of clear bits below n in ascending order.
    std::vector<int> zeros(std::size_t n) const;

    Bitmask operator^(const Bitmask& o) const {
        Bitmask r;
        for (std::size_t i = 0; i < kMaskWords; ++i) r.words_[i] = words_[i] ^ o.words_[i];
        return r;
    }
    Bitmask operator&(const Bitmask& o) const {
        Bitmask r;
        for (std::size_t i = 0; i < kMaskWords; ++i) r.words_[i] = words_[i] & o.words_[i];
        return r;
    }

    const std::array<std::uint64_t, kMaskWords>& words() const { return words_; }
    std::array<std::uint64_t, kMaskWords>& words() { return words_; }

    bool operator==(const Bitmask&) const = default;
    std::strong_ordering operator<=>(const Bitmask& o) const {
        for (std::size_t i = kMaskWords; i-- > 0;)
            if (auto c = words_[i] <=> o.words_[i]; c != 0) return c;
        return std::strong_ordering::equal;
    }

   private:
    std::array<std::uint64_t, kMaskWords> words_{};
};

/// A Slater determinant: one occupation mask per spin channel.
///
/// The orbital count M is implicit. Ordering is lexicographic on
/// (alpha, beta) with each mask compared as an unsigned integer.
struct Configuration {
    Bitmask alpha;
    Bitmask beta;

    const Bitmask& mask(Spin s) const { return s == Spin::Alpha ? alpha : beta; }
    Bitmask& mask(Spin s) { return s == Spin::Alpha ? alpha : beta; }

    /// Parse the 2M-character text form: index p is (p, alpha), index M+p is (p, beta).
    static Configuration parse(std::string_view bits);
    std::string to_string(std::size_t n_orbitals) const;

    /// alpha and beta swapped.
    Configuration spin_flipped() const { return {beta, alpha}; }

    bool operator==(const Configuration&) const = default;
    std::strong_ordering operator<=>(const Configuration&) const = default;
};

struct ConfigurationHash {
    std::size_t operator()(const Configuration& c) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        auto mix = [&h](std::uint64_t w) {
            w ^= w >> 33;
            w *= 0xff51afd7ed558ccdull;
            w ^= w >> 33;
            h = (h ^ w) * 0x100000001b3ull + 0x9e3779b97f4a7c15ull;
        };
        for (auto w : c.alpha.words()) mix(w);
        for (auto w : c.beta.words()) mix(w);
        return static_cast<std::size_t>(h);
    }
};

struct Sector {
    int n_orbitals = 0;
    int n_alpha = 0;
    int n_beta = 0;

    /// Throws InputError unless 0 <= N_sigma <= M <= kMaxOrbitals.
    void validate() const;
    /// Number of configurations, C(M,Na)*C(M,Nb), as a double.
    double dimension() const;
    /// Aufbau reference: lowest Na alpha and Nb beta orbitals occupied.
    Configuration reference() const;

    bool operator==(const Sector&) const = default;
};

std::pair<int, int> hamming_weights(const Configuration& x);
bool in_sector(const Configuration& x, const Sector& s);

/// One fermionic ladder index: spatial orbital plus spin.
struct SpinOrbital {
    int orbital = 0;
    Spin spin = Spin::Alpha;
    bool operator==(const SpinOrbital&) const = default;
    auto operator<=>(const SpinOrbital&) const = default;
};

/// Normal-ordered product a+_{c0} a+_{c1} ... a_{a0} a_{a1} ...
///
/// Acting on a ket, the rightmost annihilator is applied first. Rank 0 is the
/// identity. Spin flips (a+_{p alpha} a_{q beta}) are representable; callers
/// that need spin conservation check spin_preserving().
class ExcitationOperator {
   public:
    ExcitationOperator() = default;
    /// Throws InputError on unequal lengths or repeated spin-orbitals within a list.
    ExcitationOperator(std::vector<SpinOrbital> creates, std::vector<SpinOrbital> annihilates);

    static ExcitationOperator identity() { return {}; }
    static ExcitationOperator single(SpinOrbital to, SpinOrbital from) { return {{to}, {from}}; }

    const std::vector<SpinOrbital>& creates() const { return creates_; }
    const std::vector<SpinOrbital>& annihilates() const { return annihilates_; }
    std::size_t rank() const { return creates_.size(); }
    bool spin_preserving() const;
    /// Net change (dNa, dNb) of the spin populations.
    std::pair<int, int> spin_shift() const;
    int max_orbital() const;

    bool operator==(const ExcitationOperator&) const = default;
    auto operator<=>(const ExcitationOperator&) const = default;

   private:
    std::vector<SpinOrbital> creates_;
    std::vector<SpinOrbital> annihilates_;
};

/// Result of acting with an excitation operator on a determinant.
struct ExcitationResult {
    int sign = 0;  // 0 when the operator annihilates the state
    Configuration config;
    explicit operator bool() const { return sign != 0; }
};

/// Jordan-Wigner ladder action: (p, alpha) has global index p and (p, beta)
/// has global index M+p; each ladder step contributes (-1)^(occupied below).
/// Throws InputError if any orbital index is >= n_orbitals.
ExcitationResult apply_excitation(const ExcitationOperator& op, const Configuration& y,
                                  int n_orbitals);

/// Single ladder step on a determinant; returns sign 0 if Pauli-blocked.
/// Fast path used by the Hamiltonian kernels; no bounds checks.
inline int ladder(Configuration& x, SpinOrbital so, bool create) {
    Bitmask& m = x.mask(so.spin);
    const auto p = static_cast<std::size_t>(so.orbital);
    if (m.test(p) == create) return 0;
    int parity = m.count_below(p);
    if (so.spin == Spin::Beta) parity += x.alpha.count();
    if (create)
        m.set(p);
    else
        m.reset(p);
    return (parity & 1) ? -1 : 1;
}

/// Canonically ordered, duplicate-free configuration set with a membership index.
class SubspaceBasis {
   public:
    SubspaceBasis() = default;
    /// Sorts and deduplicates.
    explicit SubspaceBasis(std::vector<Configuration> configs);

    std::size_t size() const { return configs_.size(); }
    bool empty() const { return configs_.empty(); }
    const Configuration& operator[](std::size_t i) const { return configs_[i]; }
    std::span<const Configuration> configs() const { return configs_; }
    auto begin() const { return configs_.begin(); }
    auto end() const { return configs_.end(); }

    /// Position of x, or -1.
    std::ptrdiff_t index_of(const Configuration& x) const {
        auto it = index_.find(x);
        return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
    }
    bool contains(const Configuration& x) const { return index_.count(x) != 0; }

    bool operator==(const SubspaceBasis& o) const { return configs_ == o.configs_; }

   private:
    std::vector<Configuration> configs_;
    std::unordered_map<Configuration, std::size_t, ConfigurationHash> index_;
};

/// Union of the input and its alpha/beta-swapped partners.
/// Throws InputError for mixed sectors or Na != Nb.
SubspaceBasis spin_inversion_closure(std::span<const Configuration> configs);

/// Default cap on enumerated sector size.
inline constexpr double kDefaultEnumerationCap = 1e7;

/// All configurations of a sector in canonical order. Throws InputError above the cap.
SubspaceBasis enumerate_sector(const Sector& s, double cap = kDefaultEnumerationCap);

/// All masks over n orbitals with k bits set, ascending.
std::vector<Bitmask> combinations(int n, int k);

double binomial(int n, int k);

}  // namespace extsqd
