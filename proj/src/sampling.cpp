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

#include "extsqd/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "extsqd/error.hpp"
#include "extsqd/random.hpp"

namespace extsqd {

SampleSet::SampleSet(int n_orbitals) : n_orbitals_(n_orbitals) {
    if (n_orbitals < 1 || static_cast<std::size_t>(n_orbitals) > kMaxOrbitals)
        throw InputError("sample set: unsupported orbital count " + std::to_string(n_orbitals));
}

void SampleSet::add(const Configuration& x, std::uint64_t multiplicity) {
    const auto m = static_cast<std::size_t>(n_orbitals_);
    if (x.alpha.any_at_or_above(m) || x.beta.any_at_or_above(m))
        throw InputError("sample has bits beyond the orbital count");
    if (multiplicity == 0) return;
    counts_[x] += multiplicity;
    total_ += multiplicity;
}

SampleSet read_samples(std::string_view text, int n_orbitals) {
    SampleSet out(n_orbitals);
    const auto width = static_cast<std::size_t>(2 * n_orbitals);
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string bits, mult, extra;
        if (!(fields >> bits)) continue;
        const auto where = " on samples line " + std::to_string(lineno);
        if (bits.size() != width)
            throw InputError("bitstring of length " + std::to_string(bits.size()) + ", expected " +
                             std::to_string(width) + where);
        if (bits.find_first_not_of("01") != std::string::npos) throw InputError("non-binary character" + where);
        std::uint64_t count = 1;
        if (fields >> mult) {
            std::size_t used = 0;
            long long v = 0;
            try {
                v = std::stoll(mult, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != mult.size() || v <= 0) throw InputError("multiplicity must be a positive integer" + where);
            count = static_cast<std::uint64_t>(v);
        }
        if (fields >> extra) throw InputError("trailing field '" + extra + "'" + where);
        out.add(Configuration::parse(bits), count);
    }
    return out;
}

SampleSet read_samples_file(const std::string& path, int n_orbitals) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open samples file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return read_samples(ss.str(), n_orbitals);
}

void write_samples(std::ostream& out, const SampleSet& samples) {
    for (const auto& [x, c] : samples.counts())
        out << x.to_string(static_cast<std::size_t>(samples.n_orbitals())) << ' ' << c << '\n';
}

namespace {

// Uniform k-subset of [0, n) by a partial Fisher-Yates shuffle.
Bitmask random_subset(int n, int k, Rng& rng, std::vector<int>& scratch) {
    scratch.resize(static_cast<std::size_t>(n));
    std::iota(scratch.begin(), scratch.end(), 0);
    Bitmask m;
    for (int i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(n - i));
        std::swap(scratch[static_cast<std::size_t>(i)], scratch[j]);
        m.set(static_cast<std::size_t>(scratch[static_cast<std::size_t>(i)]));
    }
    return m;
}

}  // namespace

SampleSet sample_uniform_sector(const Sector& s, std::uint64_t n, std::uint64_t seed) {
    s.validate();
    SampleSet out(s.n_orbitals);
    Rng rng(seed, 0);
    std::vector<int> scratch;
    for (std::uint64_t i = 0; i < n; ++i) {
        Configuration c;
        c.alpha = random_subset(s.n_orbitals, s.n_alpha, rng, scratch);
        c.beta = random_subset(s.n_orbitals, s.n_beta, rng, scratch);
        out.add(c);
    }
    return out;
}

SampleSet sample_state(const SparseState& v, std::uint64_t n, double noise_rate, std::uint64_t seed) {
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw InputError("noise rate must lie in [0, 1]");
    if (std::abs(v.norm() - 1.0) > 1e-8) throw InputError("sample_state requires a normalized state");
    const int m = v.sector().n_orbitals;
    SampleSet out(m);
    const auto entries = v.entries();
    std::vector<double> cumulative(entries.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        acc += entries[i].second * entries[i].second;
        cumulative[i] = acc;
    }
    Rng rng(seed, 0);
    for (std::uint64_t draw = 0; draw < n; ++draw) {
        const double u = rng.uniform() * acc;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        Configuration c = entries[static_cast<std::size_t>(it - cumulative.begin())].first;
        if (noise_rate > 0.0)
            for (int p = 0; p < m; ++p) {
                if (rng.uniform() < noise_rate) c.alpha.flip(static_cast<std::size_t>(p));
                if (rng.uniform() < noise_rate) c.beta.flip(static_cast<std::size_t>(p));
            }
        out.add(c);
    }
    return out;
}

double uniform_sector_probability(const Sector& s) {
    s.validate();
    return binomial(s.n_orbitals, s.n_alpha) * binomial(s.n_orbitals, s.n_beta) *
           std::ldexp(1.0, -2 * s.n_orbitals);
}

ParticleNumberStats particle_number_stats(const SampleSet& samples, const Sector& s) {
    if (samples.empty()) throw InputError("particle-number statistics of an empty sample set");
    if (samples.n_orbitals() != s.n_orbitals) throw InputError("sample set and sector disagree on orbital count");
    ParticleNumberStats st;
    st.total = samples.total();
    for (const auto& [x, c] : samples.counts())
        if (in_sector(x, s)) st.in_sector += c;
    const double n = static_cast<double>(st.total);
    const double p = static_cast<double>(st.in_sector) / n;
    constexpr double z = 1.959963984540054;
    const double denom = 1.0 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    st.p_hw = p;
    st.ci95_low = std::max(0.0, centre - half);
    st.ci95_high = std::min(1.0, centre + half);
    st.p_unif = uniform_sector_probability(s);
    return st;
}

RecoveryModel RecoveryModel::flat(const Sector& s) {
    s.validate();
    const auto m = static_cast<std::size_t>(s.n_orbitals);
    return {std::vector<double>(m, static_cast<double>(s.n_alpha) / s.n_orbitals),
            std::vector<double>(m, static_cast<double>(s.n_beta) / s.n_orbitals)};
}

void RecoveryModel::validate(int n_orbitals) const {
    const auto m = static_cast<std::size_t>(n_orbitals);
    if (occ_alpha.size() != m || occ_beta.size() != m) throw InputError("recovery model has the wrong length");
    for (const auto* v : {&occ_alpha, &occ_beta})
        for (double x : *v)
            if (!(x >= 0.0 && x <= 1.0)) throw InputError("recovery model occupancy outside [0, 1]");
}

namespace {

// Draws an index from `candidates` with probability proportional to weight(p).
template <class Weight>
int weighted_pick(const std::vector<int>& candidates, Weight weight, Rng& rng) {
    double total = 0.0;
    for (int p : candidates) total += weight(p);
    double u = rng.uniform() * total;
    for (int p : candidates) {
        u -= weight(p);
        if (u < 0.0) return p;
    }
    return candidates.back();
}

void repair_channel(Bitmask& mask, int target, int m, const std::vector<double>& occ, Rng& rng) {
    int weight = mask.count();
    while (weight > target) {
        const int p = weighted_pick(mask.ones(), [&](int q) { return (1.0 - occ[static_cast<std::size_t>(q)]) + kRecoverySmoothing; }, rng);
        mask.reset(static_cast<std::size_t>(p));
        --weight;
    }
    while (weight < target) {
        const int p = weighted_pick(mask.zeros(static_cast<std::size_t>(m)),
                                    [&](int q) { return occ[static_cast<std::size_t>(q)] + kRecoverySmoothing; }, rng);
        mask.set(static_cast<std::size_t>(p));
        ++weight;
    }
}

}  // namespace

SampleSet recover_configurations(const SampleSet& samples, const RecoveryModel& model, const Sector& s,
                                 std::uint64_t seed) {
    s.validate();
    if (samples.n_orbitals() != s.n_orbitals) throw InputError("sample set and sector disagree on orbital count");
    model.validate(s.n_orbitals);
    SampleSet out(s.n_orbitals);
    Rng rng(seed, 0);
    for (const auto& [x, c] : samples.counts()) {
        if (in_sector(x, s)) {
            out.add(x, c);
            continue;
        }
        for (std::uint64_t copy = 0; copy < c; ++copy) {
            Configuration y = x;
            repair_channel(y.alpha, s.n_alpha, s.n_orbitals, model.occ_alpha, rng);
            repair_channel(y.beta, s.n_beta, s.n_orbitals, model.occ_beta, rng);
            out.add(y);
        }
    }
    return out;
}

RecoveryModel update_model(const SparseState& ground) {
    const auto m = static_cast<std::size_t>(ground.sector().n_orbitals);
    RecoveryModel r{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
    for (const auto& [x, c] : ground.entries()) {
        const double w = c * c;
        for (int p : x.alpha.ones()) r.occ_alpha[static_cast<std::size_t>(p)] += w;
        for (int p : x.beta.ones()) r.occ_beta[static_cast<std::size_t>(p)] += w;
    }
    // Clamp rounding excursions so the model stays valid.
    for (auto* v : {&r.occ_alpha, &r.occ_beta})
        for (double& x : *v) x = std::clamp(x, 0.0, 1.0);
    return r;
}

std::vector<SubspaceBasis> make_batches(const SampleSet& recovered, const Sector& s, std::size_t n_batches,
                                        std::size_t batch_size, std::uint64_t seed, BatchOptions options) {
    if (recovered.empty()) throw InputError("cannot form batches from an empty configuration set");
    if (batch_size == 0) throw InputError("batch size must be at least 1");
    std::vector<Configuration> keys;
    std::vector<double> weights;
    for (const auto& [x, c] : recovered.counts()) {
        if (!in_sector(x, s)) throw InputError("batching requires an in-sector configuration set");
        keys.push_back(x);
        weights.push_back(options.weighted ? static_cast<double>(c) : 1.0);
    }
    const std::size_t take = std::min(batch_size, keys.size());
    const bool close = s.n_alpha == s.n_beta;
    std::vector<SubspaceBasis> out;
    out.reserve(n_batches);
    for (std::size_t k = 0; k < n_batches; ++k) {
        std::vector<Configuration> chosen;
        if (take == keys.size()) {
            chosen = keys;
        } else {
            // Weighted sampling without replacement: keep the largest log(u)/w keys.
            Rng rng(seed, k);
            std::vector<std::pair<double, std::size_t>> ranked(keys.size());
            for (std::size_t i = 0; i < keys.size(); ++i) {
                const double u = 1.0 - rng.uniform();
                ranked[i] = {std::log(u) / weights[i], i};
            }
            std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(),
                              [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
            for (std::size_t i = 0; i < take; ++i) chosen.push_back(keys[ranked[i].second]);
        }
        if (options.include_reference) chosen.push_back(s.reference());
        out.push_back(close ? spin_inversion_closure(chosen) : SubspaceBasis(std::move(chosen)));
    }
    return out;
}

}  // namespace extsqd
