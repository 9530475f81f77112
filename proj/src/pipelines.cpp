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

#include "extsqd/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "extsqd/error.hpp"
#include "extsqd/parallel.hpp"
#include "extsqd/random.hpp"

namespace extsqd {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = seed;
    s ^= Rng::splitmix(s) + a;
    s ^= Rng::splitmix(s) + b;
    return Rng::splitmix(s);
}

// Calls fn(chosen) for every k-subset of items, in lexicographic order.
template <class Fn>
void for_each_subset(const std::vector<SpinOrbital>& items, int k, Fn&& fn) {
    const int n = static_cast<int>(items.size());
    if (k > n) return;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::vector<SpinOrbital> chosen(static_cast<std::size_t>(k));
    while (true) {
        for (int i = 0; i < k; ++i) chosen[static_cast<std::size_t>(i)] = items[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        fn(chosen);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

std::vector<SpinOrbital> concat(const std::vector<SpinOrbital>& a, const std::vector<SpinOrbital>& b) {
    std::vector<SpinOrbital> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

SubspaceBasis close_if_possible(std::vector<Configuration> configs, const Sector& s) {
    if (s.n_alpha == s.n_beta) return spin_inversion_closure(configs);
    return SubspaceBasis(std::move(configs));
}

}  // namespace

SparseState CIState::root(std::size_t mu) const {
    if (mu >= n_roots()) throw InputError("root index out of range");
    const auto col = coefficients.col(static_cast<Eigen::Index>(mu));
    return SparseState::from_column(sector, *basis, {col.data(), static_cast<std::size_t>(col.size())});
}

CIState diagonalize(std::shared_ptr<const Hamiltonian> h, std::shared_ptr<const SubspaceBasis> basis,
                    const Sector& s, const SolveOptions& options, const std::string& method) {
    const auto op = build_subspace_operator(h, basis, options.subspace);
    const std::size_t dim = op->dimension();
    const std::size_t keep = std::min(options.n_roots, dim);
    const std::size_t solve = std::min(options.n_roots + options.degeneracy_buffer, dim);
    const EigResult r = davidson(*op, solve, std::nullopt, options.davidson);
    CIState st;
    st.sector = s;
    st.basis = std::move(basis);
    st.method = method;
    st.energies = r.eigenvalues.head(static_cast<Eigen::Index>(keep));
    st.coefficients = r.eigenvectors.leftCols(static_cast<Eigen::Index>(keep));
    st.converged.assign(r.converged.begin(), r.converged.begin() + static_cast<std::ptrdiff_t>(keep));
    return st;
}

GeneratorSet make_generators(const Sector& s, const Configuration& reference, std::vector<int> ranks,
                             std::optional<OrbitalWindow> window, GeneratorScope scope) {
    s.validate();
    if (!in_sector(reference, s)) throw InputError("generator reference is not in the sector");
    std::sort(ranks.begin(), ranks.end());
    ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
    for (int r : ranks)
        if (r < 1 || r > 3) throw InputError("excitation ranks must be 1, 2 or 3");
    int lo = 0, hi = s.n_orbitals - 1;
    if (window) {
        if (window->first < 0 || window->last >= s.n_orbitals || window->first > window->last)
            throw InputError("orbital window outside [0, M)");
        lo = window->first;
        hi = window->last;
    }
    std::vector<SpinOrbital> occ[2], vir[2];
    for (Spin sp : {Spin::Alpha, Spin::Beta})
        for (int p = lo; p <= hi; ++p)
            (reference.mask(sp).test(static_cast<std::size_t>(p)) ? occ : vir)[static_cast<int>(sp)].push_back({p, sp});

    GeneratorSet g;
    g.reference = reference;
    g.ranks = ranks;
    g.window = window;
    g.scope = scope;
    g.operators.push_back(ExcitationOperator::identity());
    if (scope == GeneratorScope::General) {
        std::vector<SpinOrbital> all[2];
        for (int sp = 0; sp < 2; ++sp) {
            all[sp] = concat(occ[sp], vir[sp]);
            std::sort(all[sp].begin(), all[sp].end(), [](const SpinOrbital& a, const SpinOrbital& b) { return a.orbital < b.orbital; });
        }
        auto disjoint = [](const std::vector<SpinOrbital>& a, const std::vector<SpinOrbital>& b) {
            for (const auto& x : a)
                if (std::find(b.begin(), b.end(), x) != b.end()) return false;
            return true;
        };
        for (int r : ranks) {
            std::size_t count = 0;
            for (int ka = r; ka >= 0; --ka) {
                const int kb = r - ka;
                for_each_subset(all[0], ka, [&](const std::vector<SpinOrbital>& aa) {
                    for_each_subset(all[1], kb, [&](const std::vector<SpinOrbital>& ab) {
                        const auto ann = concat(aa, ab);
                        for_each_subset(all[0], ka, [&](const std::vector<SpinOrbital>& ca) {
                            if (!disjoint(ca, aa)) return;
                            for_each_subset(all[1], kb, [&](const std::vector<SpinOrbital>& cb) {
                                if (!disjoint(cb, ab)) return;
                                g.operators.emplace_back(concat(ca, cb), ann);
                                ++count;
                            });
                        });
                    });
                });
            }
            if (count == 0) throw InputError("no operators of rank " + std::to_string(r) + " in the window");
            (r == 1 ? g.counts.singles : r == 2 ? g.counts.doubles : g.counts.triples) = count;
        }
        return g;
    }
    for (int r : ranks) {
        const std::size_t n_occ = occ[0].size() + occ[1].size(), n_vir = vir[0].size() + vir[1].size();
        if (n_occ < static_cast<std::size_t>(r) || n_vir < static_cast<std::size_t>(r))
            throw InputError("not enough occupied or virtual spin-orbitals for rank " + std::to_string(r));
        std::size_t count = 0;
        for (int ka = r; ka >= 0; --ka) {
            const int kb = r - ka;
            for_each_subset(occ[0], ka, [&](const std::vector<SpinOrbital>& oa) {
                for_each_subset(occ[1], kb, [&](const std::vector<SpinOrbital>& ob) {
                    const auto ann = concat(oa, ob);
                    for_each_subset(vir[0], ka, [&](const std::vector<SpinOrbital>& va) {
                        for_each_subset(vir[1], kb, [&](const std::vector<SpinOrbital>& vb) {
                            g.operators.emplace_back(concat(va, vb), ann);
                            ++count;
                        });
                    });
                });
            });
        }
        (r == 1 ? g.counts.singles : r == 2 ? g.counts.doubles : g.counts.triples) = count;
    }
    return g;
}

SqdResult run_sqd(std::shared_ptr<const Hamiltonian> h, const SampleSet& samples, const Sector& s,
                  const SqdOptions& options) {
    s.validate();
    if (options.batch_size == 0) throw InputError("batch_size must be set");
    if (options.batches == 0) throw InputError("at least one batch is required");
    if (options.score_iters < 1) throw InputError("score_iters must be at least 1");
    if (samples.empty()) throw InputError("no samples");
    if (samples.n_orbitals() != s.n_orbitals || h->n_orbitals() != s.n_orbitals)
        throw InputError("samples, Hamiltonian and sector disagree on orbital count");

    SqdResult result;
    std::optional<CIState> best;
    for (int round = 1; round <= options.score_iters; ++round) {
        const auto rs = static_cast<std::uint64_t>(round);
        SampleSet recovered(s.n_orbitals);
        if (!best) {
            for (const auto& [x, c] : samples.counts())
                if (in_sector(x, s)) recovered.add(x, c);
            if (recovered.empty()) {
                // Nothing survives post-selection: repair with raw bit frequencies.
                RecoveryModel raw{std::vector<double>(static_cast<std::size_t>(s.n_orbitals), 0.0),
                                  std::vector<double>(static_cast<std::size_t>(s.n_orbitals), 0.0)};
                for (const auto& [x, c] : samples.counts()) {
                    for (int p : x.alpha.ones()) raw.occ_alpha[static_cast<std::size_t>(p)] += static_cast<double>(c);
                    for (int p : x.beta.ones()) raw.occ_beta[static_cast<std::size_t>(p)] += static_cast<double>(c);
                }
                for (auto* v : {&raw.occ_alpha, &raw.occ_beta})
                    for (double& x : *v) x /= static_cast<double>(samples.total());
                recovered = recover_configurations(samples, raw, s, derive_seed(options.seed, rs, 1));
            }
        } else {
            const SparseState ground = best->root(0);
            recovered = recover_configurations(samples, update_model(ground), s, derive_seed(options.seed, rs, 1));
            const auto n_aug = static_cast<std::uint64_t>(std::floor(options.augment_fraction * static_cast<double>(samples.total())));
            if (n_aug > 0) {
                const double norm = ground.norm();
                std::vector<SparseState::Entry> entries(ground.entries().begin(), ground.entries().end());
                for (auto& e : entries) e.second /= norm;
                const auto extra = sample_state(SparseState(s, std::move(entries)), n_aug, 0.0, derive_seed(options.seed, rs, 2));
                for (const auto& [x, c] : extra.counts()) recovered.add(x, c);
            }
        }

        const auto batches = make_batches(recovered, s, options.batches, options.batch_size,
                                          derive_seed(options.seed, rs, 3), options.batching);
        std::vector<CIState> states(batches.size());
        SolveOptions solve = options.solve;
        solve.subspace.workers = batches.size() == 1 ? options.workers : 1;
        parallel_for(batches.size(), options.workers, [&](std::size_t k) {
            states[k] = diagonalize(h, std::make_shared<const SubspaceBasis>(batches[k]), s, solve, "sqd");
        });

        SqdIteration it;
        it.round = round;
        it.recovered_total = recovered.total();
        it.recovered_distinct = recovered.distinct();
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < states.size(); ++k) {
            const double e0 = states[k].energies(0);
            it.batch_ground_energies.push_back(e0);
            it.batch_dimensions.push_back(states[k].dimension());
            if (e0 < lowest) {
                lowest = e0;
                it.best_batch = k;
            }
        }
        best = std::move(states[it.best_batch]);
        it.energies = best->energies;
        result.trace.push_back(std::move(it));
    }
    result.state = std::move(*best);
    result.converged = std::all_of(result.state.converged.begin(), result.state.converged.end(), [](bool b) { return b; });
    return result;
}

SubspaceBasis cut_state(const CIState& state, double threshold) {
    if (!(threshold >= 0.0)) throw InputError("cut threshold must be nonnegative");
    if (state.n_roots() == 0) throw InputError("cannot cut a state without roots");
    std::vector<Configuration> kept;
    for (std::size_t i = 0; i < state.dimension(); ++i)
        if (std::abs(state.coefficients(static_cast<Eigen::Index>(i), 0)) >= threshold) kept.push_back((*state.basis)[i]);
    if (kept.empty()) throw InputError("cut threshold removes every configuration");
    return close_if_possible(std::move(kept), state.sector);
}

ExtendResult extend_subspace(const SubspaceBasis& seed, const GeneratorSet& generators, const Sector& s,
                             ExtendOptions options) {
    if (seed.empty()) throw InputError("cannot extend an empty seed basis");
    if (options.chunk == 0) throw InputError("extension chunk must be at least 1");
    const std::size_t n_ops = generators.size();
    const int m = s.n_orbitals;
    ExtendResult out;
    std::unordered_set<Configuration, ConfigurationHash> added;
    std::vector<Configuration> order;
    std::vector<ExcitationResult> images;
    for (std::size_t start = 0; start < seed.size(); start += options.chunk) {
        const std::size_t stop = std::min(seed.size(), start + options.chunk);
        images.assign((stop - start) * n_ops, ExcitationResult{});
        parallel_for(stop - start, options.workers, [&](std::size_t row) {
            const Configuration& y = seed[start + row];
            for (std::size_t g = 0; g < n_ops; ++g) images[row * n_ops + g] = apply_excitation(generators.operators[g], y, m);
        });
        for (const auto& r : images) {
            if (!r) {
                ++out.tallies.annihilated;
            } else if (seed.contains(r.config)) {
                ++out.tallies.already_present;
            } else if (added.insert(r.config).second) {
                ++out.tallies.new_unique;
                order.push_back(r.config);
            } else {
                ++out.tallies.duplicate_new;
            }
        }
    }
    std::vector<Configuration> all(seed.begin(), seed.end());
    all.insert(all.end(), order.begin(), order.end());
    const std::size_t before = all.size();
    SubspaceBasis extended = options.reclose ? close_if_possible(std::move(all), s) : SubspaceBasis(std::move(all));
    out.closure_added = extended.size() - before;
    const double per_seed = static_cast<double>(s.n_alpha) * (m - s.n_alpha) * static_cast<double>(s.n_beta) * (m - s.n_beta);
    out.dimension_bound = static_cast<double>(seed.size()) * per_seed + static_cast<double>(seed.size());
    out.bound_exceeded = static_cast<double>(before) > out.dimension_bound;
    out.basis = std::make_shared<const SubspaceBasis>(std::move(extended));
    return out;
}

ExtSqdResult run_ext_sqd(std::shared_ptr<const Hamiltonian> h, const CIState& sqd_state,
                         const GeneratorSet& generators, const ExtSqdOptions& options) {
    ExtSqdResult out;
    const SubspaceBasis cut = cut_state(sqd_state, options.threshold);
    out.cut_dimension = cut.size();
    out.extension = extend_subspace(cut, generators, sqd_state.sector, options.extend);
    out.state = diagonalize(std::move(h), out.extension.basis, sqd_state.sector, options.solve, "ext-sqd");
    return out;
}

QseResult run_qse(std::shared_ptr<const Hamiltonian> h, const SparseState& reference,
                  const GeneratorSet& generators, const QseOptions& options) {
    if (std::abs(reference.norm() - 1.0) > 1e-8) throw InputError("QSE reference state must be normalized");
    if (generators.operators.empty() || generators.operators.front().rank() != 0)
        throw InputError("QSE generators must start with the identity");
    const std::size_t n_ops = generators.size();
    std::vector<SparseState> images;
    images.reserve(n_ops);
    std::vector<Configuration> support;
    for (const auto& e : generators.operators) {
        images.push_back(apply_operator({{1.0, e}}, reference));
        for (const auto& [x, c] : images.back().entries()) support.push_back(x);
    }
    if (support.empty()) throw InputError("QSE reference state is empty");
    auto basis = std::make_shared<const SubspaceBasis>(std::move(support));
    const auto nu = static_cast<Eigen::Index>(basis->size());
    const auto ng = static_cast<Eigen::Index>(n_ops);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(nu, ng);
    for (Eigen::Index j = 0; j < ng; ++j)
        for (const auto& [x, c] : images[static_cast<std::size_t>(j)].entries()) v(basis->index_of(x), j) = c;

    const auto op = build_subspace_operator(h, basis, options.subspace);
    Eigen::MatrixXd hv(nu, ng);
    for (Eigen::Index j = 0; j < ng; ++j)
        op->apply({v.col(j).data(), static_cast<std::size_t>(nu)}, {hv.col(j).data(), static_cast<std::size_t>(nu)});

    QseResult out;
    out.hamiltonian = v.transpose() * hv;
    out.hamiltonian = 0.5 * (out.hamiltonian + out.hamiltonian.transpose()).eval();
    out.overlap = v.transpose() * v;
    const auto g = generalized_eig(out.hamiltonian, out.overlap, options.tau, options.n_roots);
    out.kept_dimension = g.kept_dimension;
    out.energies = g.result.eigenvalues;
    out.operator_coefficients = g.result.eigenvectors;

    out.state.sector = reference.sector();
    out.state.basis = basis;
    out.state.method = "qse";
    out.state.energies = out.energies;
    out.state.coefficients = v * out.operator_coefficients;
    for (Eigen::Index c = 0; c < out.state.coefficients.cols(); ++c) out.state.coefficients.col(c).normalize();
    out.state.converged.assign(static_cast<std::size_t>(out.energies.size()), true);
    return out;
}

}  // namespace extsqd
