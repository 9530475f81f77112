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

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "extsqd/configuration.hpp"
#include "extsqd/eigensolver.hpp"
#include "extsqd/hamiltonian.hpp"
#include "extsqd/sampling.hpp"

namespace extsqd {

/// Variational eigenstates on a configuration basis.
struct CIState {
    Sector sector;
    std::shared_ptr<const SubspaceBasis> basis;
    Eigen::MatrixXd coefficients;  // |basis| x n_roots, normalized columns
    Eigen::VectorXd energies;      // ascending
    std::string method;
    std::vector<bool> converged;

    std::size_t n_roots() const { return static_cast<std::size_t>(energies.size()); }
    std::size_t dimension() const { return basis ? basis->size() : 0; }
    SparseState root(std::size_t mu) const;
};

struct SolveOptions {
    std::size_t n_roots = 3;
    /// Extra roots solved for and discarded, so that a degenerate cluster
    /// straddling the last requested root is not split arbitrarily.
    std::size_t degeneracy_buffer = 3;
    DavidsonOptions davidson;
    SubspaceOperatorOptions subspace;
};

/// Lowest min(n_roots, |basis|) eigenpairs of H projected onto `basis`.
CIState diagonalize(std::shared_ptr<const Hamiltonian> h, std::shared_ptr<const SubspaceBasis> basis,
                    const Sector& s, const SolveOptions& options, const std::string& method);

struct OrbitalWindow {
    int first = 0;  // inclusive
    int last = 0;   // inclusive
};

struct GeneratorCounts {
    std::size_t singles = 0;
    std::size_t doubles = 0;
    std::size_t triples = 0;
};

/// OccupiedVirtual moves electrons from reference-occupied to reference-virtual
/// spin-orbitals. General takes every spin-preserving operator whose created
/// and annihilated spin-orbitals are disjoint, in both directions.
enum class GeneratorScope { OccupiedVirtual, General };

/// Excitation operators on top of a reference configuration. The identity
/// is always operators[0].
struct GeneratorSet {
    std::vector<ExcitationOperator> operators;
    Configuration reference;
    std::vector<int> ranks;
    std::optional<OrbitalWindow> window;
    GeneratorScope scope = GeneratorScope::OccupiedVirtual;
    GeneratorCounts counts;

    std::size_t size() const { return operators.size(); }
};

/// All spin-preserving operators of the requested ranks (1..3) moving
/// electrons from reference-occupied to reference-virtual spin-orbitals,
/// optionally restricted to an orbital window. Creators and annihilators are
/// each listed in ascending spin-orbital order (alpha block first).
/// Throws InputError when a requested rank has too few occupied or virtual
/// spin-orbitals.
GeneratorSet make_generators(const Sector& s, const Configuration& reference, std::vector<int> ranks,
                             std::optional<OrbitalWindow> window = std::nullopt,
                             GeneratorScope scope = GeneratorScope::OccupiedVirtual);

struct SqdOptions {
    std::size_t batches = 10;
    std::size_t batch_size = 0;  // required
    /// Total S-CORE rounds (>= 1). Round 1 keeps only in-sector samples
    /// unless none exist; later rounds repair with the previous ground state.
    int score_iters = 1;
    /// Fresh draws from the current ground state, as a fraction of the raw
    /// sample count, added before batching in rounds after the first.
    double augment_fraction = 0.1;
    BatchOptions batching;
    SolveOptions solve;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct SqdIteration {
    int round = 0;
    std::uint64_t recovered_total = 0;
    std::size_t recovered_distinct = 0;
    std::vector<double> batch_ground_energies;
    std::vector<std::size_t> batch_dimensions;
    std::size_t best_batch = 0;
    Eigen::VectorXd energies;
};

struct SqdResult {
    CIState state;
    std::vector<SqdIteration> trace;
    bool converged = true;
};

/// Self-consistent sample-based diagonalization: recover, batch, diagonalize
/// each batch, keep the batch with the lowest ground energy.
SqdResult run_sqd(std::shared_ptr<const Hamiltonian> h, const SampleSet& samples, const Sector& s,
                  const SqdOptions& options);

/// Configurations whose ground-state |amplitude| >= threshold, re-closed
/// under spin inversion when N_alpha = N_beta. Throws InputError if nothing
/// survives or threshold < 0.
SubspaceBasis cut_state(const CIState& state, double threshold);

/// Outcomes of applying one generator to one seed configuration.
struct ExtensionTallies {
    std::size_t new_unique = 0;
    std::size_t annihilated = 0;
    std::size_t duplicate_new = 0;
    std::size_t already_present = 0;

    std::size_t total() const { return new_unique + annihilated + duplicate_new + already_present; }
};

struct ExtendOptions {
    std::size_t chunk = 4096;
    int workers = 1;
    bool reclose = true;
};

struct ExtendResult {
    std::shared_ptr<const SubspaceBasis> basis;
    ExtensionTallies tallies;
    /// Configurations added by the final spin-inversion closure.
    std::size_t closure_added = 0;
    /// |seed| * prod_sigma N_sigma (M - N_sigma) + |seed|.
    double dimension_bound = 0.0;
    bool bound_exceeded = false;
};

/// Seed plus every nonzero image of a generator acting on a seed
/// configuration. Seeds are processed in chunks; generator application is
/// parallel within a chunk and the merge into the extended set is serial in
/// chunk order, so the tallies do not depend on the worker count.
ExtendResult extend_subspace(const SubspaceBasis& seed, const GeneratorSet& generators, const Sector& s,
                             ExtendOptions options = {});

struct ExtSqdOptions {
    double threshold = 1e-3;
    ExtendOptions extend;
    SolveOptions solve;
};

struct ExtSqdResult {
    CIState state;
    std::size_t cut_dimension = 0;
    ExtendResult extension;
};

/// Cut the SQD ground state, extend by the generators and re-diagonalize.
ExtSqdResult run_ext_sqd(std::shared_ptr<const Hamiltonian> h, const CIState& sqd_state,
                         const GeneratorSet& generators, const ExtSqdOptions& options);

struct QseOptions {
    double tau = 1e-8;
    std::size_t n_roots = 3;
    SubspaceOperatorOptions subspace;
};

struct QseResult {
    Eigen::MatrixXd hamiltonian;  // M_IJ
    Eigen::MatrixXd overlap;      // S_IJ
    Eigen::VectorXd energies;
    Eigen::MatrixXd operator_coefficients;  // |G| x n_roots
    std::size_t kept_dimension = 0;
    /// The QSE eigenstates expanded on the configurations they touch.
    CIState state;
};

/// Quantum subspace expansion around a normalized reference state:
///   M_IJ = <ref|E_I^T H E_J|ref>,  S_IJ = <ref|E_I^T E_J|ref>,
/// solved by generalized_eig. The vectors E_J|ref> are formed exactly on
/// the union of their supports U, and M = V^T (P_U H P_U) V, which equals
/// the full expression because every V column lies in U.
QseResult run_qse(std::shared_ptr<const Hamiltonian> h, const SparseState& reference,
                  const GeneratorSet& generators, const QseOptions& options);

}  // namespace extsqd
