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
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "extsqd/configuration.hpp"
#include "extsqd/linear_operator.hpp"

namespace extsqd {

/// Spin-free electronic Hamiltonian over M real orbitals.
///
///   H = E0 + sum_{pr,s} h_pr a+_ps a_rs
///          + 1/2 sum_{prqs,st} (pr|qs) a+_ps a+_qt a_st a_rs
///
/// Two-electron integrals use chemist notation and are stored once per
/// 8-fold permutation class.
class Hamiltonian {
   public:
    Hamiltonian() = default;
    explicit Hamiltonian(int n_orbitals);

    int n_orbitals() const { return n_orbitals_; }

    double core_energy() const { return core_energy_; }
    void set_core_energy(double e) { core_energy_ = e; }

    double one_body(int p, int r) const { return h_[static_cast<std::size_t>(p * n_orbitals_ + r)]; }
    /// Sets h_pr and h_rp.
    void set_one_body(int p, int r, double v);

    double eri(int p, int r, int q, int s) const { return eri_[eri_index(p, r, q, s)]; }
    /// Sets all eight permutations of (pr|qs).
    void set_eri(int p, int r, int q, int s, double v);

    /// Canonical packed position of (pr|qs); equal for all 8 permutations.
    std::size_t eri_index(int p, int r, int q, int s) const {
        return pair_pair(pair_[static_cast<std::size_t>(p * n_orbitals_ + r)],
                         pair_[static_cast<std::size_t>(q * n_orbitals_ + s)]);
    }
    std::size_t eri_storage_size() const { return eri_.size(); }

    /// Throws InputError if any integral is not finite.
    void validate() const;

    /// (pp|qq) and (pq|qp), cached for diagonal elements.
    double coulomb(int p, int q) const { return coulomb_[static_cast<std::size_t>(p * n_orbitals_ + q)]; }
    double exchange(int p, int q) const { return exchange_[static_cast<std::size_t>(p * n_orbitals_ + q)]; }

   private:
    static std::size_t pair_pair(std::size_t a, std::size_t b) {
        return a >= b ? a * (a + 1) / 2 + b : b * (b + 1) / 2 + a;
    }
    void refresh_cache(int p, int r, int q, int s);

    int n_orbitals_ = 0;
    double core_energy_ = 0.0;
    std::vector<double> h_;
    std::vector<std::size_t> pair_;
    std::vector<double> eri_;
    std::vector<double> coulomb_;
    std::vector<double> exchange_;
};

/// Diagnostics gathered while reading an FCIDUMP.
struct FcidumpReport {
    Sector sector_hint;
    int duplicate_records = 0;
    int ignored_records = 0;  // orbital-energy records (i 0 0 0)
};

struct FcidumpData {
    Hamiltonian hamiltonian;
    FcidumpReport report;
};

/// Molpro-style FCIDUMP: namelist header (NORB, NELEC, MS2, ...) closed by
/// "/" or "&END", then "value i j k l" records with 1-based indices.
/// Duplicate records overwrite earlier ones and are counted in the report.
FcidumpData parse_fcidump(std::string_view text);
FcidumpData read_fcidump(const std::string& path);

/// Writes every nonzero unique integral with 17 significant digits.
void write_fcidump(std::ostream& out, const Hamiltonian& h, const Sector& sector);
std::string to_fcidump(const Hamiltonian& h, const Sector& sector);

/// One-dimensional Hubbard chain with nearest-neighbour hopping -t and
/// on-site repulsion U. A periodic L=2 chain has both bonds on the same pair,
/// so its hopping element is -2t.
Hamiltonian hubbard_chain(int sites, double t, double u, bool periodic);

/// Integrals in the rotated orbitals phi'_k = sum_p C_pk phi_p:
/// h' = C^T h C and (ij|kl)' = sum C_pi C_qj C_rk C_sl (pq|rs).
/// C must be square with M rows; it is not checked for orthogonality.
Hamiltonian rotate_orbitals(const Hamiltonian& h, const Eigen::MatrixXd& c);

/// H rotated to the eigenvectors of its one-body matrix, in ascending
/// eigenvalue order, each vector signed so its largest component is positive.
/// For a half-filled Hubbard chain this is the Hartree-Fock basis.
Hamiltonian one_body_eigenbasis(const Hamiltonian& h);

/// <x|H|y> by the Slater-Condon rules. Throws InputError if x and y differ in
/// particle numbers.
double matrix_element(const Hamiltonian& h, const Configuration& x, const Configuration& y);

/// Diagonal element <y|H|y>.
double diagonal_element(const Hamiltonian& h, const Configuration& y);

/// Every z with <z|H|y> != 0, paired with that element. y itself comes first.
std::vector<std::pair<Configuration, double>> connected_configurations(const Hamiltonian& h,
                                                                       const Configuration& y);

/// Sparse CI vector in canonical configuration order.
class SparseState {
   public:
    using Entry = std::pair<Configuration, double>;

    SparseState() = default;
    /// Sorts, merges duplicate keys by summation, and prunes |amplitude| <= kPrune.
    SparseState(Sector sector, std::vector<Entry> entries);
    /// Column `col` of a coefficient matrix stored column-major with basis.size() rows.
    static SparseState from_column(const Sector& sector, const SubspaceBasis& basis, std::span<const double> column);

    static constexpr double kPrune = 1e-15;

    const Sector& sector() const { return sector_; }
    std::span<const Entry> entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    double norm() const;
    /// Amplitude of x, zero if absent.
    double amplitude(const Configuration& x) const;
    double dot(const SparseState& other) const;

   private:
    Sector sector_;
    std::vector<Entry> entries_;
};

struct OperatorTerm {
    double weight = 1.0;
    ExcitationOperator op;
};

/// Sum of weighted excitation operators.
using FermionOperator = std::vector<OperatorTerm>;

/// Applies a fermionic operator term by term. All terms must shift (Na, Nb)
/// by the same amount; the result carries the shifted sector.
SparseState apply_operator(const FermionOperator& op, const SparseState& v);

/// H written as identity, one-body and two-body ladder terms.
FermionOperator hamiltonian_terms(const Hamiltonian& h);

/// Sparse H|v> via connected_configurations over the support of v.
SparseState apply_hamiltonian(const Hamiltonian& h, const SparseState& v);

struct SubspaceOperatorOptions {
    /// Bases smaller than this are materialized as an explicit sparse matrix.
    std::size_t explicit_threshold = 20000;
    int workers = 1;
    /// Rows per parallel task.
    std::size_t chunk = 256;
};

/// P_B H P_B on a configuration basis.
///
/// Rows are evaluated independently (gather form), so the result of apply()
/// is bitwise identical for any worker count.
class SubspaceOperator final : public SymmetricOperator {
   public:
    SubspaceOperator(std::shared_ptr<const Hamiltonian> h, std::shared_ptr<const SubspaceBasis> basis,
                     SubspaceOperatorOptions options = {});

    std::size_t dimension() const override { return basis_->size(); }
    void apply(std::span<const double> x, std::span<double> y) const override;
    std::vector<double> diagonal() const override { return diagonal_; }
    void dense(std::span<double> out) const override;

    bool is_explicit() const { return !row_ptr_.empty(); }
    std::size_t nonzeros() const { return cols_.size(); }
    const SubspaceBasis& basis() const { return *basis_; }

   private:
    void row(std::size_t k, std::vector<std::pair<std::size_t, double>>& out) const;

    std::shared_ptr<const Hamiltonian> h_;
    std::shared_ptr<const SubspaceBasis> basis_;
    SubspaceOperatorOptions options_;
    std::vector<double> diagonal_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> cols_;
    std::vector<double> vals_;
};

/// Throws InputError on an empty basis.
std::unique_ptr<SubspaceOperator> build_subspace_operator(std::shared_ptr<const Hamiltonian> h,
                                                          std::shared_ptr<const SubspaceBasis> basis,
                                                          SubspaceOperatorOptions options = {});

}  // namespace extsqd
