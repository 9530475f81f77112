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
#include <Eigen/Sparse>
#include <cstddef>
#include <vector>

#include "extsqd/configuration.hpp"
#include "extsqd/hamiltonian.hpp"

namespace extsqd::oracle {

/// Brute-force Fock space of 2M spin-orbitals (M <= 4, dimension 4^M).
///
/// Basis state index bit j is spin-orbital j, with (p, alpha) -> p and
/// (p, beta) -> M + p. Creation operators are built directly from the
/// Jordan-Wigner string Z...Z sigma+ and every other operator is obtained
/// by dense matrix products, so nothing here shares code with the sparse
/// kernels it is used to check.
class DenseFock {
   public:
    static constexpr int kMaxOrbitals = 4;

    /// Throws InputError for M outside [1, 4].
    explicit DenseFock(int n_orbitals);

    int n_orbitals() const { return m_; }
    Eigen::Index dimension() const { return Eigen::Index{1} << (2 * m_); }

    using Sparse = Eigen::SparseMatrix<double>;

    Eigen::MatrixXd create(SpinOrbital so) const { return Eigen::MatrixXd(create_[global(so)]); }
    Eigen::MatrixXd annihilate(SpinOrbital so) const { return create(so).transpose(); }
    const Sparse& create_sparse(SpinOrbital so) const { return create_[global(so)]; }
    Sparse annihilate_sparse(SpinOrbital so) const { return create_[global(so)].transpose(); }
    Eigen::MatrixXd number(SpinOrbital so) const { return create(so) * annihilate(so); }
    Eigen::MatrixXd identity() const { return Eigen::MatrixXd::Identity(dimension(), dimension()); }

    /// Product of ladder matrices in written order.
    Eigen::MatrixXd op(const ExcitationOperator& e) const;
    Eigen::MatrixXd op(const FermionOperator& terms) const;

    Eigen::MatrixXd total_number(Spin s) const;
    /// Spin operators restricted to a set of spatial orbitals (all if empty).
    Eigen::MatrixXd s_plus(const std::vector<int>& orbitals = {}) const;
    Eigen::MatrixXd s_minus(const std::vector<int>& orbitals = {}) const { return s_plus(orbitals).transpose(); }
    Eigen::MatrixXd s_z(const std::vector<int>& orbitals = {}) const;
    Eigen::MatrixXd s_x(const std::vector<int>& orbitals = {}) const;
    /// S_y is imaginary; this returns i*S_y, which is real and antisymmetric.
    Eigen::MatrixXd i_s_y(const std::vector<int>& orbitals = {}) const;
    Eigen::MatrixXd s_squared() const;

    std::size_t index_of(const Configuration& x) const;
    Eigen::VectorXd basis_vector(const Configuration& x) const;
    Eigen::VectorXd to_dense(const SparseState& v) const;

    /// Restriction of a Fock-space matrix to a configuration list, in list order.
    Eigen::MatrixXd restrict(const Eigen::MatrixXd& a, const SubspaceBasis& basis) const;

   private:
    std::size_t global(SpinOrbital so) const {
        return static_cast<std::size_t>(so.spin == Spin::Alpha ? so.orbital : m_ + so.orbital);
    }
    std::vector<int> all_or(const std::vector<int>& orbitals) const;

    int m_;
    std::vector<Sparse> create_;
};

/// E0 + sum h a+a + sum (pr|qs)/2 a+a+aa assembled in the full Fock space.
Eigen::MatrixXd dense_hamiltonian(const Hamiltonian& h, const DenseFock& fock);

/// <v|O|v>. Throws InputError on dimension mismatch.
double dense_expectation(const Eigen::MatrixXd& op, const Eigen::VectorXd& v);

}  // namespace extsqd::oracle
