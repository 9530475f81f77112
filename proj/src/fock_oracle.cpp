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

#include "extsqd/fock_oracle.hpp"

#include <numeric>

#include "extsqd/error.hpp"

namespace extsqd::oracle {

DenseFock::DenseFock(int n_orbitals) : m_(n_orbitals) {
    if (n_orbitals < 1 || n_orbitals > kMaxOrbitals)
        throw InputError("dense Fock oracle supports 1..4 orbitals, got " + std::to_string(n_orbitals));
    const int modes = 2 * m_;
    const Eigen::Index dim = dimension();
    // Single-mode factors: sigma+ = |1><0| and the JW string factor Z = diag(1, -1).
    Eigen::Matrix2d raise, z, id;
    raise << 0, 0, 1, 0;
    z << 1, 0, 0, -1;
    id.setIdentity();
    for (int j = 0; j < modes; ++j) {
        // Kronecker product over modes, highest mode leftmost so that mode k
        // corresponds to bit k of the basis index.
        Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(1, 1);
        for (int k = modes - 1; k >= 0; --k) {
            const Eigen::Matrix2d& f = k == j ? raise : (k < j ? z : id);
            Eigen::MatrixXd next(acc.rows() * 2, acc.cols() * 2);
            for (Eigen::Index r = 0; r < acc.rows(); ++r)
                for (Eigen::Index c = 0; c < acc.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = acc(r, c) * f;
            acc = std::move(next);
        }
        if (acc.rows() != dim) throw std::logic_error("Kronecker assembly size mismatch");
        create_.push_back(acc.sparseView());
    }
}

namespace {

DenseFock::Sparse sparse_op(const DenseFock& fock, const ExcitationOperator& e) {
    DenseFock::Sparse out(fock.dimension(), fock.dimension());
    out.setIdentity();
    for (const auto& so : e.creates()) out = (out * fock.create_sparse(so)).pruned();
    for (const auto& so : e.annihilates()) out = (out * fock.annihilate_sparse(so)).pruned();
    return out;
}

}  // namespace

Eigen::MatrixXd DenseFock::op(const ExcitationOperator& e) const { return Eigen::MatrixXd(sparse_op(*this, e)); }

Eigen::MatrixXd DenseFock::op(const FermionOperator& terms) const {
    Sparse out(dimension(), dimension());
    for (const auto& t : terms) out += t.weight * sparse_op(*this, t.op);
    return Eigen::MatrixXd(out);
}

Eigen::MatrixXd DenseFock::total_number(Spin s) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dimension(), dimension());
    for (int p = 0; p < m_; ++p) out += number({p, s});
    return out;
}

std::vector<int> DenseFock::all_or(const std::vector<int>& orbitals) const {
    if (!orbitals.empty()) return orbitals;
    std::vector<int> all(static_cast<std::size_t>(m_));
    std::iota(all.begin(), all.end(), 0);
    return all;
}

Eigen::MatrixXd DenseFock::s_plus(const std::vector<int>& orbitals) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dimension(), dimension());
    for (int p : all_or(orbitals)) out += create({p, Spin::Alpha}) * annihilate({p, Spin::Beta});
    return out;
}

Eigen::MatrixXd DenseFock::s_z(const std::vector<int>& orbitals) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dimension(), dimension());
    for (int p : all_or(orbitals)) out += 0.5 * (number({p, Spin::Alpha}) - number({p, Spin::Beta}));
    return out;
}

Eigen::MatrixXd DenseFock::s_x(const std::vector<int>& orbitals) const {
    const Eigen::MatrixXd sp = s_plus(orbitals);
    return 0.5 * (sp + sp.transpose());
}

Eigen::MatrixXd DenseFock::i_s_y(const std::vector<int>& orbitals) const {
    // S_y = (S+ - S-)/(2i)  =>  i S_y = (S+ - S-)/2.
    const Eigen::MatrixXd sp = s_plus(orbitals);
    return 0.5 * (sp - sp.transpose());
}

Eigen::MatrixXd DenseFock::s_squared() const {
    const Eigen::MatrixXd x = s_x(), iy = i_s_y(), z = s_z();
    // S_y^2 = -(i S_y)^2.
    return x * x - iy * iy + z * z;
}

std::size_t DenseFock::index_of(const Configuration& x) const {
    std::size_t idx = 0;
    for (int p = 0; p < m_; ++p) {
        if (x.alpha.test(static_cast<std::size_t>(p))) idx |= std::size_t{1} << p;
        if (x.beta.test(static_cast<std::size_t>(p))) idx |= std::size_t{1} << (m_ + p);
    }
    return idx;
}

Eigen::VectorXd DenseFock::basis_vector(const Configuration& x) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dimension());
    v(static_cast<Eigen::Index>(index_of(x))) = 1.0;
    return v;
}

Eigen::VectorXd DenseFock::to_dense(const SparseState& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dimension());
    for (const auto& [c, a] : v.entries()) out(static_cast<Eigen::Index>(index_of(c))) += a;
    return out;
}

Eigen::MatrixXd DenseFock::restrict(const Eigen::MatrixXd& a, const SubspaceBasis& basis) const {
    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = a(static_cast<Eigen::Index>(index_of(basis[static_cast<std::size_t>(i)])),
                          static_cast<Eigen::Index>(index_of(basis[static_cast<std::size_t>(j)])));
    return out;
}

Eigen::MatrixXd dense_hamiltonian(const Hamiltonian& h, const DenseFock& fock) {
    const int m = h.n_orbitals();
    if (m != fock.n_orbitals()) throw InputError("dense_hamiltonian: orbital count mismatch");
    using Sparse = DenseFock::Sparse;
    Sparse out(fock.dimension(), fock.dimension());
    constexpr Spin spins[2] = {Spin::Alpha, Spin::Beta};
    for (Spin s : spins)
        for (int p = 0; p < m; ++p)
            for (int r = 0; r < m; ++r)
                if (h.one_body(p, r) != 0.0) {
                    Sparse t = fock.create_sparse({p, s}) * fock.annihilate_sparse({r, s});
                    out += h.one_body(p, r) * t;
                }
    for (Spin s : spins)
        for (Spin t : spins)
            for (int p = 0; p < m; ++p)
                for (int r = 0; r < m; ++r)
                    for (int q = 0; q < m; ++q)
                        for (int u = 0; u < m; ++u) {
                            const double v = h.eri(p, r, q, u);
                            if (v == 0.0) continue;
                            Sparse term = fock.create_sparse({p, s}) * fock.create_sparse({q, t});
                            term = term * fock.annihilate_sparse({u, t});
                            term = term * fock.annihilate_sparse({r, s});
                            out += 0.5 * v * term;
                        }
    return h.core_energy() * fock.identity() + Eigen::MatrixXd(out);
}

double dense_expectation(const Eigen::MatrixXd& op, const Eigen::VectorXd& v) {
    if (op.rows() != v.size() || op.cols() != v.size()) throw InputError("dense_expectation: dimension mismatch");
    return v.dot(op * v);
}

}  // namespace extsqd::oracle
