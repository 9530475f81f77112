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

#include <cmath>
#include <Eigen/Sparse>
#include <random>

#include "doctest.h"
#include "extsqd/eigensolver.hpp"
#include "extsqd/error.hpp"
#include "extsqd/hamiltonian.hpp"

using namespace extsqd;

namespace {

class MatrixOperator final : public SymmetricOperator {
   public:
    explicit MatrixOperator(Eigen::SparseMatrix<double> a) : a_(std::move(a)) {}
    std::size_t dimension() const override { return static_cast<std::size_t>(a_.rows()); }
    void apply(std::span<const double> x, std::span<double> y) const override {
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), a_.rows());
        Eigen::Map<Eigen::VectorXd> yv(y.data(), a_.rows());
        yv = a_ * xv;
    }
    std::vector<double> diagonal() const override {
        const Eigen::VectorXd d = a_.diagonal();
        return {d.data(), d.data() + d.size()};
    }

   private:
    Eigen::SparseMatrix<double> a_;
};

MatrixOperator from_dense(const Eigen::MatrixXd& a) { return MatrixOperator(a.sparseView()); }

void check_orthonormal(const Eigen::MatrixXd& v) {
    const Eigen::MatrixXd g = v.transpose() * v;
    CHECK((g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() < 1e-10);
}

}  // namespace

TEST_CASE("small dense examples") {
    Eigen::MatrixXd a(2, 2);
    a << 0, 1, 1, 0;
    const auto r = davidson(from_dense(a), 2);
    CHECK(r.eigenvalues(0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(r.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.all_converged());

    const auto id = davidson(from_dense(Eigen::MatrixXd::Identity(7, 7)), 4, std::nullopt, {.dense_threshold = 0});
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(std::abs(id.eigenvalues(i) - 1.0) < 1e-12);
    check_orthonormal(id.eigenvectors);

    CHECK_THROWS_AS(davidson(from_dense(a), 3), InputError);
    CHECK_THROWS_AS(davidson(from_dense(a), 1, std::nullopt, {.tol = 0.0}), InputError);
}

TEST_CASE("Davidson on the (6e,6o) Hubbard sector matches the dense spectrum") {
    auto h = std::make_shared<const Hamiltonian>(hubbard_chain(6, 1.0, 4.0, false));
    auto b = std::make_shared<const SubspaceBasis>(enumerate_sector({6, 3, 3}));
    REQUIRE(b->size() == 400);
    const auto op = build_subspace_operator(h, b);
    const auto ref = dense_eigh(to_dense(*op), 3);
    const auto r = davidson(*op, 3, std::nullopt, {.tol = 1e-10, .dense_threshold = 0});
    CHECK(r.all_converged());
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(r.eigenvalues(i) - ref.eigenvalues(i)) < 1e-9);
    check_orthonormal(r.eigenvectors);
    const Eigen::MatrixXd dense = to_dense(*op);
    for (Eigen::Index i = 0; i < 3; ++i)
        CHECK((dense * r.eigenvectors.col(i) - r.eigenvalues(i) * r.eigenvectors.col(i)).norm() < 1e-9);
}

TEST_CASE("row-wise dense assembly equals the matvec default") {
    auto h = std::make_shared<const Hamiltonian>(hubbard_chain(5, 1.0, 3.0, true));
    auto b = std::make_shared<const SubspaceBasis>(enumerate_sector({5, 3, 2}));
    const auto expl = build_subspace_operator(h, b, {.chunk = 7});
    const auto free = build_subspace_operator(h, b, {.explicit_threshold = 0, .workers = 3, .chunk = 7});
    REQUIRE(expl->is_explicit());
    REQUIRE_FALSE(free->is_explicit());
    const std::size_t n = b->size();
    Eigen::MatrixXd by_matvec(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    free->SymmetricOperator::dense({by_matvec.data(), n * n});
    CHECK(to_dense(*expl) == by_matvec);
    CHECK(to_dense(*free) == by_matvec);
    CHECK(by_matvec == by_matvec.transpose());
}

TEST_CASE("Davidson matches dense diagonalization on random sparse symmetric matrices") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        CAPTURE(trial);
        const int n = 20 + static_cast<int>(rng() % 381);
        std::vector<Eigen::Triplet<double>> trips;
        for (int i = 0; i < n; ++i) trips.emplace_back(i, i, 10.0 * u(rng));
        for (int e = 0; e < 4 * n; ++e) {
            const int i = static_cast<int>(rng() % static_cast<unsigned>(n));
            const int j = static_cast<int>(rng() % static_cast<unsigned>(n));
            if (i == j) continue;
            const double v = u(rng);
            trips.emplace_back(i, j, v);
            trips.emplace_back(j, i, v);
        }
        Eigen::SparseMatrix<double> a(n, n);
        a.setFromTriplets(trips.begin(), trips.end());
        const MatrixOperator op(a);
        const auto ref = dense_eigh(Eigen::MatrixXd(a), 3);
        const auto r = davidson(op, 3, std::nullopt, {.tol = 1e-10, .max_iter = 2000, .dense_threshold = 0});
        CHECK(r.all_converged());
        for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(r.eigenvalues(i) - ref.eigenvalues(i)) < 1e-9);
        for (Eigen::Index i = 1; i < 3; ++i) CHECK(r.eigenvalues(i) >= r.eigenvalues(i - 1));
        // Later roots are orthogonal to earlier ones.
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < i; ++j)
                CHECK(std::abs(r.eigenvectors.col(i).dot(r.eigenvectors.col(j))) < 1e-10);
    }
}

TEST_CASE("Davidson flags unconverged roots instead of throwing") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd a(300, 300);
    for (Eigen::Index i = 0; i < 300; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
    const auto r = davidson(from_dense(a), 2, std::nullopt, {.tol = 1e-12, .max_iter = 2, .dense_threshold = 0});
    CHECK(r.iterations == 2);
    CHECK_FALSE(r.all_converged());
    CHECK(r.eigenvalues.size() == 2);
}

TEST_CASE("Davidson uses a supplied guess") {
    auto h = std::make_shared<const Hamiltonian>(hubbard_chain(6, 1.0, 4.0, false));
    auto b = std::make_shared<const SubspaceBasis>(enumerate_sector({6, 3, 3}));
    const auto op = build_subspace_operator(h, b);
    const auto ref = dense_eigh(to_dense(*op), 1);
    const auto r = davidson(*op, 1, ref.eigenvectors, {.dense_threshold = 0});
    CHECK(r.iterations == 1);
    CHECK(std::abs(r.eigenvalues(0) - ref.eigenvalues(0)) < 1e-12);
}

TEST_CASE("generalized eigenproblem") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto random_sym = [&](int n) {
        Eigen::MatrixXd a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
        return a;
    };
    auto random_spd = [&](int n) {
        Eigen::MatrixXd g(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = u(rng);
        return Eigen::MatrixXd(g * g.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n));
    };

    SUBCASE("identity overlap") {
        const Eigen::MatrixXd m = random_sym(6);
        const auto g = generalized_eig(m, Eigen::MatrixXd::Identity(6, 6));
        CHECK(g.kept_dimension == 6);
        const auto ref = dense_eigh(m);
        CHECK((g.result.eigenvalues - ref.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("exact rank deficiency") {
        Eigen::MatrixXd v(5, 4);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 4; ++j) v(i, j) = u(rng);
        const Eigen::MatrixXd s = v * v.transpose();
        const auto g = generalized_eig(random_sym(5), s, 1e-8);
        CHECK(g.kept_dimension == 4);
    }
    SUBCASE("explicit inverse square root reference") {
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::MatrixXd m = random_sym(7), s = random_spd(7);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
            const Eigen::MatrixXd s_inv_half = es.operatorInverseSqrt();
            const auto ref = dense_eigh(s_inv_half * m * s_inv_half);
            const auto g = generalized_eig(m, s, 1e-12);
            REQUIRE(g.kept_dimension == 7);
            CHECK((g.result.eigenvalues - ref.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
            // S-orthonormal eigenvectors and small residuals.
            const Eigen::MatrixXd& d = g.result.eigenvectors;
            CHECK((d.transpose() * s * d - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-9);
            for (double rn : g.result.residual_norms) CHECK(rn < 1e-9);
        }
    }
    SUBCASE("congruence scaling invariance") {
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::MatrixXd m = random_sym(6), s = random_spd(6);
            Eigen::VectorXd dvec(6);
            for (int i = 0; i < 6; ++i) dvec(i) = std::exp(3.0 * u(rng));
            const Eigen::MatrixXd d = dvec.asDiagonal();
            const auto a = generalized_eig(m, s);
            const auto b = generalized_eig(d * m * d, d * s * d);
            CHECK(a.kept_dimension == b.kept_dimension);
            CHECK((a.result.eigenvalues - b.result.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    SUBCASE("invalid input") {
        Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
        s(2, 2) = 1.0;
        s(0, 1) = s(1, 0) = 2.0;  // eigenvalues 3, 1, -1
        CHECK_THROWS_AS(generalized_eig(random_sym(3), s), InputError);
        CHECK_THROWS_AS(generalized_eig(random_sym(3), Eigen::MatrixXd::Identity(2, 2)), InputError);
        CHECK_THROWS_AS(generalized_eig(random_sym(3), Eigen::MatrixXd::Identity(3, 3), 0.0), InputError);
    }
}
