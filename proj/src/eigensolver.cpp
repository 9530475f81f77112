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

#include "extsqd/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "extsqd/error.hpp"

namespace extsqd {

namespace {

// Fix the arbitrary eigenvector sign: the largest-magnitude component
// (first one on ties) is made positive.
void normalize_signs(Eigen::MatrixXd& vecs) {
    for (Eigen::Index c = 0; c < vecs.cols(); ++c) {
        Eigen::Index best = 0;
        double mag = -1.0;
        for (Eigen::Index r = 0; r < vecs.rows(); ++r)
            if (std::abs(vecs(r, c)) > mag + 1e-12) {
                mag = std::abs(vecs(r, c));
                best = r;
            }
        if (vecs.rows() > 0 && vecs(best, c) < 0) vecs.col(c) *= -1.0;
    }
}

}  // namespace

bool EigResult::all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool b) { return b; });
}

EigResult dense_eigh(const Eigen::MatrixXd& a, std::size_t n_roots) {
    if (a.rows() != a.cols()) throw InputError("dense_eigh: matrix is not square");
    const auto n = static_cast<std::size_t>(a.rows());
    if (n_roots == 0 || n_roots > n) n_roots = n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (a + a.transpose()));
    if (solver.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolver failed");
    const auto k = static_cast<Eigen::Index>(n_roots);
    EigResult r;
    r.eigenvalues = solver.eigenvalues().head(k);
    r.eigenvectors = solver.eigenvectors().leftCols(k);
    normalize_signs(r.eigenvectors);
    r.residual_norms.resize(n_roots);
    for (Eigen::Index c = 0; c < k; ++c)
        r.residual_norms[static_cast<std::size_t>(c)] =
            (a * r.eigenvectors.col(c) - r.eigenvalues(c) * r.eigenvectors.col(c)).norm();
    r.converged.assign(n_roots, true);
    r.iterations = 1;
    return r;
}

Eigen::MatrixXd to_dense(const SymmetricOperator& op) {
    const auto n = static_cast<Eigen::Index>(op.dimension());
    Eigen::MatrixXd a(n, n);
    op.dense({a.data(), static_cast<std::size_t>(n * n)});
    return a;
}

EigResult davidson(const SymmetricOperator& op, std::size_t n_roots, const std::optional<Eigen::MatrixXd>& guess,
                   DavidsonOptions options) {
    const std::size_t n = op.dimension();
    if (n_roots > n) throw InputError("davidson: requested more roots than the dimension");
    if (!(options.tol > 0.0)) throw InputError("davidson: tolerance must be positive");
    if (n_roots == 0) return {};

    if (n <= options.dense_threshold) {
        const Eigen::MatrixXd a = to_dense(op);
        EigResult r = dense_eigh(a, n_roots);
        for (std::size_t c = 0; c < n_roots; ++c) r.converged[c] = r.residual_norms[c] <= std::max(options.tol, 1e-10);
        return r;
    }

    using Eigen::Index;
    const Index dim = static_cast<Index>(n);
    const Index k = static_cast<Index>(n_roots);
    const Index max_sub = std::min<Index>(dim, std::max<Index>(options.restart_factor * k, 2 * k + 1));
    const std::vector<double> diag = op.diagonal();

    auto matvec = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd y(dim);
        op.apply({x.data(), n}, {y.data(), n});
        return y;
    };

    Eigen::MatrixXd V(dim, 0), AV(dim, 0);
    // Gram-Schmidt (two passes) against V; appends if the remainder is significant.
    auto append = [&](Eigen::VectorXd t) {
        const double before = t.norm();
        if (before == 0.0) return false;
        for (int pass = 0; pass < 2; ++pass)
            if (V.cols() > 0) t -= V * (V.transpose() * t);
        const double after = t.norm();
        if (after < 1e-8 * before || after < 1e-14) return false;
        t /= after;
        V.conservativeResize(Eigen::NoChange, V.cols() + 1);
        V.col(V.cols() - 1) = t;
        AV.conservativeResize(Eigen::NoChange, AV.cols() + 1);
        AV.col(AV.cols() - 1) = matvec(t);
        return true;
    };

    if (guess) {
        if (guess->rows() != dim) throw InputError("davidson: guess has the wrong number of rows");
        for (Index c = 0; c < guess->cols() && V.cols() < k; ++c) append(guess->col(c));
    }
    {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return diag[a] < diag[b]; });
        for (std::size_t i = 0; i < n && V.cols() < k; ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
            e(static_cast<Index>(order[i])) = 1.0;
            append(e);
        }
    }

    EigResult r;
    r.residual_norms.assign(n_roots, 0.0);
    r.converged.assign(n_roots, false);
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        r.iterations = iter;
        Eigen::MatrixXd t = V.transpose() * AV;
        t = 0.5 * (t + t.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(t);
        const Index kk = std::min<Index>(k, V.cols());
        const Eigen::VectorXd theta = small.eigenvalues().head(kk);
        const Eigen::MatrixXd s = small.eigenvectors().leftCols(kk);
        Eigen::MatrixXd x = V * s;
        Eigen::MatrixXd ax = AV * s;
        Eigen::MatrixXd res = ax - x * theta.asDiagonal();

        bool done = kk == k;
        for (Index c = 0; c < kk; ++c) {
            const double rn = res.col(c).norm();
            r.residual_norms[static_cast<std::size_t>(c)] = rn;
            r.converged[static_cast<std::size_t>(c)] = rn <= options.tol;
            done = done && rn <= options.tol;
        }
        r.eigenvalues = theta;
        r.eigenvectors = x;
        if (done || V.cols() == dim) {
            if (V.cols() == dim) std::fill(r.converged.begin(), r.converged.end(), true);
            break;
        }

        std::vector<Eigen::VectorXd> corrections;
        for (Index c = 0; c < kk; ++c) {
            if (r.converged[static_cast<std::size_t>(c)]) continue;
            Eigen::VectorXd corr(dim);
            for (Index i = 0; i < dim; ++i) {
                double denom = theta(c) - diag[static_cast<std::size_t>(i)];
                if (std::abs(denom) < 1e-8) denom = std::copysign(1e-8, denom);
                corr(i) = res(i, c) / denom;
            }
            corrections.push_back(std::move(corr));
        }
        if (V.cols() + static_cast<Index>(corrections.size()) > max_sub) {
            V = x;
            AV = ax;
        }
        bool grew = false;
        for (auto& corr : corrections) grew = append(std::move(corr)) || grew;
        if (!grew) {
            // Preconditioned residuals lie in span(V); fall back to raw residuals.
            for (Index c = 0; c < kk; ++c)
                if (!r.converged[static_cast<std::size_t>(c)]) grew = append(res.col(c)) || grew;
        }
        if (!grew) break;
    }
    normalize_signs(r.eigenvectors);
    return r;
}

GeneralizedEigResult generalized_eig(const Eigen::MatrixXd& m, const Eigen::MatrixXd& s, double tau,
                                     std::size_t n_roots) {
    using Eigen::Index;
    if (m.rows() != m.cols() || s.rows() != s.cols() || m.rows() != s.rows())
        throw InputError("generalized_eig: matrices must be square and of equal size");
    if (!(tau > 0.0 && tau < 1.0)) throw InputError("generalized_eig: tau must lie in (0, 1)");
    const Index n = m.rows();
    GeneralizedEigResult out;
    if (n == 0) return out;

    // Unit-diagonal scaling; rows of (numerically) zero norm carry no state.
    const double max_diag = s.diagonal().maxCoeff();
    std::vector<Index> keep;
    for (Index i = 0; i < n; ++i)
        if (s(i, i) > 1e-14 * max_diag && s(i, i) > 0.0) keep.push_back(i);
    const Index nk = static_cast<Index>(keep.size());
    if (nk == 0) throw InputError("generalized_eig: overlap matrix is zero");
    Eigen::VectorXd scale(nk);
    Eigen::MatrixXd sn(nk, nk), mn(nk, nk);
    for (Index a = 0; a < nk; ++a) scale(a) = 1.0 / std::sqrt(s(keep[a], keep[a]));
    for (Index a = 0; a < nk; ++a)
        for (Index b = 0; b < nk; ++b) {
            sn(a, b) = scale(a) * s(keep[a], keep[b]) * scale(b);
            mn(a, b) = scale(a) * m(keep[a], keep[b]) * scale(b);
        }
    sn = 0.5 * (sn + sn.transpose());
    mn = 0.5 * (mn + mn.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> overlap(sn);
    const Eigen::VectorXd lam = overlap.eigenvalues();
    const double lam_max = lam.maxCoeff();
    if (lam.minCoeff() < -tau * lam_max)
        throw InputError("generalized_eig: overlap matrix has a significantly negative eigenvalue");
    std::vector<Index> modes;
    for (Index i = 0; i < nk; ++i)
        if (lam(i) >= tau * lam_max) modes.push_back(i);
    const Index nm = static_cast<Index>(modes.size());
    Eigen::MatrixXd x(nk, nm);
    for (Index j = 0; j < nm; ++j) x.col(j) = overlap.eigenvectors().col(modes[j]) / std::sqrt(lam(modes[j]));

    EigResult reduced = dense_eigh(x.transpose() * mn * x, n_roots);
    const Eigen::MatrixXd y = x * reduced.eigenvectors;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, y.cols());
    for (Index a = 0; a < nk; ++a) d.row(keep[a]) = scale(a) * y.row(a);
    normalize_signs(d);

    out.kept_dimension = static_cast<std::size_t>(nm);
    out.result.eigenvalues = reduced.eigenvalues;
    out.result.eigenvectors = d;
    out.result.iterations = 1;
    out.result.converged.assign(static_cast<std::size_t>(d.cols()), true);
    out.result.residual_norms.resize(static_cast<std::size_t>(d.cols()));
    for (Index c = 0; c < d.cols(); ++c)
        out.result.residual_norms[static_cast<std::size_t>(c)] =
            (m * d.col(c) - reduced.eigenvalues(c) * (s * d.col(c))).norm();
    return out;
}

}  // namespace extsqd
