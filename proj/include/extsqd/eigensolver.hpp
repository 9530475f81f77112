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
#include <optional>
#include <vector>

#include "extsqd/linear_operator.hpp"

namespace extsqd {

/// Lowest eigenpairs of a symmetric problem.
struct EigResult {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // one column per root
    std::vector<double> residual_norms;
    std::vector<bool> converged;
    int iterations = 0;

    std::size_t n_roots() const { return static_cast<std::size_t>(eigenvalues.size()); }
    bool all_converged() const;
};

struct DavidsonOptions {
    double tol = 1e-8;
    int max_iter = 200;
    /// Subspace size that triggers a restart, as a multiple of n_roots.
    int restart_factor = 8;
    /// Problems of this dimension or smaller are solved densely.
    std::size_t dense_threshold = 500;
};

/// Dense symmetric eigensolve; returns the lowest n_roots pairs (all if n_roots == 0).
EigResult dense_eigh(const Eigen::MatrixXd& a, std::size_t n_roots = 0);

/// Materializes an operator as a dense matrix, one matvec per column.
Eigen::MatrixXd to_dense(const SymmetricOperator& op);

/// Block Davidson with diagonal preconditioning.
///
/// Roots that fail to reach `tol` within `max_iter` iterations are flagged in
/// EigResult::converged; the result is still returned. Throws InputError if
/// n_roots exceeds the dimension or tol <= 0.
EigResult davidson(const SymmetricOperator& op, std::size_t n_roots,
                   const std::optional<Eigen::MatrixXd>& guess = std::nullopt, DavidsonOptions options = {});

struct GeneralizedEigResult {
    EigResult result;
    std::size_t kept_dimension = 0;
};

/// Solves M d = S d e by canonical orthogonalization.
///
/// Both matrices are first scaled by D = diag(S)^(-1/2) so that S has a unit
/// diagonal (rows with zero norm are dropped). Overlap modes with eigenvalue
/// below tau times the largest are discarded. Eigenvectors are returned in the
/// original, unscaled coordinates and are S-orthonormal. Throws InputError if
/// S has an eigenvalue below -tau * max.
GeneralizedEigResult generalized_eig(const Eigen::MatrixXd& m, const Eigen::MatrixXd& s, double tau = 1e-8,
                                     std::size_t n_roots = 0);

}  // namespace extsqd
