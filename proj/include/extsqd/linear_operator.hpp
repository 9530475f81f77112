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

#include <cstddef>
#include <span>
#include <vector>

namespace extsqd {

/// Real symmetric operator exposed through its action on vectors.
class SymmetricOperator {
   public:
    virtual ~SymmetricOperator() = default;
    virtual std::size_t dimension() const = 0;
    /// y = A x; x and y have length dimension() and do not alias.
    virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
    /// Diagonal of A, used for preconditioning and initial guesses.
    virtual std::vector<double> diagonal() const = 0;
    /// Writes A column-major into out (dimension()^2 values). The default
    /// applies A to each unit vector.
    virtual void dense(std::span<double> out) const {
        const std::size_t n = dimension();
        std::vector<double> e(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            e[j] = 1.0;
            apply(e, out.subspan(j * n, n));
            e[j] = 0.0;
        }
    }
};

}  // namespace extsqd
