// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "dgen/tensor.hpp"

namespace dgen {

/// Thin SVD A = U diag(S) V^T with K = min(rows, cols) columns in U and V.
/// Singular values are non-negative and sorted descending. Each column of U
/// has its largest-magnitude entry positive (first such entry on ties), with
/// V flipped to match, so the factorization is unique up to degenerate
/// singular values and bit-reproducible across runs.
struct SvdResult {
    Matrix u;
    std::vector<double> singular_values;
    Matrix v;
};

/// One-sided Jacobi SVD: cyclic sweeps of plane rotations orthogonalizing
/// the columns of A (the wide case runs on A^T and swaps U/V). Declares
/// convergence when every off-diagonal Gram term is below 1e-12 * |A|_F^2,
/// capped at 60 sweeps. Fully sequential and deterministic given identical
/// input bits.
///
/// Throws NumericError on non-finite input.
[[nodiscard]] SvdResult svd(const Matrix& a);

/// Appends deterministic orthonormal columns (completed from the canonical
/// basis) until `u` has `k` columns. Needed when a truncation rank exceeds
/// the thin-SVD column count of a wide unfolding.
[[nodiscard]] Matrix extend_to_orthonormal(const Matrix& u, std::size_t k);

}  // namespace dgen
