// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "dgen/tensor.hpp"

namespace dgen {

/// Tucker factorization: an order-M core of shape K_1 x ... x K_M plus one
/// factor matrix per mode. Factors are stored D_m x K_m so reconstruction
/// applies them directly as mode products (the projection step uses their
/// transpose). Columns are orthonormal right after hosvd(); training is free
/// to destroy that.
struct TuckerFactors {
    Tensor core;
    std::vector<Matrix> factors;

    [[nodiscard]] std::vector<std::size_t> ranks() const;
    [[nodiscard]] std::vector<std::size_t> full_shape() const;
    /// Number of learnable scalars (core plus all factors).
    [[nodiscard]] std::size_t parameter_count() const;
};

struct RankSelection {
    std::vector<std::size_t> ranks;
    double achieved_error = 0.0;  // relative Frobenius, from a real reconstruction
    double budget = 0.0;          // the epsilon it was asked to meet
};

/// Truncated HO-SVD: factor m is the first K_m left singular vectors of the
/// mode-m unfolding; the core is the tensor projected onto all factors.
/// Throws InvalidRank unless 1 <= K_m <= D_m for every mode.
[[nodiscard]] TuckerFactors hosvd(const Tensor& t,
                                  const std::vector<std::size_t>& ranks);

/// core x_1 U_1 ... x_M U_M, expanding each mode from K_m back to D_m.
[[nodiscard]] Tensor reconstruct(const TuckerFactors& f);

/// Smallest per-mode ranks meeting a relative reconstruction error budget:
/// mode m keeps the fewest leading singular values whose discarded energy is
/// at most (eps^2 / M) * |t|_F^2 (ties at the boundary keep the extra
/// component), then the choice is verified by an actual reconstruction; while
/// it misses the budget, the mode with the largest next singular value gains
/// one rank. achieved_error always reports a real reconstruction.
[[nodiscard]] RankSelection select_ranks(const Tensor& t, double epsilon);

/// Parameter counts for a generated layer with weight dims D_1..D_{M-1} and
/// a trailing domain mode of extent S+1.
[[nodiscard]] std::size_t param_count_full(const std::vector<std::size_t>& dims,
                                           std::size_t source_count);
[[nodiscard]] std::size_t param_count_tucker(const std::vector<std::size_t>& dims,
                                             const std::vector<std::size_t>& ranks,
                                             std::size_t source_count);

/// Stacks S per-domain weight tensors plus one agnostic tensor along a new
/// trailing mode (agnostic slice last), picks ranks for `epsilon`, and runs
/// hosvd at those ranks.
[[nodiscard]] TuckerFactors init_from_stack(const std::vector<Tensor>& per_domain,
                                            const Tensor& agnostic,
                                            double epsilon);

/// Stacks slices along a new trailing mode. All inputs must share a shape.
[[nodiscard]] Tensor stack_along_new_mode(const std::vector<Tensor>& slices);

/// select_ranks + hosvd in one step.
[[nodiscard]] TuckerFactors factorize(const Tensor& t, double epsilon);

}  // namespace dgen
