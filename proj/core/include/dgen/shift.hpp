// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "dgen/tensor.hpp"

namespace dgen {

/// One domain's feature vectors (instances x feature dim).
using FeatureSet = std::vector<std::vector<double>>;

/// Softmax of the element-wise mean feature vector: a strictly positive
/// probability vector over feature dimensions.
struct DomainDistribution {
    std::vector<double> probs;
};

[[nodiscard]] DomainDistribution domain_distribution(const FeatureSet& features);

/// sum_k p_k ln(p_k / q_k), natural log. Non-negative for any two softmax
/// outputs; zero iff p == q.
[[nodiscard]] double kld(const DomainDistribution& p, const DomainDistribution& q);

/// d_shift = (1/(m*n)) sum_i sum_j lambda_i KLD(source_i || target_j), with
/// size-proportional weights lambda_i = n * N_i / sum_k N_k so equally-sized
/// sources reduce to a plain mean of the pairwise matrix.
struct ShiftReport {
    double d_shift = 0.0;
    Matrix pairwise_kld;           // n sources x m targets
    std::vector<double> lambdas;   // length n
};

[[nodiscard]] ShiftReport domain_shift(const std::vector<FeatureSet>& sources,
                                       const std::vector<FeatureSet>& targets);

/// Per-domain within-minus-cross accuracy margins and their mean.
struct MarginReport {
    std::vector<double> margins;
    double mean = 0.0;
};

[[nodiscard]] MarginReport accuracy_margin(const std::vector<double>& within,
                                           const std::vector<double>& cross);

}  // namespace dgen
