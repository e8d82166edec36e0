// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dgen/tensor.hpp"
#include "dgen/tucker.hpp"

namespace dgen {

enum class DescriptorKind { kTwoHot, kAgnosticOnly };

/// Domain encoding of length S+1: a 2-hot vector with the active domain's
/// entry at rho and the shared (last) entry at 1, or the bias-only agnostic
/// vector [0,...,0,1].
struct DomainDescriptor {
    std::vector<double> values;
    DescriptorKind kind = DescriptorKind::kAgnosticOnly;
    std::size_t domain = 0;  // 0-based; meaningful for kTwoHot only
    double rho = 0.0;        // meaningful for kTwoHot only

    [[nodiscard]] std::size_t source_count() const { return values.size() - 1; }
};

/// TwoHot descriptor for `domain` (0-based) out of `source_count` domains.
[[nodiscard]] DomainDescriptor encode_domain(std::size_t domain,
                                             std::size_t source_count, double rho);

/// The bias-only extraction vector [0,...,0,1].
[[nodiscard]] DomainDescriptor agnostic_descriptor(std::size_t source_count);

struct FcShape {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
};

/// Valid-padding, stride-1 conv kernel: height x width x depth x filters.
struct Conv2dShape {
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t in_depth = 0;
    std::size_t filters = 0;
};

/// Shared parameters from which one layer's concrete weights are generated
/// per domain. The weight tensor carries a trailing mode of extent S+1
/// (domain slices first, shared slice last), either as a full tensor or as
/// Tucker factors. Biases always use a small full (S+1) x outputs table.
struct WeightGenerator {
    std::variant<FcShape, Conv2dShape> layer_shape;
    std::variant<Tensor, TuckerFactors> form;
    Matrix bias_table;

    [[nodiscard]] bool factored() const {
        return std::holds_alternative<TuckerFactors>(form);
    }
    [[nodiscard]] std::size_t source_count() const;
    [[nodiscard]] std::size_t output_count() const;
    /// Concrete weight shape, without the trailing domain mode.
    [[nodiscard]] std::vector<std::size_t> weight_shape() const;
    /// Learnable scalar count (weight form plus bias table).
    [[nodiscard]] std::size_t parameter_count() const;
};

/// Checks internal consistency; throws ShapeError on any mismatch.
void validate(const WeightGenerator& gen);

struct ConcreteWeights {
    Tensor weights;
    std::vector<double> bias;
};

/// Synthesizes a layer's concrete weights for a domain descriptor. The full
/// form contracts the trailing mode with z; the factored form contracts z
/// into the trailing factor first and only then expands the remaining modes,
/// never materializing the full tensor. bias = z^T bias_table.
[[nodiscard]] ConcreteWeights generate(const WeightGenerator& gen,
                                       const DomainDescriptor& z);

/// Linear special case: columns of `stacked` are [delta_1 .. delta_S theta_0]
/// and the generated weight vector is stacked * z. With rho = 1 this is the
/// classic shared-plus-offset weight sum.
[[nodiscard]] std::vector<double> undo_bias_linear(const Matrix& stacked,
                                                   std::span<const double> z);

class Rng;

/// Fan-in-scaled uniform init (+-sqrt(6/fan_in)) drawn in storage order.
/// Domain slices start at 0.1x that scale so the shared slice dominates
/// early; bias tables start at zero.
[[nodiscard]] WeightGenerator make_full_generator(
    std::variant<FcShape, Conv2dShape> layer_shape, std::size_t source_count,
    Rng& rng);

/// Full init as above, then rank selection at `epsilon` and HO-SVD; the
/// result trains as Tucker factors from the start.
[[nodiscard]] WeightGenerator make_factored_generator(
    std::variant<FcShape, Conv2dShape> layer_shape, std::size_t source_count,
    double epsilon, Rng& rng);

/// Unconditioned weights with the same fan-in-scaled init, zero bias.
[[nodiscard]] ConcreteWeights make_plain_weights(
    const std::variant<FcShape, Conv2dShape>& layer_shape, Rng& rng);

/// Gradient buffers matching a generator's parameters.
struct GeneratorGrads {
    std::optional<Tensor> full;
    std::optional<TuckerFactors> factored;
    Matrix bias_table;

    [[nodiscard]] static GeneratorGrads zeros_like(const WeightGenerator& gen);
};

/// Chain rule from a concrete-weight gradient back to generator parameters,
/// for the descriptor the weights were generated with. Accumulates into
/// `out`. The factored path mirrors the factor-first contraction order.
void accumulate_generation_grads(const WeightGenerator& gen,
                                 const DomainDescriptor& z,
                                 const Tensor& weight_grad,
                                 std::span<const double> bias_grad,
                                 GeneratorGrads& out);

}  // namespace dgen
