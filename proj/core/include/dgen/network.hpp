// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dgen/dataset.hpp"
#include "dgen/domain.hpp"

namespace dgen {

enum class LayerKind { kFc, kConv2d, kRelu, kSoftmaxXent };

/// One network layer. Weight-bearing kinds (Fc, Conv2d) carry exactly one
/// of `generator` (domain-conditioned weights) or `plain` (one shared weight
/// set); ReLU and the softmax cross-entropy head carry neither. Frozen
/// layers keep their weights but receive no updates.
struct Layer {
    LayerKind kind = LayerKind::kRelu;
    std::optional<WeightGenerator> generator;
    std::optional<ConcreteWeights> plain;
    bool trainable = true;

    [[nodiscard]] bool weight_bearing() const {
        return kind == LayerKind::kFc || kind == LayerKind::kConv2d;
    }
};

struct Network {
    std::vector<Layer> layers;
    std::size_t source_count = 0;  // S; 0 for fully unconditioned networks
    std::size_t class_count = 0;
    std::vector<std::size_t> input_shape;

    /// True when no layer carries a generator (plain weights everywhere).
    [[nodiscard]] bool concrete() const;
};

void validate(const Network& net);

/// Class scores (length C). Parameterized layers generate their weights
/// from `z`; when z is null they fall back to the agnostic descriptor.
/// Plain layers ignore z. An FC layer flattens whatever shape reaches it.
[[nodiscard]] std::vector<double> forward(const Network& net, const Tensor& x,
                                          const DomainDescriptor* z = nullptr);

/// Activations entering the final weight-bearing layer (the feature vector
/// used by the shift metrics), flattened.
[[nodiscard]] std::vector<double> penultimate_features(const Network& net,
                                                       const Tensor& x,
                                                       const DomainDescriptor* z = nullptr);

/// A batch for one gradient step: for each source domain, `batch_size`
/// instances. Domain indices refer to positions among the network's S
/// sources.
struct DomainBatch {
    std::size_t domain = 0;
    std::vector<const Instance*> instances;
};

/// Per-layer gradient buffers aligned with Network::layers; entries exist
/// only for trainable weight-bearing layers.
struct LayerGrads {
    std::optional<GeneratorGrads> generator;
    std::optional<ConcreteWeights> plain;
};

struct NetworkGrads {
    std::vector<LayerGrads> layers;
};

[[nodiscard]] NetworkGrads make_zero_grads(const Network& net);

/// Mean over domains of the per-domain mean softmax cross-entropy, plus
/// exact gradients for every trainable parameter. Parameterized layers use
/// encode_domain(batch.domain, S, rho) per domain batch.
[[nodiscard]] double loss_and_grads(const Network& net,
                                    std::span<const DomainBatch> batch, double rho,
                                    NetworkGrads& grads);

/// Flat views over the trainable parameters (and matching gradients), in a
/// fixed order: per layer, weight form first (full tensor, or core then each
/// factor), then the bias table / bias. Used by the optimizer and by
/// finite-difference checks.
[[nodiscard]] std::vector<std::span<double>> parameter_spans(Network& net);
[[nodiscard]] std::vector<std::span<double>> gradient_spans(const Network& net,
                                                            NetworkGrads& grads);

struct TrainConfig {
    double learning_rate = 1e-2;  // desk-scale default; see also kFineTuneLearningRate
    double momentum = 0.9;
    std::size_t batch_size = 64;  // per domain
    std::size_t max_iterations = 1000;
    double rho = 0.3;
    std::uint64_t seed = 0;
    double val_fraction = 0.1;
    double weight_decay = 0.0;
    std::size_t val_every = 50;
};

/// Conservative rate for fine-tuning large pretrained stacks; far too small
/// for from-scratch desk-scale runs, kept as a named preset.
inline constexpr double kFineTuneLearningRate = 5e-5;

struct ValPoint {
    std::size_t iteration = 0;
    double accuracy = 0.0;
};

struct TrainReport {
    std::vector<double> loss_curve;       // one entry per iteration
    std::vector<ValPoint> val_curve;      // every val_every iterations + final
    std::size_t best_iteration = 0;
    double best_val_accuracy = 0.0;
    Network best;                         // best-on-validation checkpoint
};

/// SGD with momentum on per-domain batches (sampled with replacement from a
/// seeded per-domain 9:1-style split). Deterministic given the seed. The
/// network is left at its final state; the best-on-validation copy is in the
/// report.
[[nodiscard]] TrainReport train(Network& net, const MultiDomainDataset& data,
                                const TrainConfig& cfg);

/// Concrete network with every generated layer replaced by its agnostic
/// weights (z = [0,...,0,1]).
[[nodiscard]] Network extract_agnostic(const Network& net);

/// Multiclass accuracy; argmax ties break toward the lowest class index.
/// Parameterized networks with z == nullptr are scored agnostically.
[[nodiscard]] double evaluate(const Network& net, std::span<const Instance> instances,
                              const DomainDescriptor* z = nullptr);

}  // namespace dgen
