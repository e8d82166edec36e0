// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "dgen/network.hpp"

namespace dgen::cli {

/// Training modes, named after the ablation ladder rows they implement.
/// The three *-last modes freeze an identically-initialized shared body and
/// differ only in the final layer's treatment; deep_all and full train every
/// layer.
enum class Mode {
    kDeepAll,          // pooled sources, one unconditioned weight set
    kTuningLast,       // frozen body, plain trainable final layer
    kTwoHotLast,       // frozen body, final layer generated (full form)
    kTwoHotDecompLast, // frozen body, final layer generated + factorized
    kFull,             // every weight layer generated + factorized
};

[[nodiscard]] Mode mode_from_name(const std::string& name);
[[nodiscard]] std::string mode_name(Mode mode);
[[nodiscard]] const std::vector<Mode>& all_modes();

struct ExperimentConfig {
    std::size_t hidden = 32;
    double epsilon = 0.1;  // rank-selection budget for factored modes
    TrainConfig train;
};

/// Reference desk-scale architecture for vector inputs:
/// FC(input -> hidden), ReLU, FC(hidden -> classes), softmax head. The body
/// init consumes the same draws in every mode, so all modes that freeze the
/// body freeze identical weights for a given seed.
[[nodiscard]] Network build_mode_network(Mode mode,
                                         const std::vector<std::size_t>& input_shape,
                                         std::size_t class_count,
                                         std::size_t source_count,
                                         const ExperimentConfig& cfg);

struct RunResult {
    TrainReport report;
    Network agnostic;  // extracted from the best-on-validation network
    double held_out_accuracy = 0.0;
};

/// Trains one mode on the source domains and scores the extracted agnostic
/// model on the held-out domain. The caller assembles `sources` before any
/// mode-specific code runs.
[[nodiscard]] RunResult run_mode(Mode mode, const MultiDomainDataset& sources,
                                 const MultiDomainDataset& held_out,
                                 const ExperimentConfig& cfg);

/// deep_all restricted to a single source domain; returns held-out accuracy.
[[nodiscard]] double run_single_source(const MultiDomainDataset& sources,
                                       std::size_t source_index,
                                       const MultiDomainDataset& held_out,
                                       const ExperimentConfig& cfg);

}  // namespace dgen::cli
