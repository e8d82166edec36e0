// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "dgen/network.hpp"

namespace dgen {

/// Checkpoint directory: manifest.json (format_version 1, kind
/// "parameterized"/"concrete", S, rho, class_count, input_shape, per-layer
/// entries) plus one DGT1 payload per tensor. Load/save round-trips are
/// bit-exact.
struct Checkpoint {
    Network network;
    double rho = 0.0;  // training-time descriptor ratio, echoed for provenance
};

void save_checkpoint(const std::filesystem::path& dir, const Network& net,
                     double rho);

[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// TrainReport as JSON (loss/accuracy curves, config echo, seed). The best
/// network itself is saved separately as a checkpoint.
[[nodiscard]] nlohmann::json train_report_json(const TrainReport& report,
                                               const TrainConfig& cfg);

}  // namespace dgen
