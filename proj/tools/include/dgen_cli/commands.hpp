// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "dgen/dataset.hpp"
#include "dgen_cli/experiment.hpp"

namespace dgen::cli {

/// Dataset source: a directory (--dataset) or a synthetic spec (--synthetic-spec,
/// inline JSON or a path to a JSON file). Exactly one must be given.
struct DataOptions {
    std::string dataset_dir;
    std::string synthetic_spec;
    std::uint64_t seed = 0;  // feeds spec.seed when the JSON omits one
};

[[nodiscard]] SyntheticSpec parse_synthetic_spec(const std::string& json_or_path,
                                                 std::uint64_t fallback_seed);
[[nodiscard]] MultiDomainDataset resolve_dataset(const DataOptions& data);

struct TrainOptions {
    DataOptions data;
    std::string held_out;
    std::string mode = "full";
    double epsilon = 0.1;
    std::size_t hidden = 32;
    std::string out_dir;
    TrainConfig train;
    bool rho_explicit = false;  // for the deep_all warning
};

struct EvalOptions {
    std::string checkpoint_dir;
    DataOptions data;
    std::string domain;
    std::string out_dir;
};

struct ShiftOptions {
    DataOptions data;
    std::string feature_source = "raw";  // raw | penultimate
    std::string checkpoint_dir;          // required for penultimate
    std::string out_dir;
};

struct DecomposeOptions {
    std::string checkpoint_dir;
    double epsilon = 0.001;
    std::string out_dir;
};

struct AblateOptions {
    DataOptions data;
    double epsilon = 0.1;
    std::size_t hidden = 32;
    std::string out_dir;
    TrainConfig train;
};

struct SynthOptions {
    std::string synthetic_spec;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int cmd_train(const TrainOptions& opt);
int cmd_eval(const EvalOptions& opt);
int cmd_shift(const ShiftOptions& opt);
int cmd_decompose(const DecomposeOptions& opt);
int cmd_ablate(const AblateOptions& opt);
int cmd_synth(const SynthOptions& opt);

/// Maps the library's error hierarchy onto the documented exit codes:
/// 0 success, 2 config error, 3 data/format error, 4 numeric failure.
int run_with_exit_codes(const std::function<int()>& body);

}  // namespace dgen::cli
