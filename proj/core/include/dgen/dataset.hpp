// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dgen/tensor.hpp"

namespace dgen {

struct Instance {
    Tensor x;
    std::uint32_t label = 0;  // 0-based, in [0, class_count)
};

struct Domain {
    std::string name;
    std::vector<Instance> instances;
};

/// Labeled data from S named domains over one label space; every instance
/// shares the same input shape.
struct MultiDomainDataset {
    std::vector<Domain> domains;
    std::size_t class_count = 0;
    std::vector<std::size_t> input_shape;

    [[nodiscard]] std::size_t domain_count() const { return domains.size(); }
    [[nodiscard]] const Domain& domain(const std::string& name) const;
    [[nodiscard]] bool has_domain(const std::string& name) const;
};

/// Throws if labels fall outside [0, class_count) or shapes disagree.
void validate(const MultiDomainDataset& d);

/// Directory format: manifest.json (format_version 1, class_count,
/// input_shape, per-domain instance/label file names) plus one DGT1 tensor
/// per domain stacking instances along a leading mode and one u32 label
/// file per domain. Round-trips bit-exactly.
void save_dataset(const std::filesystem::path& dir, const MultiDomainDataset& d);
[[nodiscard]] MultiDomainDataset load_dataset(const std::filesystem::path& dir);

/// Recipe for the synthetic multi-domain benchmark: class prototypes are
/// shared across domains; each domain distorts them with its own transform
/// (rotation by angle_deg in a domain-specific random 2-plane, scaling, and
/// a shift along a domain-specific random direction). Generation is a pure
/// function of the spec.
struct SyntheticSpec {
    std::size_t class_count = 5;
    std::size_t domain_count = 4;
    std::size_t input_dim = 16;
    std::size_t instances_per_class = 200;  // per domain
    double prototype_scale = 2.0;
    double noise_std = 1.0;
    std::vector<double> angles_deg;   // one per domain; empty = all 0
    std::vector<double> scales;       // one per domain; empty = all 1
    std::vector<double> bias_shifts;  // one per domain; empty = all 0
    double label_noise = 0.0;         // in [0, 0.5)
    std::uint64_t seed = 0;
    std::vector<std::string> names;   // empty = d0, d1, ...
};

void validate(const SyntheticSpec& spec);

[[nodiscard]] MultiDomainDataset generate_synthetic(const SyntheticSpec& spec);

/// Per-domain seeded shuffle, then split: validation takes
/// ceil(fraction * N_d) instances, training the rest. Instance order within
/// each split follows the original dataset order.
struct SplitDataset {
    MultiDomainDataset train;
    MultiDomainDataset val;
};

[[nodiscard]] SplitDataset split_train_val(const MultiDomainDataset& d,
                                           double fraction, std::uint64_t seed);

/// Dataset minus one named domain (the DG training view) plus the held-out
/// domain by itself. Throws ConfigError for unknown names.
struct HeldOutSplit {
    MultiDomainDataset sources;
    MultiDomainDataset held_out;
};

[[nodiscard]] HeldOutSplit split_held_out(const MultiDomainDataset& d,
                                          const std::string& held_out_name);

}  // namespace dgen
