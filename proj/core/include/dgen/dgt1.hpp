// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dgen/tensor.hpp"

namespace dgen {

/// DGT1 tensor file: magic "DGT1", u32 LE order N, N x u32 LE extents,
/// then product(extents) x f64 LE payload in row-major order. Round-trips
/// are bit-exact.
void write_dgt1(const std::filesystem::path& path, const Tensor& t);
[[nodiscard]] Tensor read_dgt1(const std::filesystem::path& path);

/// Label file: same DGT1 framing (magic, u32 order=1, u32 count) with a
/// u32 LE payload instead of f64. Only ever referenced from a dataset
/// manifest's `labels` entry, never parsed as a tensor.
void write_dgt1_labels(const std::filesystem::path& path,
                       const std::vector<std::uint32_t>& labels);
[[nodiscard]] std::vector<std::uint32_t> read_dgt1_labels(
    const std::filesystem::path& path);

}  // namespace dgen
