// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "mvvt/model.hpp"

namespace mvvt {

/// Checkpoint file layout (all integers little-endian):
///   magic "MVVT" | u32 version | config fields | u32 tensor count |
///   per tensor: u32 name length, name bytes, u32 rank, u64 extents...,
///   float64 payload in row-major order.
/// Config fields, in order: u32 num_views, channels, height, width, patch,
/// embed_dim, layers, heads, mlp_dim, head_hidden, output_dim; f64 dropout;
/// u32 fusion_mode; u32 activation.
/// Tensors appear in the canonical parameter order of ModelParams::named().
inline constexpr uint32_t kCheckpointVersion = 1;

template <class T>
void save_checkpoint(const std::filesystem::path& path, const MvvtConfig& config,
                     const ModelParams<T>& params);

template <class T>
struct Checkpoint {
  MvvtConfig config;
  ModelParams<T> params;
};

/// Rejects bad magic, unknown versions, and tensors whose names, order, or
/// shapes disagree with the stored config.
template <class T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

/// Reads only the stored config (for compatibility checks).
MvvtConfig peek_checkpoint_config(const std::filesystem::path& path);

extern template void save_checkpoint<float>(const std::filesystem::path&, const MvvtConfig&,
                                            const ModelParams<float>&);
extern template void save_checkpoint<double>(const std::filesystem::path&, const MvvtConfig&,
                                             const ModelParams<double>&);
extern template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
extern template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace mvvt
