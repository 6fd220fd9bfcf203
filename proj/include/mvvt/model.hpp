// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// The multi-view vision transformer: patch embedding over stacked view
// channels, learnable positional encoding, L pre-LN residual attention
// blocks, mean pooling and a two-layer regression head.

#include <string>
#include <utility>
#include <vector>

#include "mvvt/ops.hpp"

namespace mvvt {

/// How the N views are folded into encoder tokens.
///  - kFusedChannels: one patch projection over all N*C input channels;
///    token width is D. This matches a single convolution over the stacked
///    views.
///  - kPerViewConcat: the shared patch projection is applied to each view's
///    C channels separately and the N embeddings of every patch index are
///    concatenated, giving token width N*D.
enum class FusionMode { kFusedChannels, kPerViewConcat };

enum class Activation { kGelu, kRelu };

struct MvvtConfig {
  int64_t num_views = 1;
  int64_t channels = 3;
  int64_t height = 224;
  int64_t width = 224;
  int64_t patch = 16;
  int64_t embed_dim = 256;
  int64_t layers = 6;
  int64_t heads = 8;
  int64_t mlp_dim = 0;  // 0 selects 4 * token_width
  int64_t head_hidden = 512;
  int64_t output_dim = 1;
  double dropout = 0.1;
  FusionMode fusion = FusionMode::kFusedChannels;
  Activation activation = Activation::kGelu;

  int64_t p_num() const { return (height / patch) * (width / patch); }
  int64_t token_width() const {
    return fusion == FusionMode::kFusedChannels ? embed_dim : num_views * embed_dim;
  }
  int64_t mlp_width() const { return mlp_dim > 0 ? mlp_dim : 4 * token_width(); }

  /// Throws ConfigError naming the violated invariant.
  void validate() const;

  bool operator==(const MvvtConfig&) const = default;
};

const char* to_string(FusionMode m);
const char* to_string(Activation a);

template <class T>
struct LayerParams {
  Tensor<T> ln1_gamma, ln1_beta;
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor<T> ln2_gamma, ln2_beta;
  Tensor<T> mlp_in_w, mlp_in_b, mlp_out_w, mlp_out_b;
};

template <class T>
struct ModelParams {
  Tensor<T> w_patch, b_patch;
  Tensor<T> pos_enc;
  std::vector<LayerParams<T>> layers;
  Tensor<T> final_ln_gamma, final_ln_beta;
  Tensor<T> head_in_w, head_in_b, head_out_w, head_out_b;

  /// All parameters in their canonical (checkpoint) order.
  std::vector<std::pair<std::string, Tensor<T>*>> named();
  std::vector<std::pair<std::string, const Tensor<T>*>> named() const;

  int64_t total_parameters() const;
  void set_requires_grad(bool rg);
  void zero_grads();
};

/// Deterministic initialization: weights ~ truncated normal(std 0.02,
/// cut at 2 std), positional encoding ~ normal(std 0.02), biases and LN
/// betas 0, LN gammas 1.
template <class T>
ModelParams<T> init_params(const MvvtConfig& config, uint64_t seed);

/// (B, N*C, H, W) -> (B, P_num, token_width) per the configured fusion mode.
template <class T>
Tensor<T> embed_views(const Tensor<T>& x, const ModelParams<T>& params, const MvvtConfig& config);

/// Broadcast-adds the learnable positional encoding over the batch.
template <class T>
Tensor<T> add_positional(const Tensor<T>& tokens, const ModelParams<T>& params);

/// Multi-head self-attention with scaling 1/sqrt(width/heads) and dropout
/// on the output projection in training mode.
template <class T>
Tensor<T> msa(const Tensor<T>& tokens, const LayerParams<T>& layer, const MvvtConfig& config,
              bool training, RngStream& rng);

/// Pre-LN residual attention followed by a pre-LN residual MLP.
template <class T>
Tensor<T> mab_block(const Tensor<T>& tokens, const LayerParams<T>& layer, const MvvtConfig& config,
                    bool training, RngStream& rng);

/// L mab_blocks followed by the final layer norm.
template <class T>
Tensor<T> encoder(const Tensor<T>& tokens, const ModelParams<T>& params, const MvvtConfig& config,
                  bool training, RngStream& rng);

/// Mean over tokens, then head_in -> ReLU -> (dropout) -> head_out.
template <class T>
Tensor<T> pool_and_head(const Tensor<T>& tokens, const ModelParams<T>& params,
                        const MvvtConfig& config, bool training, RngStream& rng);

/// Full pipeline; eval mode (training=false) is deterministic.
template <class T>
Tensor<T> forward(const Tensor<T>& x, const ModelParams<T>& params, const MvvtConfig& config,
                  bool training, RngStream& rng);

/// Epsilon used by every layer norm in the model.
inline constexpr double kLayerNormEps = 1e-5;

#define MVVT_DECL_MODEL(T)                                                                   \
  extern template struct LayerParams<T>;                                                    \
  extern template struct ModelParams<T>;                                                    \
  extern template ModelParams<T> init_params<T>(const MvvtConfig&, uint64_t);               \
  extern template Tensor<T> embed_views<T>(const Tensor<T>&, const ModelParams<T>&,         \
                                           const MvvtConfig&);                              \
  extern template Tensor<T> add_positional<T>(const Tensor<T>&, const ModelParams<T>&);     \
  extern template Tensor<T> msa<T>(const Tensor<T>&, const LayerParams<T>&, const MvvtConfig&, \
                                   bool, RngStream&);                                       \
  extern template Tensor<T> mab_block<T>(const Tensor<T>&, const LayerParams<T>&,           \
                                         const MvvtConfig&, bool, RngStream&);              \
  extern template Tensor<T> encoder<T>(const Tensor<T>&, const ModelParams<T>&,             \
                                       const MvvtConfig&, bool, RngStream&);                \
  extern template Tensor<T> pool_and_head<T>(const Tensor<T>&, const ModelParams<T>&,       \
                                             const MvvtConfig&, bool, RngStream&);          \
  extern template Tensor<T> forward<T>(const Tensor<T>&, const ModelParams<T>&,             \
                                       const MvvtConfig&, bool, RngStream&);

MVVT_DECL_MODEL(float)
MVVT_DECL_MODEL(double)
#undef MVVT_DECL_MODEL

}  // namespace mvvt
