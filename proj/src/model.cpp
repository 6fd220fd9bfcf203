// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#include "mvvt/model.hpp"

#include <cmath>

namespace mvvt {

void MvvtConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid model config: " + what); };
  if (num_views < 1) fail("num_views must be >= 1");
  if (channels < 1) fail("channels must be >= 1");
  if (height < 1 || width < 1) fail("height and width must be >= 1");
  if (patch < 1) fail("patch must be >= 1");
  if (height % patch != 0 || width % patch != 0)
    fail("height " + std::to_string(height) + " and width " + std::to_string(width) +
         " must be divisible by patch " + std::to_string(patch));
  if (embed_dim < 1) fail("embed_dim must be >= 1");
  if (layers < 1) fail("layers must be >= 1");
  if (heads < 1) fail("heads must be >= 1");
  if (token_width() % heads != 0)
    fail("token width " + std::to_string(token_width()) + " must be divisible by heads " +
         std::to_string(heads));
  if (head_hidden < 1) fail("head_hidden must be >= 1");
  if (output_dim < 1) fail("output_dim must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
}

const char* to_string(FusionMode m) {
  return m == FusionMode::kFusedChannels ? "fused-channels" : "per-view-concat";
}

const char* to_string(Activation a) { return a == Activation::kGelu ? "gelu" : "relu"; }

template <class T>
std::vector<std::pair<std::string, Tensor<T>*>> ModelParams<T>::named() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  out.emplace_back("w_patch", &w_patch);
  out.emplace_back("b_patch", &b_patch);
  out.emplace_back("pos_enc", &pos_enc);
  for (size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    LayerParams<T>& lp = layers[l];
    out.emplace_back(p + "ln1.gamma", &lp.ln1_gamma);
    out.emplace_back(p + "ln1.beta", &lp.ln1_beta);
    out.emplace_back(p + "wq", &lp.wq);
    out.emplace_back(p + "bq", &lp.bq);
    out.emplace_back(p + "wk", &lp.wk);
    out.emplace_back(p + "bk", &lp.bk);
    out.emplace_back(p + "wv", &lp.wv);
    out.emplace_back(p + "bv", &lp.bv);
    out.emplace_back(p + "wo", &lp.wo);
    out.emplace_back(p + "bo", &lp.bo);
    out.emplace_back(p + "ln2.gamma", &lp.ln2_gamma);
    out.emplace_back(p + "ln2.beta", &lp.ln2_beta);
    out.emplace_back(p + "mlp_in.w", &lp.mlp_in_w);
    out.emplace_back(p + "mlp_in.b", &lp.mlp_in_b);
    out.emplace_back(p + "mlp_out.w", &lp.mlp_out_w);
    out.emplace_back(p + "mlp_out.b", &lp.mlp_out_b);
  }
  out.emplace_back("final_ln.gamma", &final_ln_gamma);
  out.emplace_back("final_ln.beta", &final_ln_beta);
  out.emplace_back("head_in.w", &head_in_w);
  out.emplace_back("head_in.b", &head_in_b);
  out.emplace_back("head_out.w", &head_out_w);
  out.emplace_back("head_out.b", &head_out_b);
  return out;
}

template <class T>
std::vector<std::pair<std::string, const Tensor<T>*>> ModelParams<T>::named() const {
  auto mut = const_cast<ModelParams<T>*>(this)->named();
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  out.reserve(mut.size());
  for (auto& [n, t] : mut) out.emplace_back(n, t);
  return out;
}

template <class T>
int64_t ModelParams<T>::total_parameters() const {
  int64_t n = 0;
  for (auto& [name, t] : named()) n += t->numel();
  return n;
}

template <class T>
void ModelParams<T>::set_requires_grad(bool rg) {
  for (auto& [name, t] : named()) t->set_requires_grad(rg);
}

template <class T>
void ModelParams<T>::zero_grads() {
  for (auto& [name, t] : named()) t->zero_grad();
}

namespace {

template <class T>
Tensor<T> trunc_normal_tensor(Shape shape, RngStream rng) {
  Tensor<T> t(std::move(shape));
  T* d = t.data();
  for (int64_t i = 0; i < t.numel(); ++i)
    d[i] = static_cast<T>(rng.next_trunc_normal(0.02, 2.0));
  return t;
}

template <class T>
Tensor<T> normal_tensor(Shape shape, RngStream rng, double std) {
  Tensor<T> t(std::move(shape));
  T* d = t.data();
  for (int64_t i = 0; i < t.numel(); ++i) d[i] = static_cast<T>(rng.next_normal() * std);
  return t;
}

}  // namespace

template <class T>
ModelParams<T> init_params(const MvvtConfig& config, uint64_t seed) {
  config.validate();
  const int64_t w = config.token_width();
  const int64_t mlp = config.mlp_width();
  const int64_t patch_rows = (config.fusion == FusionMode::kFusedChannels
                                  ? config.num_views * config.channels
                                  : config.channels) *
                             config.patch * config.patch;

  ModelParams<T> p;
  p.w_patch = Tensor<T>({patch_rows, config.embed_dim});
  p.b_patch = Tensor<T>({config.embed_dim});
  p.pos_enc = Tensor<T>({1, config.p_num(), w});
  p.layers.resize(static_cast<size_t>(config.layers));
  for (auto& lp : p.layers) {
    lp.ln1_gamma = Tensor<T>::full({w}, T(1));
    lp.ln1_beta = Tensor<T>({w});
    lp.wq = Tensor<T>({w, w});
    lp.bq = Tensor<T>({w});
    lp.wk = Tensor<T>({w, w});
    lp.bk = Tensor<T>({w});
    lp.wv = Tensor<T>({w, w});
    lp.bv = Tensor<T>({w});
    lp.wo = Tensor<T>({w, w});
    lp.bo = Tensor<T>({w});
    lp.ln2_gamma = Tensor<T>::full({w}, T(1));
    lp.ln2_beta = Tensor<T>({w});
    lp.mlp_in_w = Tensor<T>({w, mlp});
    lp.mlp_in_b = Tensor<T>({mlp});
    lp.mlp_out_w = Tensor<T>({mlp, w});
    lp.mlp_out_b = Tensor<T>({w});
  }
  p.final_ln_gamma = Tensor<T>::full({w}, T(1));
  p.final_ln_beta = Tensor<T>({w});
  p.head_in_w = Tensor<T>({w, config.head_hidden});
  p.head_in_b = Tensor<T>({config.head_hidden});
  p.head_out_w = Tensor<T>({config.head_hidden, config.output_dim});
  p.head_out_b = Tensor<T>({config.output_dim});

  // Each tensor draws from its own substream keyed by position in the
  // canonical order, so the layout of draws never shifts between runs.
  RngStream root(seed);
  uint64_t idx = 0;
  for (auto& [name, t] : p.named()) {
    RngStream sub = root.fork(idx++);
    const bool is_weight = name == "w_patch" || name.ends_with(".w") || name.ends_with("wq") ||
                           name.ends_with("wk") || name.ends_with("wv") || name.ends_with("wo");
    if (name == "pos_enc") {
      *t = normal_tensor<T>(t->shape(), sub, 0.02);
    } else if (is_weight) {
      *t = trunc_normal_tensor<T>(t->shape(), sub);
    }
    // biases, LN betas stay zero; LN gammas were constructed as ones
  }
  p.set_requires_grad(true);
  return p;
}

template <class T>
Tensor<T> embed_views(const Tensor<T>& x, const ModelParams<T>& params, const MvvtConfig& config) {
  if (x.rank() != 4 || x.extent(1) != config.num_views * config.channels) {
    throw ShapeError("embed_views: input " + shape_str(x.shape()) + " must have channel extent " +
                     std::to_string(config.num_views * config.channels) + " (num_views*channels)");
  }
  if (x.extent(2) != config.height || x.extent(3) != config.width) {
    throw ShapeError("embed_views: input " + shape_str(x.shape()) + " does not match configured " +
                     std::to_string(config.height) + "x" + std::to_string(config.width));
  }
  if (config.fusion == FusionMode::kFusedChannels) {
    return patchify_project(x, params.w_patch, params.b_patch, config.patch);
  }
  // Per-view embedding with the shared projection, concatenated along the
  // feature axis in view order.
  std::vector<Tensor<T>> per_view;
  per_view.reserve(static_cast<size_t>(config.num_views));
  for (int64_t v = 0; v < config.num_views; ++v) {
    Tensor<T> xv = slice(x, 1, v * config.channels, config.channels);
    per_view.push_back(patchify_project(xv, params.w_patch, params.b_patch, config.patch));
  }
  return concat(per_view, 2);
}

template <class T>
Tensor<T> add_positional(const Tensor<T>& tokens, const ModelParams<T>& params) {
  const Tensor<T>& pe = params.pos_enc;
  if (tokens.rank() != 3 || tokens.extent(1) != pe.extent(1) || tokens.extent(2) != pe.extent(2)) {
    throw ShapeError("add_positional: tokens " + shape_str(tokens.shape()) +
                     " incompatible with positional encoding " + shape_str(pe.shape()));
  }
  return add(tokens, pe);
}

template <class T>
Tensor<T> msa(const Tensor<T>& tokens, const LayerParams<T>& layer, const MvvtConfig& config,
              bool training, RngStream& rng) {
  const int64_t width = tokens.extent(tokens.rank() - 1);
  if (width % config.heads != 0) {
    throw ShapeError("msa: token width " + std::to_string(width) + " not divisible by heads " +
                     std::to_string(config.heads));
  }
  const int64_t hd = width / config.heads;
  Tensor<T> q = add(matmul(tokens, layer.wq), layer.bq);
  Tensor<T> k = add(matmul(tokens, layer.wk), layer.bk);
  Tensor<T> v = add(matmul(tokens, layer.wv), layer.bv);
  const T scaling = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));
  std::vector<Tensor<T>> heads_out;
  heads_out.reserve(static_cast<size_t>(config.heads));
  for (int64_t h = 0; h < config.heads; ++h) {
    Tensor<T> qh = slice(q, 2, h * hd, hd);
    Tensor<T> kh = slice(k, 2, h * hd, hd);
    Tensor<T> vh = slice(v, 2, h * hd, hd);
    Tensor<T> scores = scale(matmul(qh, transpose_last2(kh)), scaling);
    Tensor<T> attn = softmax(scores, 2);
    heads_out.push_back(matmul(attn, vh));
  }
  Tensor<T> ctx = concat(heads_out, 2);
  Tensor<T> out = add(matmul(ctx, layer.wo), layer.bo);
  return dropout(out, config.dropout, training, rng);
}

template <class T>
Tensor<T> mab_block(const Tensor<T>& tokens, const LayerParams<T>& layer, const MvvtConfig& config,
                    bool training, RngStream& rng) {
  const T eps = static_cast<T>(kLayerNormEps);
  Tensor<T> attn_in = layer_norm(tokens, layer.ln1_gamma, layer.ln1_beta, eps);
  Tensor<T> z = add(tokens, msa(attn_in, layer, config, training, rng));

  Tensor<T> mlp_in = layer_norm(z, layer.ln2_gamma, layer.ln2_beta, eps);
  Tensor<T> h = add(matmul(mlp_in, layer.mlp_in_w), layer.mlp_in_b);
  h = config.activation == Activation::kGelu ? gelu(h) : relu(h);
  h = dropout(h, config.dropout, training, rng);
  h = add(matmul(h, layer.mlp_out_w), layer.mlp_out_b);
  h = dropout(h, config.dropout, training, rng);
  return add(z, h);
}

template <class T>
Tensor<T> encoder(const Tensor<T>& tokens, const ModelParams<T>& params, const MvvtConfig& config,
                  bool training, RngStream& rng) {
  Tensor<T> z = tokens;
  for (const auto& layer : params.layers) z = mab_block(z, layer, config, training, rng);
  return layer_norm(z, params.final_ln_gamma, params.final_ln_beta, static_cast<T>(kLayerNormEps));
}

template <class T>
Tensor<T> pool_and_head(const Tensor<T>& tokens, const ModelParams<T>& params,
                        const MvvtConfig& config, bool training, RngStream& rng) {
  Tensor<T> pooled = mean(tokens, 1);
  Tensor<T> h = relu(add(matmul(pooled, params.head_in_w), params.head_in_b));
  h = dropout(h, config.dropout, training, rng);
  return add(matmul(h, params.head_out_w), params.head_out_b);
}

template <class T>
Tensor<T> forward(const Tensor<T>& x, const ModelParams<T>& params, const MvvtConfig& config,
                  bool training, RngStream& rng) {
  Tensor<T> tokens = add_positional(embed_views(x, params, config), params);
  tokens = encoder(tokens, params, config, training, rng);
  return pool_and_head(tokens, params, config, training, rng);
}

#define MVVT_DEF_MODEL(T)                                                                    \
  template struct LayerParams<T>;                                                           \
  template struct ModelParams<T>;                                                           \
  template ModelParams<T> init_params<T>(const MvvtConfig&, uint64_t);                      \
  template Tensor<T> embed_views<T>(const Tensor<T>&, const ModelParams<T>&, const MvvtConfig&); \
  template Tensor<T> add_positional<T>(const Tensor<T>&, const ModelParams<T>&);            \
  template Tensor<T> msa<T>(const Tensor<T>&, const LayerParams<T>&, const MvvtConfig&, bool, \
                            RngStream&);                                                    \
  template Tensor<T> mab_block<T>(const Tensor<T>&, const LayerParams<T>&, const MvvtConfig&, \
                                  bool, RngStream&);                                        \
  template Tensor<T> encoder<T>(const Tensor<T>&, const ModelParams<T>&, const MvvtConfig&, \
                                bool, RngStream&);                                          \
  template Tensor<T> pool_and_head<T>(const Tensor<T>&, const ModelParams<T>&,              \
                                      const MvvtConfig&, bool, RngStream&);                 \
  template Tensor<T> forward<T>(const Tensor<T>&, const ModelParams<T>&, const MvvtConfig&, \
                                bool, RngStream&);

MVVT_DEF_MODEL(float)
MVVT_DEF_MODEL(double)
#undef MVVT_DEF_MODEL

}  // namespace mvvt
