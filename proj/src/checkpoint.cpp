// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#include "mvvt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mvvt {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'V', 'T'};

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  put_u32(os, static_cast<uint32_t>(v));
  put_u32(os, static_cast<uint32_t>(v >> 32));
}

void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<uint64_t>(v));
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("checkpoint truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::istream& is) {
  const uint64_t lo = get_u32(is);
  const uint64_t hi = get_u32(is);
  return lo | (hi << 32);
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

void write_config(std::ostream& os, const MvvtConfig& c) {
  put_u32(os, static_cast<uint32_t>(c.num_views));
  put_u32(os, static_cast<uint32_t>(c.channels));
  put_u32(os, static_cast<uint32_t>(c.height));
  put_u32(os, static_cast<uint32_t>(c.width));
  put_u32(os, static_cast<uint32_t>(c.patch));
  put_u32(os, static_cast<uint32_t>(c.embed_dim));
  put_u32(os, static_cast<uint32_t>(c.layers));
  put_u32(os, static_cast<uint32_t>(c.heads));
  put_u32(os, static_cast<uint32_t>(c.mlp_dim));
  put_u32(os, static_cast<uint32_t>(c.head_hidden));
  put_u32(os, static_cast<uint32_t>(c.output_dim));
  put_f64(os, c.dropout);
  put_u32(os, c.fusion == FusionMode::kFusedChannels ? 0u : 1u);
  put_u32(os, c.activation == Activation::kGelu ? 0u : 1u);
}

MvvtConfig read_config(std::istream& is) {
  MvvtConfig c;
  c.num_views = get_u32(is);
  c.channels = get_u32(is);
  c.height = get_u32(is);
  c.width = get_u32(is);
  c.patch = get_u32(is);
  c.embed_dim = get_u32(is);
  c.layers = get_u32(is);
  c.heads = get_u32(is);
  c.mlp_dim = get_u32(is);
  c.head_hidden = get_u32(is);
  c.output_dim = get_u32(is);
  c.dropout = get_f64(is);
  c.fusion = get_u32(is) == 0 ? FusionMode::kFusedChannels : FusionMode::kPerViewConcat;
  c.activation = get_u32(is) == 0 ? Activation::kGelu : Activation::kRelu;
  return c;
}

void check_magic_version(std::istream& is, const std::filesystem::path& path) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a checkpoint file: " + path.string());
  }
  const uint32_t version = get_u32(is);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " +
                  path.string() + " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
}

}  // namespace

template <class T>
void save_checkpoint(const std::filesystem::path& path, const MvvtConfig& config,
                     const ModelParams<T>& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, 4);
  put_u32(os, kCheckpointVersion);
  write_config(os, config);
  auto named = params.named();
  put_u32(os, static_cast<uint32_t>(named.size()));
  for (auto& [name, t] : named) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<uint32_t>(t->rank()));
    for (int64_t e : t->shape()) put_u64(os, static_cast<uint64_t>(e));
    const T* d = t->data();
    for (int64_t i = 0; i < t->numel(); ++i) put_f64(os, static_cast<double>(d[i]));
  }
  if (!os) throw IoError("write failed for checkpoint " + path.string());
}

template <class T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  check_magic_version(is, path);
  Checkpoint<T> ck;
  ck.config = read_config(is);
  ck.config.validate();
  // Allocate parameters from the config, then require the stored tensors to
  // match name-for-name and shape-for-shape.
  ck.params = init_params<T>(ck.config, 0);
  auto named = ck.params.named();
  const uint32_t count = get_u32(is);
  if (count != named.size()) {
    throw IoError("checkpoint " + path.string() + " holds " + std::to_string(count) +
                  " tensors, config implies " + std::to_string(named.size()));
  }
  for (auto& [name, t] : named) {
    const uint32_t name_len = get_u32(is);
    std::string stored(name_len, '\0');
    is.read(stored.data(), name_len);
    if (!is || stored != name) {
      throw IoError("checkpoint tensor order mismatch: expected '" + name + "', found '" + stored + "'");
    }
    const uint32_t rank = get_u32(is);
    Shape shape(rank);
    for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int64_t>(get_u64(is));
    if (shape != t->shape()) {
      throw IoError("checkpoint tensor '" + name + "' has shape " + shape_str(shape) +
                    ", config implies " + shape_str(t->shape()));
    }
    T* d = t->data();
    for (int64_t i = 0; i < t->numel(); ++i) d[i] = static_cast<T>(get_f64(is));
  }
  return ck;
}

MvvtConfig peek_checkpoint_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  check_magic_version(is, path);
  return read_config(is);
}

template void save_checkpoint<float>(const std::filesystem::path&, const MvvtConfig&,
                                     const ModelParams<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const MvvtConfig&,
                                      const ModelParams<double>&);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace mvvt
