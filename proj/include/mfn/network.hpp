// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFN_NETWORK_HPP_
#define MFN_NETWORK_HPP_

#include <string>
#include <utility>
#include <vector>

#include "mfn/blocks.hpp"
#include "mfn/config.hpp"
#include "mfn/io.hpp"
#include "mfn/params.hpp"
#include "mfn/random.hpp"

namespace mfn {

// A built network: 3x3 stride-2 stem (BN + PReLU), the configured block
// stack, then the embedding stage (1x1 expand + BN + PReLU, 7x7 global
// depthwise + BN, 1x1 projection + BN). (config, seed) fixes every parameter.
template <typename T>
class Network {
 public:
  Network(NetworkConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
    validate(cfg_);
    Rng rng(seed);
    stem_ = make_conv(store_, rng, "stem.conv", 3, cfg_.stem_c, 3, 2, 1, 1, false);
    stem_bn_ = make_bn<T>(store_, "stem.bn", cfg_.stem_c);
    stem_act_ = make_act<T>(store_, "stem", Act::kPReLU, cfg_.stem_c);
    for (size_t i = 0; i < cfg_.blocks.size(); ++i) {
      blocks_.push_back(make_block(store_, rng, "blocks." + std::to_string(i), cfg_.blocks[i],
                                   cfg_.shuffle_groups));
    }
    emb_ = make_embedding<T>(store_, rng, cfg_.blocks.back().out_c, cfg_.embed_mid,
                             cfg_.embed_dim);
  }

  const NetworkConfig& config() const { return cfg_; }
  const ParamStore<T>& params() const { return store_; }
  ParamStore<T>& params() { return store_; }

  // Full forward pass. training=true uses batch statistics and updates the
  // running averages; only inference (training=false, tape=nullptr) is
  // thread-safe.
  Var<T> forward(Tape<T>* tape, const Var<T>& x, bool training) const {
    if (x.shape().c != 3 || x.shape().h != cfg_.input_h || x.shape().w != cfg_.input_w) {
      throw ShapeError("network: input shape " + x.shape().str() + " != (n,3," +
                       std::to_string(cfg_.input_h) + "," + std::to_string(cfg_.input_w) + ")");
    }
    Var<T> h = mfn::forward(tape, stem_, x);
    h = mfn::forward(tape, stem_bn_, h, training);
    h = mfn::forward(tape, stem_act_, h);
    for (const auto& b : blocks_) h = mfn::forward(tape, b, h, training);
    return mfn::forward(tape, emb_, h, training);
  }

  // Inference embeddings, shape (n, embed_dim, 1, 1).
  Tensor<T> embed(const Tensor<T>& x) const {
    Var<T> in = make_var(x, /*track=*/false);
    return *forward(nullptr, in, /*training=*/false).value;
  }

  const ConvUnit<T>& stem() const { return stem_; }
  const BnUnit<T>& stem_bn() const { return stem_bn_; }
  const ActUnit<T>& stem_act() const { return stem_act_; }
  const std::vector<BlockUnit<T>>& blocks() const { return blocks_; }
  const EmbeddingUnit<T>& embedding() const { return emb_; }

 private:
  NetworkConfig cfg_;
  ParamStore<T> store_;
  ConvUnit<T> stem_;
  BnUnit<T> stem_bn_;
  ActUnit<T> stem_act_;
  std::vector<BlockUnit<T>> blocks_;
  EmbeddingUnit<T> emb_;
};

// ---- checkpoints (float payloads) ----

inline constexpr const char* kCheckpointConfigKey = "meta/config=";

inline void save_checkpoint(const Network<float>& net, const std::string& path) {
  std::vector<io::CheckpointEntry> entries;
  io::CheckpointEntry meta;
  meta.name = std::string(kCheckpointConfigKey) + serialize_config(net.config());
  meta.dims = {0};
  entries.push_back(std::move(meta));
  for (const auto& e : net.params().entries()) {
    io::CheckpointEntry ce;
    ce.name = e.name;
    const Shape4& s = e.var.value->shape();
    ce.dims = {static_cast<uint32_t>(s.n), static_cast<uint32_t>(s.c),
               static_cast<uint32_t>(s.h), static_cast<uint32_t>(s.w)};
    ce.data = e.var.value->storage();
    entries.push_back(std::move(ce));
  }
  io::write_checkpoint_raw(path, entries);
}

// Loads weights into an already-built network. Every non-meta entry must match
// a parameter by name and shape, and every parameter must be covered.
inline void load_checkpoint_into(Network<float>& net, const std::string& path) {
  const std::vector<io::CheckpointEntry> entries = io::read_checkpoint_raw(path);
  std::vector<bool> covered(net.params().entries().size(), false);
  for (const auto& ce : entries) {
    if (ce.name.rfind("meta/", 0) == 0) continue;
    const auto& store = net.params().entries();
    size_t idx = store.size();
    for (size_t i = 0; i < store.size(); ++i) {
      if (store[i].name == ce.name) {
        idx = i;
        break;
      }
    }
    if (idx == store.size()) {
      throw IoError(path + ": checkpoint entry '" + ce.name + "' has no matching parameter");
    }
    const Shape4& s = store[idx].var.value->shape();
    const Shape4 got{ce.dims.size() > 0 ? ce.dims[0] : 0, ce.dims.size() > 1 ? ce.dims[1] : 0,
                     ce.dims.size() > 2 ? ce.dims[2] : 0, ce.dims.size() > 3 ? ce.dims[3] : 0};
    if (ce.dims.size() != 4 || got != s) {
      throw IoError(path + ": entry '" + ce.name + "' shape " + got.str() +
                    " != parameter shape " + s.str());
    }
    store[idx].var.value->storage() = ce.data;
    covered[idx] = true;
  }
  for (size_t i = 0; i < covered.size(); ++i) {
    if (!covered[i]) {
      throw IoError(path + ": checkpoint missing parameter '" +
                    net.params().entries()[i].name + "'");
    }
  }
}

// Rebuilds the network from the config stored in the checkpoint, then loads
// the weights.
inline Network<float> load_checkpoint(const std::string& path) {
  const std::vector<io::CheckpointEntry> entries = io::read_checkpoint_raw(path);
  const std::string key(kCheckpointConfigKey);
  const io::CheckpointEntry* meta = nullptr;
  for (const auto& e : entries) {
    if (e.name.rfind(key, 0) == 0) {
      meta = &e;
      break;
    }
  }
  if (!meta) throw IoError(path + ": checkpoint has no meta/config entry");
  NetworkConfig cfg = parse_config(meta->name.substr(key.size()));
  Network<float> net(std::move(cfg), /*seed=*/0);
  load_checkpoint_into(net, path);
  return net;
}

}  // namespace mfn

#endif  // MFN_NETWORK_HPP_
