// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Network building blocks. Builders register parameters in forward order
// under stable dotted names and draw initial values from one shared RNG, so
// (config, seed) fixes every parameter bitwise.

#ifndef MFN_BLOCKS_HPP_
#define MFN_BLOCKS_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfn/autodiff.hpp"
#include "mfn/config.hpp"
#include "mfn/params.hpp"
#include "mfn/random.hpp"
#include "mfn/tensor.hpp"

namespace mfn {

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.9;
inline constexpr double kPreluInit = 0.25;

// Kaiming-normal fill for a conv weight of shape (out_c, in_c/groups, kh, kw);
// fan-in is taps per output element.
template <typename T>
Tensor<T> kaiming_conv_init(Rng& rng, Shape4 wshape) {
  const double fan_in = static_cast<double>(wshape.c * wshape.h * wshape.w);
  const double stddev = std::sqrt(2.0 / fan_in);
  Tensor<T> w(wshape);
  for (int64_t i = 0; i < w.numel(); ++i) {
    w[static_cast<size_t>(i)] = static_cast<T>(rng.normal(0.0, stddev));
  }
  return w;
}

template <typename T>
struct ConvUnit {
  Var<T> w;
  std::optional<Var<T>> bias;
  ConvParams p;
};

template <typename T>
struct BnUnit {
  Var<T> gamma, beta;
  Var<T> rmean, rvar;  // running statistics, untracked
};

template <typename T>
struct ActUnit {
  Act kind = Act::kSwish;
  std::optional<Var<T>> alpha;  // present iff kind == kPReLU
};

template <typename T>
struct SeUnit {
  ConvUnit<T> reduce, expand;
};

template <typename T>
struct MixConvUnit {
  std::vector<ConvUnit<T>> branch;  // ascending kernel size
  std::vector<int64_t> split;
};

template <typename T>
struct BlockUnit {
  BlockSpec spec;
  std::optional<ConvUnit<T>> expand;
  std::optional<BnUnit<T>> expand_bn;
  std::optional<ActUnit<T>> expand_act;
  MixConvUnit<T> mix;
  BnUnit<T> mix_bn;
  ActUnit<T> mix_act;
  std::optional<SeUnit<T>> se;
  ConvUnit<T> project;
  BnUnit<T> project_bn;
  int64_t shuffle_groups = 2;
};

template <typename T>
struct EmbeddingUnit {
  ConvUnit<T> expand;
  BnUnit<T> expand_bn;
  ActUnit<T> expand_act;
  ConvUnit<T> gdw;
  BnUnit<T> gdw_bn;
  ConvUnit<T> proj;
  BnUnit<T> proj_bn;
};

// ---- builders ----

template <typename T>
ConvUnit<T> make_conv(ParamStore<T>& ps, Rng& rng, const std::string& name, int64_t in_c,
                      int64_t out_c, int64_t k, int64_t stride, int64_t pad, int64_t groups,
                      bool with_bias) {
  ConvUnit<T> u;
  u.p = ConvParams{k, k, stride, pad, groups};
  u.w = ps.add(name + ".weight", kaiming_conv_init<T>(rng, Shape4{out_c, in_c / groups, k, k}));
  if (with_bias) u.bias = ps.add(name + ".bias", Tensor<T>(Shape4{1, out_c, 1, 1}));
  return u;
}

template <typename T>
BnUnit<T> make_bn(ParamStore<T>& ps, const std::string& name, int64_t c) {
  BnUnit<T> u;
  u.gamma = ps.add(name + ".gamma", Tensor<T>::full(Shape4{1, c, 1, 1}, T(1)));
  u.beta = ps.add(name + ".beta", Tensor<T>(Shape4{1, c, 1, 1}));
  u.rmean = ps.add(name + ".running_mean", Tensor<T>(Shape4{1, c, 1, 1}), /*trainable=*/false);
  u.rvar = ps.add(name + ".running_var", Tensor<T>::full(Shape4{1, c, 1, 1}, T(1)),
                  /*trainable=*/false);
  return u;
}

template <typename T>
ActUnit<T> make_act(ParamStore<T>& ps, const std::string& prefix, Act kind, int64_t c) {
  ActUnit<T> u;
  u.kind = kind;
  if (kind == Act::kPReLU) {
    u.alpha = ps.add(prefix + ".prelu.alpha",
                     Tensor<T>::full(Shape4{1, c, 1, 1}, static_cast<T>(kPreluInit)));
  }
  return u;
}

template <typename T>
MixConvUnit<T> make_mixconv(ParamStore<T>& ps, Rng& rng, const std::string& prefix,
                            const MixConvSpec& spec) {
  MixConvUnit<T> u;
  u.split = spec.split;
  for (size_t i = 0; i < spec.kernels.size(); ++i) {
    const int64_t k = spec.kernels[i];
    const int64_t c = spec.split[i];
    u.branch.push_back(make_conv(ps, rng, prefix + ".k" + std::to_string(k), c, c, k,
                                 spec.stride, (k - 1) / 2, /*groups=*/c, /*with_bias=*/false));
  }
  return u;
}

template <typename T>
SeUnit<T> make_se(ParamStore<T>& ps, Rng& rng, const std::string& prefix, int64_t c,
                  int64_t hidden) {
  SeUnit<T> u;
  u.reduce = make_conv(ps, rng, prefix + ".reduce", c, hidden, 1, 1, 0, 1, /*with_bias=*/true);
  u.expand = make_conv(ps, rng, prefix + ".expand", hidden, c, 1, 1, 0, 1, /*with_bias=*/true);
  return u;
}

template <typename T>
BlockUnit<T> make_block(ParamStore<T>& ps, Rng& rng, const std::string& prefix,
                        const BlockSpec& spec, int64_t shuffle_groups) {
  BlockUnit<T> b;
  b.spec = spec;
  b.shuffle_groups = shuffle_groups;
  if (spec.has_expand()) {
    b.expand = make_conv(ps, rng, prefix + ".expand.conv", spec.in_c, spec.expand_c, 1, 1, 0,
                         spec.expand_groups, false);
    b.expand_bn = make_bn(ps, prefix + ".expand.bn", spec.expand_c);
    b.expand_act = make_act(ps, prefix + ".expand", spec.act, spec.expand_c);
  }
  b.mix = make_mixconv(ps, rng, prefix + ".mixconv", spec.mix);
  b.mix_bn = make_bn(ps, prefix + ".mixconv.bn", spec.expand_c);
  b.mix_act = make_act(ps, prefix + ".mixconv", spec.act, spec.expand_c);
  if (spec.se_hidden > 0) {
    b.se = make_se(ps, rng, prefix + ".se", spec.expand_c, spec.se_hidden);
  }
  b.project = make_conv(ps, rng, prefix + ".project.conv", spec.expand_c, spec.out_c, 1, 1, 0,
                        spec.project_groups, false);
  b.project_bn = make_bn(ps, prefix + ".project.bn", spec.out_c);
  return b;
}

template <typename T>
EmbeddingUnit<T> make_embedding(ParamStore<T>& ps, Rng& rng, int64_t in_c, int64_t mid,
                                int64_t dim) {
  EmbeddingUnit<T> e;
  e.expand = make_conv(ps, rng, "embedding.expand.conv", in_c, mid, 1, 1, 0, 1, false);
  e.expand_bn = make_bn<T>(ps, "embedding.expand.bn", mid);
  e.expand_act = make_act<T>(ps, "embedding.expand", Act::kPReLU, mid);
  e.gdw = make_conv(ps, rng, "embedding.gdw.conv", mid, mid, 7, 1, 0, mid, false);
  e.gdw_bn = make_bn<T>(ps, "embedding.gdw.bn", mid);
  e.proj = make_conv(ps, rng, "embedding.proj.conv", mid, dim, 1, 1, 0, 1, false);
  e.proj_bn = make_bn<T>(ps, "embedding.proj.bn", dim);
  return e;
}

// ---- forward ----

template <typename T>
Var<T> forward(Tape<T>* tape, const ConvUnit<T>& u, const Var<T>& x) {
  return ad::conv2d(tape, x, u.w, u.bias ? &*u.bias : nullptr, u.p);
}

template <typename T>
Var<T> forward(Tape<T>* tape, const BnUnit<T>& u, const Var<T>& x, bool training) {
  if (training) {
    return ad::batch_norm_train(tape, x, u.gamma, u.beta, u.rmean.value.get(),
                                u.rvar.value.get(), static_cast<T>(kBnEps),
                                static_cast<T>(kBnMomentum));
  }
  return ad::batch_norm_infer(tape, x, u.gamma, u.beta, *u.rmean.value, *u.rvar.value,
                              static_cast<T>(kBnEps));
}

template <typename T>
Var<T> forward(Tape<T>* tape, const ActUnit<T>& u, const Var<T>& x) {
  if (u.kind == Act::kPReLU) return ad::prelu(tape, x, *u.alpha);
  return ad::swish(tape, x);
}

template <typename T>
Var<T> forward(Tape<T>* tape, const SeUnit<T>& u, const Var<T>& x) {
  Var<T> g = ad::global_avg_pool(tape, x);
  g = forward(tape, u.reduce, g);
  g = ad::swish(tape, g);
  g = forward(tape, u.expand, g);
  g = ad::sigmoid(tape, g);
  return ad::scale_channels(tape, x, g);
}

template <typename T>
Var<T> forward(Tape<T>* tape, const MixConvUnit<T>& u, const Var<T>& x) {
  if (u.branch.size() == 1) return forward(tape, u.branch[0], x);
  int64_t split_sum = 0;
  for (int64_t v : u.split) split_sum += v;
  if (x.shape().c != split_sum) {
    throw ShapeError("mixconv: input channels (" + std::to_string(x.shape().c) +
                     ") != sum of branch split (" + std::to_string(split_sum) + ")");
  }
  std::vector<Var<T>> parts;
  int64_t base = 0;
  for (size_t i = 0; i < u.branch.size(); ++i) {
    Var<T> s = ad::channel_slice(tape, x, base, base + u.split[i]);
    parts.push_back(forward(tape, u.branch[i], s));
    base += u.split[i];
  }
  return ad::channel_concat(tape, parts);
}

template <typename T>
Var<T> forward(Tape<T>* tape, const BlockUnit<T>& b, const Var<T>& x, bool training) {
  Var<T> h = x;
  if (b.expand) {
    h = forward(tape, *b.expand, h);
    h = forward(tape, *b.expand_bn, h, training);
    h = forward(tape, *b.expand_act, h);
  }
  h = forward(tape, b.mix, h);
  h = forward(tape, b.mix_bn, h, training);
  h = forward(tape, b.mix_act, h);
  if (b.spec.shuffle && b.spec.shuffle_pos == ShufflePos::kAfterMixConv) {
    h = ad::channel_shuffle(tape, h, b.shuffle_groups);
  }
  if (b.se) h = forward(tape, *b.se, h);
  h = forward(tape, b.project, h);
  h = forward(tape, b.project_bn, h, training);
  if (b.spec.residual()) h = ad::add(tape, h, x);
  if (b.spec.shuffle && b.spec.shuffle_pos == ShufflePos::kAfterBlock) {
    h = ad::channel_shuffle(tape, h, b.shuffle_groups);
  }
  return h;
}

template <typename T>
Var<T> forward(Tape<T>* tape, const EmbeddingUnit<T>& e, const Var<T>& x, bool training) {
  if (x.shape().h != 7 || x.shape().w != 7) {
    throw ShapeError("embedding: expected 7x7 spatial input, got " + x.shape().str());
  }
  Var<T> h = forward(tape, e.expand, x);
  h = forward(tape, e.expand_bn, h, training);
  h = forward(tape, e.expand_act, h);
  h = forward(tape, e.gdw, h);
  h = forward(tape, e.gdw_bn, h, training);
  h = forward(tape, e.proj, h);
  h = forward(tape, e.proj_bn, h, training);
  return h;
}

}  // namespace mfn

#endif  // MFN_BLOCKS_HPP_
