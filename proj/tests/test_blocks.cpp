// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Mixed-kernel depthwise convolution, squeeze-excitation, the inverted
// bottleneck block, the stem, and the embedding stage.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "mfn/blocks.hpp"
#include "naive_ref.hpp"

using mfn::Act;
using mfn::BlockSpec;
using mfn::MixConvSpec;
using mfn::ParamStore;
using mfn::Rng;
using mfn::Shape4;
using mfn::ShufflePos;
using mfn::Tensor;
using mfn::Var;

namespace {

template <typename T>
Tensor<T> rand_tensor(Rng& rng, Shape4 s, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(s);
  for (int64_t i = 0; i < t.numel(); ++i) t[static_cast<size_t>(i)] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
Var<T> untracked(Tensor<T> t) {
  return mfn::make_var(std::move(t), false);
}

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), sizeof(T) * static_cast<size_t>(a.numel())) == 0;
}

}  // namespace

TEST_CASE("single-branch mixconv is exactly one depthwise convolution") {
  ParamStore<float> ps;
  Rng rng(11);
  MixConvSpec spec;
  spec.kernels = {3};
  spec.split = {6};
  spec.stride = 1;
  auto mix = mfn::make_mixconv(ps, rng, "mix", spec);
  REQUIRE(mix.branch.size() == 1);

  Rng data_rng(12);
  Tensor<float> x = rand_tensor<float>(data_rng, Shape4{2, 6, 9, 9});
  Var<float> xv = untracked(x);
  const Tensor<float> got = *mfn::forward<float>(nullptr, mix, xv).value;
  const Tensor<float> want = mfn::conv2d<float>(x, *mix.branch[0].w.value, nullptr, mix.branch[0].p);
  CHECK(bitwise_equal(got, want));
}

TEST_CASE("two-branch mixconv equals slice, per-branch depthwise conv, concat") {
  ParamStore<float> ps;
  Rng rng(13);
  MixConvSpec spec;
  spec.kernels = {3, 5};
  spec.split = {4, 4};
  spec.stride = 2;
  auto mix = mfn::make_mixconv(ps, rng, "mix", spec);

  Rng data_rng(14);
  Tensor<float> x = rand_tensor<float>(data_rng, Shape4{1, 8, 10, 10});
  Var<float> xv = untracked(x);
  const Tensor<float> got = *mfn::forward<float>(nullptr, mix, xv).value;

  const Tensor<float> xa = mfn::channel_slice(x, 0, 4);
  const Tensor<float> xb = mfn::channel_slice(x, 4, 8);
  const Tensor<float> ya = mfn::conv2d<float>(xa, *mix.branch[0].w.value, nullptr, mix.branch[0].p);
  const Tensor<float> yb = mfn::conv2d<float>(xb, *mix.branch[1].w.value, nullptr, mix.branch[1].p);
  const Tensor<float> want = mfn::channel_concat<float>({ya, yb});
  CHECK(bitwise_equal(got, want));

  // Branch geometry: kernel k gets pad (k-1)/2, so both branches agree on the
  // output extent.
  CHECK(got.shape() == Shape4{1, 8, 5, 5});

  Tensor<float> wrong(Shape4{1, 7, 10, 10});
  Var<float> wv = untracked(wrong);
  CHECK_THROWS_AS(mfn::forward<float>(nullptr, mix, wv), mfn::ShapeError);
}

TEST_CASE("mixed kernels need far fewer weights than the largest kernel everywhere") {
  ParamStore<float> ps;
  Rng rng(15);
  MixConvSpec spec;
  spec.kernels = {3, 5, 7};
  spec.split = {10, 10, 10};
  spec.stride = 1;
  auto mix = mfn::make_mixconv(ps, rng, "mix", spec);
  int64_t mixed = 0;
  for (const auto& br : mix.branch) mixed += br.w.value->numel();
  CHECK(mixed == 10 * 9 + 10 * 25 + 10 * 49);  // 830
  const int64_t all7 = 30 * 49;                // 1470
  CHECK(mixed == 830);
  CHECK(all7 == 1470);
  CHECK(mixed < all7);
}

TEST_CASE("squeeze-excitation matches the step-by-step reference") {
  ParamStore<float> ps;
  Rng rng(21);
  auto se = mfn::make_se(ps, rng, "se", /*c=*/4, /*hidden=*/2);
  // Bias tensors start at zero; give them non-trivial values.
  for (int64_t i = 0; i < 2; ++i)
    (*se.reduce.bias->value)[static_cast<size_t>(i)] = static_cast<float>(rng.uniform(-0.3, 0.3));
  for (int64_t i = 0; i < 4; ++i)
    (*se.expand.bias->value)[static_cast<size_t>(i)] = static_cast<float>(rng.uniform(-0.3, 0.3));

  Rng data_rng(22);
  Tensor<float> x = rand_tensor<float>(data_rng, Shape4{1, 4, 2, 2});
  Var<float> xv = untracked(x);
  const Tensor<float> got = *mfn::forward<float>(nullptr, se, xv).value;
  const Tensor<float> want =
      naive::squeeze_excite<float>(x, *se.reduce.w.value, *se.reduce.bias->value, *se.expand.w.value,
                            *se.expand.bias->value, /*act=*/1, nullptr);
  CHECK(naive::max_abs_diff(got, want) <= 1e-5);
}

TEST_CASE("a saturated squeeze-excitation gate passes the input through") {
  ParamStore<float> ps;
  Rng rng(23);
  auto se = mfn::make_se(ps, rng, "se", 4, 2);
  // Zero weights push the whole decision to the expand bias.
  se.reduce.w.value->fill(0.0f);
  se.expand.w.value->fill(0.0f);
  Rng data_rng(24);
  Tensor<float> x = rand_tensor<float>(data_rng, Shape4{2, 4, 3, 3});
  Var<float> xv = untracked(x);

  se.expand.bias->value->fill(25.0f);  // sigmoid(25) = 1 - 1.4e-11
  const Tensor<float> open = *mfn::forward<float>(nullptr, se, xv).value;
  CHECK(naive::max_abs_diff(open, x) <= 1e-6);

  se.expand.bias->value->fill(-25.0f);  // sigmoid(-25) = 1.4e-11
  const Tensor<float> closed = *mfn::forward<float>(nullptr, se, xv).value;
  for (int64_t i = 0; i < closed.numel(); ++i)
    CHECK(std::abs(closed[static_cast<size_t>(i)]) <= 1e-6f);
}

TEST_CASE("a unit-weight residual block doubles a positive input, up to eps") {
  ParamStore<float> ps;
  Rng rng(31);
  BlockSpec spec;
  spec.in_c = 4;
  spec.out_c = 4;
  spec.expand_c = 4;  // no expansion stage
  spec.mix.kernels = {1};
  spec.mix.split = {4};
  spec.mix.stride = 1;
  spec.act = Act::kPReLU;
  spec.se_hidden = 0;
  spec.shuffle = false;
  REQUIRE(!spec.has_expand());
  REQUIRE(spec.residual());
  auto block = mfn::make_block(ps, rng, "b", spec, 2);

  // Depthwise 1x1 all-ones and an identity projection make the trunk the
  // identity map; both norms sit at their freshly initialized identity
  // parameters (gamma 1, beta 0, mean 0, var 1).
  block.mix.branch[0].w.value->fill(1.0f);
  block.project.w.value->fill(0.0f);
  for (int64_t c = 0; c < 4; ++c) block.project.w.value->at(c, c, 0, 0) = 1.0f;

  Rng data_rng(32);
  Tensor<float> x = rand_tensor<float>(data_rng, Shape4{1, 4, 5, 5}, 0.2, 1.5);
  Var<float> xv = untracked(x);
  const Tensor<float> y = *mfn::forward<float>(nullptr, block, xv, /*training=*/false).value;
  REQUIRE(y.shape() == x.shape());
  for (int64_t i = 0; i < y.numel(); ++i) {
    CHECK(y[static_cast<size_t>(i)] ==
          doctest::Approx(2.0f * x[static_cast<size_t>(i)]).epsilon(1e-4));
  }
}

TEST_CASE("the shuffle twin of a block is exactly a channel permutation of it") {
  BlockSpec spec;
  spec.in_c = 8;
  spec.out_c = 8;
  spec.expand_c = 16;
  spec.mix.kernels = {3, 5};
  spec.mix.split = {8, 8};
  spec.mix.stride = 1;
  spec.act = Act::kSwish;
  spec.se_hidden = 4;
  spec.shuffle = false;
  spec.shuffle_pos = ShufflePos::kAfterBlock;

  BlockSpec twin = spec;
  twin.shuffle = true;

  ParamStore<float> ps_a, ps_b;
  Rng rng_a(41), rng_b(41);
  auto plain = mfn::make_block(ps_a, rng_a, "b", spec, 2);
  auto shuffled = mfn::make_block(ps_b, rng_b, "b", twin, 2);

  Rng data_rng(42);
  Tensor<float> x = rand_tensor<float>(data_rng, Shape4{2, 8, 6, 6});
  Var<float> xa = untracked(x);
  Var<float> xb = untracked(x);
  const Tensor<float> ya = *mfn::forward<float>(nullptr, plain, xa, false).value;
  const Tensor<float> yb = *mfn::forward<float>(nullptr, shuffled, xb, false).value;
  CHECK(bitwise_equal(yb, mfn::channel_shuffle(ya, 2)));
}

TEST_CASE("a stride-2 block halves the spatial extent") {
  ParamStore<float> ps;
  Rng rng(51);
  BlockSpec spec;
  spec.in_c = 6;
  spec.out_c = 10;
  spec.expand_c = 18;
  spec.mix.kernels = {3};
  spec.mix.split = {18};
  spec.mix.stride = 2;
  spec.act = Act::kSwish;
  auto block = mfn::make_block(ps, rng, "b", spec, 2);
  REQUIRE(!spec.residual());

  Rng data_rng(52);
  Tensor<float> x = rand_tensor<float>(data_rng, Shape4{1, 6, 112, 112});
  Var<float> xv = untracked(x);
  const Tensor<float> y = *mfn::forward<float>(nullptr, block, xv, false).value;
  CHECK(y.shape() == Shape4{1, 10, 56, 56});
}

TEST_CASE("the stem halves 112x112 and maps zero to zero") {
  ParamStore<float> ps;
  Rng rng(61);
  auto conv = mfn::make_conv(ps, rng, "stem.conv", 3, 16, 3, 2, 1, 1, false);
  auto bn = mfn::make_bn<float>(ps, "stem.bn", 16);
  auto act = mfn::make_act<float>(ps, "stem", Act::kPReLU, 16);

  Rng data_rng(62);
  Tensor<float> x = rand_tensor<float>(data_rng, Shape4{1, 3, 112, 112});
  Var<float> h = untracked(x);
  h = mfn::forward<float>(nullptr, conv, h);
  h = mfn::forward<float>(nullptr, bn, h, false);
  h = mfn::forward<float>(nullptr, act, h);
  CHECK(h.value->shape() == Shape4{1, 16, 56, 56});

  Tensor<float> zero(Shape4{1, 3, 112, 112});
  Var<float> z = untracked(zero);
  z = mfn::forward<float>(nullptr, conv, z);
  z = mfn::forward<float>(nullptr, bn, z, false);
  z = mfn::forward<float>(nullptr, act, z);
  for (int64_t i = 0; i < z.value->numel(); ++i)
    CHECK((*z.value)[static_cast<size_t>(i)] == 0.0f);
}

TEST_CASE("the embedding stage flattens a 7x7 map into a 512-wide vector") {
  ParamStore<float> ps;
  Rng rng(71);
  auto emb = mfn::make_embedding(ps, rng, /*in_c=*/64, /*mid=*/1024, /*dim=*/512);

  // The global depthwise consumes the full 7x7x1024 expansion.
  CHECK(emb.gdw.w.value->shape() == Shape4{1024, 1, 7, 7});
  CHECK(int64_t{7} * 7 * 1024 == 50176);

  Rng data_rng(72);
  Tensor<float> x = rand_tensor<float>(data_rng, Shape4{2, 64, 7, 7});
  Var<float> xv = untracked(x);
  const Tensor<float> y = *mfn::forward<float>(nullptr, emb, xv, false).value;
  CHECK(y.shape() == Shape4{2, 512, 1, 1});
  for (int64_t i = 0; i < y.numel(); ++i) CHECK(std::isfinite(y[static_cast<size_t>(i)]));

  Tensor<float> bad(Shape4{1, 64, 8, 8});
  Var<float> bv = untracked(bad);
  CHECK_THROWS_AS(mfn::forward<float>(nullptr, emb, bv, false), mfn::ShapeError);
}

TEST_CASE("builders register parameters under stable dotted names") {
  ParamStore<float> ps;
  Rng rng(81);
  BlockSpec spec;
  spec.in_c = 4;
  spec.out_c = 6;
  spec.expand_c = 8;
  spec.mix.kernels = {3, 5};
  spec.mix.split = {4, 4};
  spec.mix.stride = 1;
  spec.act = Act::kPReLU;
  spec.se_hidden = 2;
  mfn::make_block(ps, rng, "blocks.0", spec, 2);
  for (const char* name :
       {"blocks.0.expand.conv.weight", "blocks.0.expand.bn.gamma", "blocks.0.expand.prelu.alpha",
        "blocks.0.mixconv.k3.weight", "blocks.0.mixconv.k5.weight", "blocks.0.mixconv.bn.gamma",
        "blocks.0.mixconv.prelu.alpha", "blocks.0.se.reduce.weight", "blocks.0.se.reduce.bias",
        "blocks.0.se.expand.weight", "blocks.0.se.expand.bias", "blocks.0.project.conv.weight",
        "blocks.0.project.bn.gamma"}) {
    CAPTURE(name);
    CHECK(ps.find(name) != nullptr);
  }
  CHECK(ps.find("blocks.0.mixconv.bn.running_mean") != nullptr);
  CHECK(!ps.find("blocks.0.mixconv.bn.running_mean")->trainable);
}
