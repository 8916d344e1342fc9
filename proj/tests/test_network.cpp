// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Whole-network construction, determinism, forward behavior, checkpoint
// round-trips, and config serialization.

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mfn/network.hpp"
#include "cli_runner.hpp"

using mfn::Network;
using mfn::NetworkConfig;
using mfn::Rng;
using mfn::Shape4;
using mfn::Tensor;

namespace {

Tensor<float> rand_image(Rng& rng, const NetworkConfig& cfg, int64_t n = 1) {
  Tensor<float> t(Shape4{n, 3, cfg.input_h, cfg.input_w});
  for (int64_t i = 0; i < t.numel(); ++i)
    t[static_cast<size_t>(i)] = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

bool params_bitwise_equal(const Network<float>& a, const Network<float>& b) {
  const auto& ea = a.params().entries();
  const auto& eb = b.params().entries();
  if (ea.size() != eb.size()) return false;
  for (size_t i = 0; i < ea.size(); ++i) {
    if (ea[i].name != eb[i].name) return false;
    const Tensor<float>& ta = *ea[i].var.value;
    const Tensor<float>& tb = *eb[i].var.value;
    if (ta.shape() != tb.shape()) return false;
    if (std::memcmp(ta.data(), tb.data(), sizeof(float) * static_cast<size_t>(ta.numel())) != 0)
      return false;
  }
  return true;
}

bool tensors_bitwise_equal(const Tensor<float>& a, const Tensor<float>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), sizeof(float) * static_cast<size_t>(a.numel())) == 0;
}

}  // namespace

TEST_CASE("the same config and seed rebuild the network bitwise") {
  const NetworkConfig cfg = mfn::preset("nano");
  Network<float> a(cfg, 7), b(cfg, 7), c(cfg, 8);
  CHECK(params_bitwise_equal(a, b));
  CHECK(!params_bitwise_equal(a, c));
}

TEST_CASE("forward produces a finite embedding of the configured width") {
  const NetworkConfig cfg = mfn::preset("nano");
  Network<float> net(cfg, 0);
  Rng rng(1);
  const Tensor<float> x = rand_image(rng, cfg);
  const Tensor<float> e = net.embed(x);
  REQUIRE(e.shape() == Shape4{1, cfg.embed_dim, 1, 1});
  bool nonzero = false;
  for (int64_t i = 0; i < e.numel(); ++i) {
    CHECK(std::isfinite(e[static_cast<size_t>(i)]));
    nonzero = nonzero || e[static_cast<size_t>(i)] != 0.0f;
  }
  CHECK(nonzero);
}

TEST_CASE("duplicate batch rows embed identically") {
  const NetworkConfig cfg = mfn::preset("nano");
  Network<float> net(cfg, 3);
  Rng rng(4);
  const Tensor<float> one = rand_image(rng, cfg);
  Tensor<float> batch(Shape4{2, 3, cfg.input_h, cfg.input_w});
  const size_t per = static_cast<size_t>(one.numel());
  std::memcpy(batch.data(), one.data(), sizeof(float) * per);
  std::memcpy(batch.data() + per, one.data(), sizeof(float) * per);
  const Tensor<float> e = net.embed(batch);
  REQUIRE(e.shape() == Shape4{2, cfg.embed_dim, 1, 1});
  CHECK(std::memcmp(e.data(), e.data() + cfg.embed_dim,
                    sizeof(float) * static_cast<size_t>(cfg.embed_dim)) == 0);
}

TEST_CASE("the network is exactly the stem, blocks, and embedding composed") {
  const NetworkConfig cfg = mfn::preset("nano");
  Network<float> net(cfg, 11);
  Rng rng(12);
  const Tensor<float> x = rand_image(rng, cfg);
  const Tensor<float> whole = net.embed(x);

  mfn::Var<float> h = mfn::make_var(x, false);
  h = mfn::forward<float>(nullptr, net.stem(), h);
  h = mfn::forward<float>(nullptr, net.stem_bn(), h, false);
  h = mfn::forward<float>(nullptr, net.stem_act(), h);
  CHECK(h.value->shape() == Shape4{1, cfg.stem_c, cfg.input_h / 2, cfg.input_w / 2});
  for (const auto& b : net.blocks()) h = mfn::forward<float>(nullptr, b, h, false);
  h = mfn::forward<float>(nullptr, net.embedding(), h, false);
  CHECK(tensors_bitwise_equal(whole, *h.value));
}

TEST_CASE("forward rejects inputs that do not match the configured geometry") {
  const NetworkConfig cfg = mfn::preset("nano");
  Network<float> net(cfg, 0);
  Tensor<float> wrong_c(Shape4{1, 1, cfg.input_h, cfg.input_w});
  CHECK_THROWS_AS(net.embed(wrong_c), mfn::ShapeError);
  Tensor<float> wrong_hw(Shape4{1, 3, cfg.input_h + 2, cfg.input_w});
  CHECK_THROWS_AS(net.embed(wrong_hw), mfn::ShapeError);
}

TEST_CASE("checkpoints round-trip bitwise") {
  cli::TempDir dir("ckpt");
  const NetworkConfig cfg = mfn::preset("nano");
  Network<float> net(cfg, 21);
  const std::string path = dir.path("net.mfnw");
  mfn::save_checkpoint(net, path);

  Network<float> back = mfn::load_checkpoint(path);
  CHECK(back.config().name == cfg.name);
  CHECK(params_bitwise_equal(net, back));

  Rng rng(22);
  const Tensor<float> x = rand_image(rng, cfg);
  CHECK(tensors_bitwise_equal(net.embed(x), back.embed(x)));

  // Loading into a freshly seeded twin of the same config also matches.
  Network<float> fresh(cfg, 999);
  CHECK(!params_bitwise_equal(net, fresh));
  mfn::load_checkpoint_into(fresh, path);
  CHECK(params_bitwise_equal(net, fresh));
}

TEST_CASE("a truncated checkpoint is rejected") {
  cli::TempDir dir("trunc");
  const NetworkConfig cfg = mfn::preset("nano");
  Network<float> net(cfg, 5);
  const std::string path = dir.path("net.mfnw");
  mfn::save_checkpoint(net, path);
  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full / 2);
  CHECK_THROWS_AS(mfn::load_checkpoint(path), mfn::IoError);
  CHECK_THROWS_AS(mfn::load_checkpoint(dir.path("missing.mfnw")), mfn::IoError);
}

TEST_CASE("shared weights still embed differently across shuffle twins") {
  // The shuffle twin registers the same parameter set, so a plain checkpoint
  // loads into it cleanly; the interleaved channels then change the output.
  cli::TempDir dir("twin");
  const NetworkConfig plain_cfg = mfn::preset("nano");
  NetworkConfig twin_cfg = plain_cfg;
  for (auto& b : twin_cfg.blocks) b.shuffle = true;
  Network<float> plain(plain_cfg, 31);
  const std::string path = dir.path("plain.mfnw");
  mfn::save_checkpoint(plain, path);

  Network<float> twin(twin_cfg, 0);
  mfn::load_checkpoint_into(twin, path);
  CHECK(params_bitwise_equal(plain, twin));

  Rng rng(32);
  const Tensor<float> x = rand_image(rng, plain_cfg);
  const Tensor<float> ea = plain.embed(x);
  const Tensor<float> eb = twin.embed(x);
  CHECK(!tensors_bitwise_equal(ea, eb));
}

TEST_CASE("config serialization round-trips every preset") {
  for (const std::string& name : mfn::preset_names()) {
    CAPTURE(name);
    const NetworkConfig cfg = mfn::preset(name);
    const std::string text = mfn::serialize_config(cfg);
    const NetworkConfig back = mfn::parse_config(text);
    CHECK(mfn::serialize_config(back) == text);
    CHECK(back.name == cfg.name);
    CHECK(back.blocks.size() == cfg.blocks.size());
    CHECK(back.embed_dim == cfg.embed_dim);
  }
  CHECK_THROWS_AS(mfn::preset("mixfacenet-xxl"), mfn::ConfigError);
}
