// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfn/toytrain.hpp"

#include "mfn/arcface.hpp"
#include "mfn/optim.hpp"

namespace mfn {

namespace {
constexpr uint64_t kSeedStride = 0x9E3779B97F4A7C15ULL;
}  // namespace

ToyTrainResult toy_train(Network<float>& net, const ToyTrainOptions& opt) {
  if (opt.classes < 2) throw ConfigError("toy_train: need at least 2 classes");
  if (opt.per_class < 1) throw ConfigError("toy_train: need at least 1 sample per class");
  if (opt.steps < 1) throw ConfigError("toy_train: need at least 1 step");

  const NetworkConfig& cfg = net.config();
  ParamStore<float>& store = net.params();
  // The margin head lives in its own store so the trained network checkpoint
  // stays loadable on its own; both stores step under the same schedule.
  ParamStore<float> head_store;
  Rng head_rng(opt.seed + kSeedStride);
  ArcFaceHead<float> head(head_store, opt.classes, cfg.embed_dim, head_rng, opt.margin, opt.scale);
  Sgd<float> sgd(store, opt.lr, opt.momentum, opt.weight_decay);
  Sgd<float> head_sgd(head_store, opt.lr, opt.momentum, opt.weight_decay);

  Rng data_rng(opt.seed + 2 * kSeedStride);
  const int64_t batch = opt.classes * opt.per_class;
  const int64_t image_elems = 3 * cfg.input_h * cfg.input_w;
  Tensor<float> x(Shape4{batch, 3, cfg.input_h, cfg.input_w});
  std::vector<int64_t> targets;
  targets.reserve(static_cast<size_t>(batch));
  for (int64_t c = 0; c < opt.classes; ++c) {
    std::vector<float> proto(static_cast<size_t>(image_elems));
    for (auto& v : proto) v = static_cast<float>(data_rng.uniform(-1.0, 1.0));
    for (int64_t s = 0; s < opt.per_class; ++s) {
      const int64_t row = c * opt.per_class + s;
      targets.push_back(c);
      for (int64_t j = 0; j < image_elems; ++j) {
        x.data()[row * image_elems + j] =
            proto[static_cast<size_t>(j)] +
            static_cast<float>(data_rng.uniform(-opt.noise, opt.noise));
      }
    }
  }

  ToyTrainResult res;
  for (int64_t step = 1; step <= opt.steps; ++step) {
    Tape<float> tape;
    store.zero_grads();
    head_store.zero_grads();
    Var<float> in = make_var(x, /*track=*/false);
    Var<float> emb = net.forward(&tape, in, /*training=*/true);
    ArcFaceResult<float> out = head.forward(&tape, emb, targets);
    const double accuracy = static_cast<double>(out.correct) / static_cast<double>(batch);
    res.curve.push_back({step, out.loss, accuracy});
    res.final_accuracy = accuracy;
    res.steps_run = step;
    if (accuracy >= opt.target_accuracy) break;
    tape.backward(out.loss_var);
    sgd.step();
    head_sgd.step();
  }
  return res;
}

}  // namespace mfn
