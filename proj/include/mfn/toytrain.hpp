// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic overfit drill: a handful of classes, each a fixed random
// prototype image plus per-sample noise, trained full-batch with the margin
// head until training accuracy reaches the target. Deterministic per seed.

#ifndef MFN_TOYTRAIN_HPP_
#define MFN_TOYTRAIN_HPP_

#include <cstdint>
#include <vector>

#include "mfn/network.hpp"

namespace mfn {

struct ToyTrainOptions {
  int64_t classes = 8;
  int64_t per_class = 4;
  int64_t steps = 2000;      // step cap
  uint64_t seed = 0;         // fixes head init and data; the caller seeds the network
  float lr = 0.1f;
  float momentum = 0.9f;
  float weight_decay = 5e-4f;
  float margin = 0.5f;
  float scale = 64.0f;
  double target_accuracy = 0.95;  // stop before the update that would pass it
  double noise = 0.1;             // per-sample uniform jitter around the prototype
};

struct ToyTrainStepStat {
  int64_t step = 0;  // 1-based
  double loss = 0.0;
  double accuracy = 0.0;  // margin-free argmax accuracy, measured pre-update
};

struct ToyTrainResult {
  std::vector<ToyTrainStepStat> curve;
  double final_accuracy = 0.0;
  int64_t steps_run = 0;
};

// Runs the drill on `net` (modified in place). When the target accuracy is
// reached the loop stops before applying another update, so the network's
// weights are the ones that achieved it.
ToyTrainResult toy_train(Network<float>& net, const ToyTrainOptions& opt);

}  // namespace mfn

#endif  // MFN_TOYTRAIN_HPP_
