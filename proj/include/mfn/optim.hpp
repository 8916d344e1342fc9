// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// SGD with classical momentum and coupled weight decay:
//   g = grad + wd * w;  v = mu * v + g;  w -= lr * v.

#ifndef MFN_OPTIM_HPP_
#define MFN_OPTIM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mfn/params.hpp"
#include "mfn/tensor.hpp"

namespace mfn {

template <typename T>
class Sgd {
 public:
  Sgd(ParamStore<T>& store, T lr, T momentum = T(0.9), T weight_decay = T(0))
      : store_(store), lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
    if (!(lr >= T(0))) throw ConfigError("sgd: learning rate must be non-negative");
    if (momentum < T(0) || momentum >= T(1)) throw ConfigError("sgd: momentum must lie in [0, 1)");
    if (weight_decay < T(0)) throw ConfigError("sgd: weight decay must be non-negative");
    velocity_.resize(store_.entries().size());
    for (size_t i = 0; i < velocity_.size(); ++i) {
      const auto& e = store_.entries()[i];
      if (e.trainable) velocity_[i].assign(static_cast<size_t>(e.var.value->numel()), T(0));
    }
  }

  T lr() const { return lr_; }
  void set_lr(T lr) {
    if (!(lr >= T(0))) throw ConfigError("sgd: learning rate must be non-negative");
    lr_ = lr;
  }

  // One update from the accumulated gradients. Does not clear them.
  void step() {
    const auto& entries = store_.entries();
    if (entries.size() != velocity_.size()) {
      throw ConfigError("sgd: parameter store grew after optimizer construction");
    }
    for (size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (!e.trainable || !e.var.tracked()) continue;
      T* w = e.var.value->data();
      const T* g = e.var.grad->data();
      std::vector<T>& v = velocity_[i];
      for (size_t j = 0; j < v.size(); ++j) {
        const T gj = g[j] + weight_decay_ * w[j];
        v[j] = momentum_ * v[j] + gj;
        w[j] -= lr_ * v[j];
      }
    }
  }

 private:
  ParamStore<T>& store_;
  T lr_;
  T momentum_;
  T weight_decay_;
  std::vector<std::vector<T>> velocity_;
};

}  // namespace mfn

#endif  // MFN_OPTIM_HPP_
