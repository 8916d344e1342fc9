// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFN_PARAMS_HPP_
#define MFN_PARAMS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "mfn/autodiff.hpp"
#include "mfn/tensor.hpp"

namespace mfn {

// Ordered, named parameter registry. Registration order is the checkpoint
// entry order and the optimizer update order, so it must stay deterministic.
// Trainable entries carry gradients; running statistics register as
// non-trainable and are excluded from the params metric.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Var<T> var;
    bool trainable;
  };

  Var<T> add(std::string name, Tensor<T> init, bool trainable = true) {
    for (const auto& e : entries_) {
      if (e.name == name) throw ConfigError("params: duplicate parameter name '" + name + "'");
    }
    Var<T> v = make_var(std::move(init), trainable);
    entries_.push_back(Entry{std::move(name), v, trainable});
    return v;
  }

  // Adopts an existing Var (shared storage) under a new registry.
  void adopt(std::string name, const Var<T>& v, bool trainable) {
    for (const auto& e : entries_) {
      if (e.name == name) throw ConfigError("params: duplicate parameter name '" + name + "'");
    }
    entries_.push_back(Entry{std::move(name), v, trainable});
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  const Entry* find(const std::string& name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  int64_t trainable_count() const {
    int64_t total = 0;
    for (const auto& e : entries_) {
      if (e.trainable) total += e.var.value->numel();
    }
    return total;
  }

  void zero_grads() {
    for (auto& e : entries_) {
      if (e.var.grad) e.var.grad->fill(T(0));
    }
  }

 private:
  std::vector<Entry> entries_;
};

}  // namespace mfn

#endif  // MFN_PARAMS_HPP_
