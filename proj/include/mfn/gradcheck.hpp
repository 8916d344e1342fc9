// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite differences against the recorded backward pass.
//
// Each check builds a differentiable computation over tracked leaf values,
// reads the output out as loss = sum(R * y) with fixed uniform [-1, 1]
// weights R, and compares every analytic leaf gradient with
// (L(v + h) - L(v - h)) / (v_plus - v_minus), the step realized in T's
// precision. Losses accumulate in double in both passes so the comparison
// measures the backward pass, not readout noise. Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, 1).

#ifndef MFN_GRADCHECK_HPP_
#define MFN_GRADCHECK_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mfn/arcface.hpp"
#include "mfn/autodiff.hpp"
#include "mfn/blocks.hpp"
#include "mfn/params.hpp"
#include "mfn/random.hpp"
#include "mfn/tensor.hpp"

namespace mfn {

template <typename T>
struct FdDefaults;
template <>
struct FdDefaults<double> {
  static constexpr double kTolerance = 1e-6;
  static constexpr double kStep = 1e-4;
  static constexpr double kArcStep = 1e-5;
};
template <>
struct FdDefaults<float> {
  static constexpr double kTolerance = 1e-3;
  static constexpr double kStep = 1e-2;
  // The margin head reports its loss in double even for float parameters,
  // so the step is bounded by curvature, not by forward rounding noise.
  static constexpr double kArcStep = 2e-3;
};

struct CheckResult {
  std::string name;
  double max_rel_error = 0.0;
  bool pass = false;
};

inline bool all_pass(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return !results.empty();
}

namespace fd {

// Scalar loss sum(R * y); the backward scatters R scaled by the upstream
// seed into y.grad.
template <typename T>
Var<T> weighted_readout(Tape<T>* tape, const Var<T>& y,
                        std::shared_ptr<std::vector<double>> r) {
  double acc = 0.0;
  for (int64_t i = 0; i < y.value->numel(); ++i) {
    acc += (*r)[static_cast<size_t>(i)] * static_cast<double>((*y.value)[i]);
  }
  Tensor<T> scalar(Shape4{1, 1, 1, 1});
  scalar[0] = static_cast<T>(acc);
  Var<T> loss = make_var(std::move(scalar), ad::detail::want_grad(tape, {&y}));
  if (loss.tracked()) {
    auto yg = y.grad;
    auto lg = loss.grad;
    tape->record([yg, lg, r, n = y.value->numel()]() {
      if (!yg) return;
      const T up = (*lg)[0];
      for (int64_t i = 0; i < n; ++i) {
        (*yg)[i] += static_cast<T>((*r)[static_cast<size_t>(i)]) * up;
      }
    });
  }
  return loss;
}

template <typename T>
double weighted_loss(const Tensor<T>& y, const std::vector<double>& r) {
  double acc = 0.0;
  for (int64_t i = 0; i < y.numel(); ++i) {
    acc += r[static_cast<size_t>(i)] * static_cast<double>(y[i]);
  }
  return acc;
}

inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1.0});
}

// Compares analytic gradients of every element of every leaf against the
// central difference of `loss_at` (a pure function of the current leaf
// values). `grads` are pre-computed snapshots parallel to `leaves`.
template <typename T>
CheckResult compare_leaves(const std::string& name, const std::vector<Var<T>>& leaves,
                           const std::vector<std::vector<T>>& grads,
                           const std::function<double()>& loss_at, double step,
                           double tolerance) {
  CheckResult res;
  res.name = name;
  for (size_t li = 0; li < leaves.size(); ++li) {
    Tensor<T>& value = *leaves[li].value;
    for (int64_t i = 0; i < value.numel(); ++i) {
      const T orig = value[i];
      const T vp = static_cast<T>(static_cast<double>(orig) + step);
      const T vm = static_cast<T>(static_cast<double>(orig) - step);
      value[i] = vp;
      const double lp = loss_at();
      value[i] = vm;
      const double lm = loss_at();
      value[i] = orig;
      const double numeric = (lp - lm) / (static_cast<double>(vp) - static_cast<double>(vm));
      const double analytic = static_cast<double>(grads[li][static_cast<size_t>(i)]);
      res.max_rel_error = std::max(res.max_rel_error, rel_error(analytic, numeric));
    }
  }
  res.pass = res.max_rel_error <= tolerance;
  return res;
}

template <typename T>
std::vector<std::vector<T>> snapshot_grads(const std::vector<Var<T>>& leaves) {
  std::vector<std::vector<T>> grads;
  for (const Var<T>& v : leaves) {
    const Tensor<T>& g = *v.grad;
    grads.emplace_back(g.data(), g.data() + g.numel());
  }
  return grads;
}

// Tensor-output check: loss = sum(R * build()). `readout_scale` bounds the
// readout weights; deep composites need a small loss magnitude to keep the
// 32-bit forward's rounding noise below the difference quotient.
template <typename T>
CheckResult run_tensor_check(const std::string& name, const std::vector<Var<T>>& leaves,
                             const std::function<Var<T>(Tape<T>*)>& build, Rng& rng,
                             double step, double tolerance, double readout_scale = 1.0) {
  Var<T> probe = build(nullptr);
  auto r = std::make_shared<std::vector<double>>(static_cast<size_t>(probe.value->numel()));
  for (auto& v : *r) v = rng.uniform(-readout_scale, readout_scale);

  Tape<T> tape;
  Var<T> y = build(&tape);
  Var<T> loss = weighted_readout(&tape, y, r);
  tape.backward(loss);
  const auto grads = snapshot_grads(leaves);

  const auto loss_at = [&build, &r]() { return weighted_loss(*build(nullptr).value, *r); };
  return compare_leaves(name, leaves, grads, loss_at, step, tolerance);
}

// Scalar-loss check: `loss_fn` returns the loss Var (for backward) plus its
// double-precision value (for differencing).
template <typename T>
CheckResult run_scalar_check(const std::string& name, const std::vector<Var<T>>& leaves,
                             const std::function<std::pair<Var<T>, double>(Tape<T>*)>& loss_fn,
                             double step, double tolerance) {
  Tape<T> tape;
  Var<T> loss = loss_fn(&tape).first;
  tape.backward(loss);
  const auto grads = snapshot_grads(leaves);
  const auto loss_at = [&loss_fn]() { return loss_fn(nullptr).second; };
  return compare_leaves(name, leaves, grads, loss_at, step, tolerance);
}

template <typename T>
Tensor<T> random_tensor(Rng& rng, Shape4 s, double lo, double hi) {
  Tensor<T> t(s);
  for (int64_t i = 0; i < t.numel(); ++i) {
    t[i] = static_cast<T>(rng.uniform(lo, hi));
  }
  return t;
}

// Values bounded away from zero, where the PReLU kink breaks differencing.
template <typename T>
Tensor<T> random_tensor_off_kink(Rng& rng, Shape4 s) {
  Tensor<T> t(s);
  for (int64_t i = 0; i < t.numel(); ++i) {
    const double mag = rng.uniform(0.2, 2.0);
    t[i] = static_cast<T>(rng.uniform() < 0.5 ? -mag : mag);
  }
  return t;
}

}  // namespace fd

// The full finite-difference suite at T's default tolerances. Any seed must
// pass; the seed fixes every generated value.
template <typename T>
std::vector<CheckResult> run_gradient_checks(uint64_t seed) {
  const double tol = FdDefaults<T>::kTolerance;
  const double step = FdDefaults<T>::kStep;
  std::vector<CheckResult> out;
  uint64_t salt = 0;
  const auto next_rng = [&]() { return Rng(seed + 0x9E3779B97F4A7C15ULL * ++salt); };

  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{2, 3, 5, 5}, -1.5, 1.5), true);
    Var<T> w = make_var(fd::random_tensor<T>(rng, Shape4{4, 3, 3, 3}, -0.8, 0.8), true);
    Var<T> b = make_var(fd::random_tensor<T>(rng, Shape4{1, 4, 1, 1}, -0.5, 0.5), true);
    const ConvParams p{3, 3, 1, 1, 1};
    out.push_back(fd::run_tensor_check<T>(
        "conv2d_k3_s1_p1", {x, w, b},
        [&](Tape<T>* t) { return ad::conv2d(t, x, w, &b, p); }, rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{2, 4, 6, 6}, -1.5, 1.5), true);
    Var<T> w = make_var(fd::random_tensor<T>(rng, Shape4{6, 2, 3, 3}, -0.8, 0.8), true);
    Var<T> b = make_var(fd::random_tensor<T>(rng, Shape4{1, 6, 1, 1}, -0.5, 0.5), true);
    const ConvParams p{3, 3, 2, 1, 2};
    out.push_back(fd::run_tensor_check<T>(
        "conv2d_k3_s2_grouped", {x, w, b},
        [&](Tape<T>* t) { return ad::conv2d(t, x, w, &b, p); }, rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{1, 4, 7, 7}, -1.5, 1.5), true);
    Var<T> w = make_var(fd::random_tensor<T>(rng, Shape4{4, 1, 5, 5}, -0.6, 0.6), true);
    const ConvParams p{5, 5, 1, 2, 4};
    out.push_back(fd::run_tensor_check<T>(
        "conv2d_depthwise_k5", {x, w},
        [&](Tape<T>* t) { return ad::conv2d<T>(t, x, w, nullptr, p); }, rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{2, 5, 3, 3}, -1.5, 1.5), true);
    Var<T> w = make_var(fd::random_tensor<T>(rng, Shape4{7, 5, 1, 1}, -0.8, 0.8), true);
    Var<T> b = make_var(fd::random_tensor<T>(rng, Shape4{1, 7, 1, 1}, -0.5, 0.5), true);
    const ConvParams p{1, 1, 1, 0, 1};
    out.push_back(fd::run_tensor_check<T>(
        "conv2d_pointwise", {x, w, b},
        [&](Tape<T>* t) { return ad::conv2d(t, x, w, &b, p); }, rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{3, 4, 2, 2}, -1.5, 1.5), true);
    Var<T> g = make_var(fd::random_tensor<T>(rng, Shape4{1, 4, 1, 1}, 0.5, 1.5), true);
    Var<T> b = make_var(fd::random_tensor<T>(rng, Shape4{1, 4, 1, 1}, -0.5, 0.5), true);
    Tensor<T> rm(Shape4{1, 4, 1, 1});
    Tensor<T> rv = Tensor<T>::full(Shape4{1, 4, 1, 1}, T(1));
    out.push_back(fd::run_tensor_check<T>(
        "batch_norm_train", {x, g, b},
        [&, rm, rv](Tape<T>* t) mutable {
          return ad::batch_norm_train(t, x, g, b, &rm, &rv, static_cast<T>(kBnEps),
                                      static_cast<T>(kBnMomentum));
        },
        rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{3, 4, 2, 2}, -1.5, 1.5), true);
    Var<T> g = make_var(fd::random_tensor<T>(rng, Shape4{1, 4, 1, 1}, 0.5, 1.5), true);
    Var<T> b = make_var(fd::random_tensor<T>(rng, Shape4{1, 4, 1, 1}, -0.5, 0.5), true);
    Tensor<T> mean = fd::random_tensor<T>(rng, Shape4{1, 4, 1, 1}, -0.5, 0.5);
    Tensor<T> var = fd::random_tensor<T>(rng, Shape4{1, 4, 1, 1}, 0.5, 2.0);
    out.push_back(fd::run_tensor_check<T>(
        "batch_norm_infer", {x, g, b},
        [&, mean, var](Tape<T>* t) {
          return ad::batch_norm_infer(t, x, g, b, mean, var, static_cast<T>(kBnEps));
        },
        rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor_off_kink<T>(rng, Shape4{2, 3, 4, 4}), true);
    Var<T> a = make_var(fd::random_tensor<T>(rng, Shape4{1, 3, 1, 1}, 0.1, 0.5), true);
    out.push_back(fd::run_tensor_check<T>(
        "prelu", {x, a}, [&](Tape<T>* t) { return ad::prelu(t, x, a); }, rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{2, 3, 3, 3}, -2.0, 2.0), true);
    out.push_back(fd::run_tensor_check<T>(
        "swish", {x}, [&](Tape<T>* t) { return ad::swish(t, x); }, rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{2, 3, 3, 3}, -2.0, 2.0), true);
    out.push_back(fd::run_tensor_check<T>(
        "sigmoid", {x}, [&](Tape<T>* t) { return ad::sigmoid(t, x); }, rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{2, 3, 4, 5}, -1.5, 1.5), true);
    out.push_back(fd::run_tensor_check<T>(
        "global_avg_pool", {x}, [&](Tape<T>* t) { return ad::global_avg_pool(t, x); }, rng,
        step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> a = make_var(fd::random_tensor<T>(rng, Shape4{2, 3, 3, 3}, -1.5, 1.5), true);
    Var<T> b = make_var(fd::random_tensor<T>(rng, Shape4{2, 3, 3, 3}, -1.5, 1.5), true);
    out.push_back(fd::run_tensor_check<T>(
        "add", {a, b}, [&](Tape<T>* t) { return ad::add(t, a, b); }, rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{2, 3, 3, 3}, -1.5, 1.5), true);
    Var<T> s = make_var(fd::random_tensor<T>(rng, Shape4{2, 3, 1, 1}, 0.2, 1.2), true);
    out.push_back(fd::run_tensor_check<T>(
        "scale_channels", {x, s}, [&](Tape<T>* t) { return ad::scale_channels(t, x, s); },
        rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{2, 6, 3, 3}, -1.5, 1.5), true);
    out.push_back(fd::run_tensor_check<T>(
        "channel_shuffle", {x}, [&](Tape<T>* t) { return ad::channel_shuffle(t, x, 3); },
        rng, step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{2, 6, 3, 3}, -1.5, 1.5), true);
    out.push_back(fd::run_tensor_check<T>(
        "channel_slice", {x}, [&](Tape<T>* t) { return ad::channel_slice(t, x, 1, 4); }, rng,
        step, tol));
  }
  {
    Rng rng = next_rng();
    Var<T> a = make_var(fd::random_tensor<T>(rng, Shape4{2, 2, 3, 3}, -1.5, 1.5), true);
    Var<T> b = make_var(fd::random_tensor<T>(rng, Shape4{2, 3, 3, 3}, -1.5, 1.5), true);
    Var<T> c = make_var(fd::random_tensor<T>(rng, Shape4{2, 1, 3, 3}, -1.5, 1.5), true);
    out.push_back(fd::run_tensor_check<T>(
        "channel_concat", {a, b, c},
        [&](Tape<T>* t) { return ad::channel_concat(t, std::vector<Var<T>>{a, b, c}); }, rng,
        step, tol));
  }
  {
    // Full block: expand + mixconv + SE + residual + shuffle, training-mode
    // batch norm. Swish keeps the composite smooth; finite differences over
    // interior PReLU kinks cannot converge, and PReLU has its own check.
    // Leaves are the input and every trainable parameter.
    Rng rng = next_rng();
    BlockSpec spec;
    spec.in_c = 6;
    spec.out_c = 6;
    spec.expand_c = 12;
    spec.mix = MixConvSpec{{3, 5}, {6, 6}, 1};
    spec.expand_groups = 1;
    spec.project_groups = 2;
    spec.se_hidden = 4;
    spec.act = Act::kSwish;
    spec.shuffle = true;
    spec.shuffle_pos = ShufflePos::kAfterBlock;
    ParamStore<T> store;
    BlockUnit<T> block = make_block(store, rng, "b", spec, /*shuffle_groups=*/2);
    Var<T> x = make_var(fd::random_tensor<T>(rng, Shape4{2, 6, 8, 8}, -1.0, 1.0), true);
    std::vector<Var<T>> leaves{x};
    for (const auto& e : store.entries()) {
      if (e.trainable) leaves.push_back(e.var);
    }
    out.push_back(fd::run_tensor_check<T>(
        "mix_block_training", leaves,
        [&](Tape<T>* t) { return forward(t, block, x, /*training=*/true); }, rng, step, tol,
        /*readout_scale=*/0.05));
  }
  {
    // The margin head, with sample 0 pushed into the hard-case branch
    // (cosine below cos(pi - margin)). All vectors get O(1) magnitude so
    // the finite-difference step is a small relative perturbation, and
    // target cosines are kept away from the branch boundary, where the
    // standard hard-case fallback is discontinuous. A moderate scale keeps
    // the softmax curvature inside finite-difference reach in 32-bit.
    Rng rng = next_rng();
    const int64_t classes = 4, dim = 6, batch = 5;
    ParamStore<T> store;
    ArcFaceHead<T> head(store, classes, dim, rng, ArcFaceHead<T>::kDefaultMargin, T(16));
    Tensor<T>& w = *head.weight().value;
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = static_cast<T>(rng.uniform(-1.0, 1.0));
    Var<T> emb = make_var(Tensor<T>(Shape4{batch, dim, 1, 1}), true);
    std::vector<int64_t> targets;
    for (int64_t i = 0; i < batch; ++i) targets.push_back(i % classes);

    const auto target_cos = [&](int64_t i) {
      const int64_t t = targets[static_cast<size_t>(i)];
      double dot = 0.0, sx = 0.0, sw = 0.0;
      for (int64_t q = 0; q < dim; ++q) {
        const double xv = static_cast<double>((*emb.value)[i * dim + q]);
        const double wv = static_cast<double>(w[t * dim + q]);
        dot += xv * wv;
        sx += xv * xv;
        sw += wv * wv;
      }
      return dot / std::sqrt(sx * sw);
    };
    double w0_norm = 0.0;
    for (int64_t q = 0; q < dim; ++q) {
      w0_norm += static_cast<double>(w[targets[0] * dim + q]) * static_cast<double>(w[targets[0] * dim + q]);
    }
    w0_norm = std::sqrt(w0_norm);
    for (int64_t q = 0; q < dim; ++q) {
      (*emb.value)[q] = static_cast<T>(-static_cast<double>(w[targets[0] * dim + q]) / w0_norm +
                                       0.05 * rng.uniform(-1.0, 1.0));
    }
    for (int64_t i = 1; i < batch; ++i) {
      do {
        for (int64_t q = 0; q < dim; ++q) {
          (*emb.value)[i * dim + q] = static_cast<T>(rng.uniform(-1.0, 1.0));
        }
        // Resample away from cos = 1 (the sqrt(1 - c^2) factor in the margin
        // derivative has unbounded curvature there) and away from the
        // easy/hard boundary.
      } while (target_cos(i) > 0.85 || (target_cos(i) > -0.95 && target_cos(i) < -0.80));
    }

    std::vector<Var<T>> leaves{emb, head.weight()};
    out.push_back(fd::run_scalar_check<T>(
        "arcface_head", leaves,
        [&](Tape<T>* t) {
          ArcFaceResult<T> r = head.forward(t, emb, targets);
          return std::make_pair(r.loss_var, r.loss);
        },
        FdDefaults<T>::kArcStep, tol));
  }
  return out;
}

}  // namespace mfn

#endif  // MFN_GRADCHECK_HPP_
