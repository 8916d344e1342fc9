// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Primitive forward ops over dense 4-d tensors. Float calls route through the
// runtime-selected kernel backend; double always runs the scalar reference.
// Transcendentals (exp inside swish/sigmoid) always evaluate via libm so every
// backend shares one rounding source.

#ifndef MFN_OPS_HPP_
#define MFN_OPS_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "mfn/kernels.hpp"
#include "mfn/tensor.hpp"

namespace mfn {

// Convolution hyperparameters. Square stride/padding on both axes.
struct ConvParams {
  int64_t kh = 1;
  int64_t kw = 1;
  int64_t stride = 1;
  int64_t pad = 0;
  int64_t groups = 1;
};

inline int64_t conv_out_extent(int64_t in, int64_t k, int64_t stride, int64_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Validates x/w/bias against p and resolves the full geometry.
template <typename T>
kernels::ConvGeom conv2d_geometry(const Tensor<T>& x, const Tensor<T>& w,
                                  const Tensor<T>* bias, const ConvParams& p) {
  const Shape4& xs = x.shape();
  const Shape4& ws = w.shape();
  if (p.groups < 1) throw ShapeError("conv2d: groups must be >= 1, got " + std::to_string(p.groups));
  if (p.stride < 1) throw ShapeError("conv2d: stride must be >= 1, got " + std::to_string(p.stride));
  if (p.pad < 0) throw ShapeError("conv2d: padding must be >= 0, got " + std::to_string(p.pad));
  if (xs.c % p.groups != 0) {
    throw ShapeError("conv2d: input channels (" + std::to_string(xs.c) +
                     ") not divisible by groups (" + std::to_string(p.groups) + ")");
  }
  if (ws.n % p.groups != 0) {
    throw ShapeError("conv2d: output channels (" + std::to_string(ws.n) +
                     ") not divisible by groups (" + std::to_string(p.groups) + ")");
  }
  if (ws.c != xs.c / p.groups) {
    throw ShapeError("conv2d: weight in-channels (" + std::to_string(ws.c) +
                     ") != input channels/groups (" + std::to_string(xs.c / p.groups) + ")");
  }
  if (ws.h != p.kh || ws.w != p.kw) {
    throw ShapeError("conv2d: weight kernel " + std::to_string(ws.h) + "x" +
                     std::to_string(ws.w) + " != declared kernel " + std::to_string(p.kh) +
                     "x" + std::to_string(p.kw));
  }
  if (bias && (bias->shape().c != ws.n || bias->numel() != ws.n)) {
    throw ShapeError("conv2d: bias channels (" + std::to_string(bias->shape().c) +
                     ") != output channels (" + std::to_string(ws.n) + ")");
  }
  const int64_t oh = conv_out_extent(xs.h, p.kh, p.stride, p.pad);
  const int64_t ow = conv_out_extent(xs.w, p.kw, p.stride, p.pad);
  if (oh < 1 || ow < 1) {
    throw ShapeError("conv2d: kernel " + std::to_string(p.kh) + "x" + std::to_string(p.kw) +
                     " does not fit input height/width " + xs.str() + " with pad " +
                     std::to_string(p.pad));
  }
  return kernels::ConvGeom{xs.n, xs.c, xs.h, xs.w, ws.n, oh, ow,
                           p.kh, p.kw, p.stride, p.pad, p.groups};
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                 const ConvParams& p) {
  const kernels::ConvGeom g = conv2d_geometry(x, w, bias, p);
  Tensor<T> y(Shape4{g.n, g.out_c, g.out_h, g.out_w});
  const T* bp = bias ? bias->data() : nullptr;
  if constexpr (std::is_same_v<T, float>) {
    kernels::table().conv2d(x.data(), w.data(), bp, y.data(), g);
  } else {
    kernels::conv2d_scalar<T>(x.data(), w.data(), bp, y.data(), g);
  }
  detail::check_finite(y, "conv2d");
  return y;
}

namespace detail {
template <typename T>
void expect_per_channel(const Tensor<T>& t, int64_t c, const char* op, const char* name) {
  if (t.numel() != c || t.shape().c != c) {
    throw ShapeError(std::string(op) + ": " + name + " has " + std::to_string(t.numel()) +
                     " elements, expected one per channel (" + std::to_string(c) + ")");
  }
}
}  // namespace detail

// y = gamma * (x - mean) / sqrt(var + eps) + beta, all per channel.
template <typename T>
Tensor<T> batch_norm_infer(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                           const Tensor<T>& mean, const Tensor<T>& var, T eps) {
  const int64_t c = x.shape().c;
  detail::expect_per_channel(gamma, c, "batch_norm_infer", "gamma");
  detail::expect_per_channel(beta, c, "batch_norm_infer", "beta");
  detail::expect_per_channel(mean, c, "batch_norm_infer", "mean");
  detail::expect_per_channel(var, c, "batch_norm_infer", "var");
  std::vector<T> scale(static_cast<size_t>(c)), shift(static_cast<size_t>(c));
  for (int64_t i = 0; i < c; ++i) {
    scale[static_cast<size_t>(i)] = gamma[static_cast<size_t>(i)] /
                                    std::sqrt(var[static_cast<size_t>(i)] + eps);
    shift[static_cast<size_t>(i)] =
        beta[static_cast<size_t>(i)] - mean[static_cast<size_t>(i)] * scale[static_cast<size_t>(i)];
  }
  Tensor<T> y(x.shape());
  const int64_t hw = x.shape().h * x.shape().w;
  if constexpr (std::is_same_v<T, float>) {
    kernels::table().affine_channels(x.data(), scale.data(), shift.data(), y.data(),
                                     x.shape().n, c, hw);
  } else {
    kernels::affine_channels_scalar<T>(x.data(), scale.data(), shift.data(), y.data(),
                                       x.shape().n, c, hw);
  }
  detail::check_finite(y, "batch_norm_infer");
  return y;
}

// Training-mode batch norm output plus everything backward needs.
template <typename T>
struct BatchNormTrainResult {
  Tensor<T> y;
  Tensor<T> mean;    // per-channel batch mean, shape (1,c,1,1)
  Tensor<T> invstd;  // per-channel 1/sqrt(biased var + eps)
};

// Normalizes with the biased batch variance; running stats (if given) blend in
// the unbiased variance: running = momentum * running + (1 - momentum) * batch.
template <typename T>
BatchNormTrainResult<T> batch_norm_train(const Tensor<T>& x, const Tensor<T>& gamma,
                                         const Tensor<T>& beta, Tensor<T>* running_mean,
                                         Tensor<T>* running_var, T eps, T momentum) {
  const Shape4& s = x.shape();
  const int64_t c = s.c;
  detail::expect_per_channel(gamma, c, "batch_norm_train", "gamma");
  detail::expect_per_channel(beta, c, "batch_norm_train", "beta");
  const int64_t hw = s.h * s.w;
  const int64_t cnt = s.n * hw;
  if (cnt < 2) {
    throw ShapeError("batch_norm_train: needs n*h*w >= 2 samples per channel, got " +
                     std::to_string(cnt));
  }
  BatchNormTrainResult<T> r{Tensor<T>(s), Tensor<T>(Shape4{1, c, 1, 1}),
                            Tensor<T>(Shape4{1, c, 1, 1})};
  for (int64_t ch = 0; ch < c; ++ch) {
    T sum = T(0);
    for (int64_t n = 0; n < s.n; ++n) {
      const T* xp = x.data() + (n * c + ch) * hw;
      for (int64_t k = 0; k < hw; ++k) sum += xp[k];
    }
    const T mean = sum / static_cast<T>(cnt);
    T ssq = T(0);
    for (int64_t n = 0; n < s.n; ++n) {
      const T* xp = x.data() + (n * c + ch) * hw;
      for (int64_t k = 0; k < hw; ++k) {
        const T d = xp[k] - mean;
        ssq += d * d;
      }
    }
    const T var_biased = ssq / static_cast<T>(cnt);
    const T invstd = T(1) / std::sqrt(var_biased + eps);
    r.mean[static_cast<size_t>(ch)] = mean;
    r.invstd[static_cast<size_t>(ch)] = invstd;
    const T g = gamma[static_cast<size_t>(ch)];
    const T b = beta[static_cast<size_t>(ch)];
    for (int64_t n = 0; n < s.n; ++n) {
      const T* xp = x.data() + (n * c + ch) * hw;
      T* yp = r.y.data() + (n * c + ch) * hw;
      for (int64_t k = 0; k < hw; ++k) yp[k] = g * ((xp[k] - mean) * invstd) + b;
    }
    if (running_mean && running_var) {
      detail::expect_per_channel(*running_mean, c, "batch_norm_train", "running_mean");
      detail::expect_per_channel(*running_var, c, "batch_norm_train", "running_var");
      const T var_unbiased = ssq / static_cast<T>(cnt - 1);
      T& rm = (*running_mean)[static_cast<size_t>(ch)];
      T& rv = (*running_var)[static_cast<size_t>(ch)];
      rm = momentum * rm + (T(1) - momentum) * mean;
      rv = momentum * rv + (T(1) - momentum) * var_unbiased;
    }
  }
  detail::check_finite(r.y, "batch_norm_train");
  return r;
}

template <typename T>
Tensor<T> prelu(const Tensor<T>& x, const Tensor<T>& alpha) {
  const int64_t c = x.shape().c;
  detail::expect_per_channel(alpha, c, "prelu", "alpha");
  Tensor<T> y(x.shape());
  const int64_t hw = x.shape().h * x.shape().w;
  if constexpr (std::is_same_v<T, float>) {
    kernels::table().prelu(x.data(), alpha.data(), y.data(), x.shape().n, c, hw);
  } else {
    kernels::prelu_scalar<T>(x.data(), alpha.data(), y.data(), x.shape().n, c, hw);
  }
  return y;
}

template <typename T>
T sigmoid_value(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

template <typename T>
Tensor<T> swish(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    const T v = x[static_cast<size_t>(i)];
    y[static_cast<size_t>(i)] = v * sigmoid_value(v);
  }
  return y;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    y[static_cast<size_t>(i)] = sigmoid_value(x[static_cast<size_t>(i)]);
  }
  return y;
}

// (n,c,h,w) -> (n,c,1,1); plain sequential mean per plane.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  const Shape4& s = x.shape();
  if (s.h * s.w < 1) throw ShapeError("global_avg_pool: empty spatial extent " + s.str());
  Tensor<T> y(Shape4{s.n, s.c, 1, 1});
  const int64_t hw = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t ch = 0; ch < s.c; ++ch) {
      const T* xp = x.data() + (n * s.c + ch) * hw;
      T sum = T(0);
      for (int64_t k = 0; k < hw; ++k) sum += xp[k];
      y.at(n, ch, 0, 0) = sum / static_cast<T>(hw);
    }
  }
  return y;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shape " + a.shape().str() + " != " + b.shape().str());
  }
  Tensor<T> y(a.shape());
  if constexpr (std::is_same_v<T, float>) {
    kernels::table().add(a.data(), b.data(), y.data(), a.numel());
  } else {
    kernels::add_scalar<T>(a.data(), b.data(), y.data(), a.numel());
  }
  return y;
}

// x: (n,c,h,w), s: (n,c,1,1); y[n,c,:,:] = x[n,c,:,:] * s[n,c].
template <typename T>
Tensor<T> scale_channels(const Tensor<T>& x, const Tensor<T>& s) {
  const Shape4 want{x.shape().n, x.shape().c, 1, 1};
  if (s.shape() != want) {
    throw ShapeError("scale_channels: gate shape " + s.shape().str() + " != " + want.str());
  }
  Tensor<T> y(x.shape());
  const int64_t hw = x.shape().h * x.shape().w;
  if constexpr (std::is_same_v<T, float>) {
    kernels::table().scale_channels(x.data(), s.data(), y.data(), x.shape().n, x.shape().c, hw);
  } else {
    kernels::scale_channels_scalar<T>(x.data(), s.data(), y.data(), x.shape().n, x.shape().c, hw);
  }
  return y;
}

// Output channel i*groups + j takes input channel j*(c/groups) + i, the
// reshape(groups, c/groups) -> transpose -> flatten permutation. Zero cost in
// the complexity model; pure data movement.
inline int64_t shuffle_source_channel(int64_t out_ch, int64_t c, int64_t groups) {
  const int64_t cpg = c / groups;
  const int64_t i = out_ch / groups;
  const int64_t j = out_ch % groups;
  return j * cpg + i;
}

template <typename T>
Tensor<T> channel_shuffle(const Tensor<T>& x, int64_t groups) {
  const Shape4& s = x.shape();
  if (groups < 1 || s.c % groups != 0) {
    throw ShapeError("channel_shuffle: channels (" + std::to_string(s.c) +
                     ") not divisible by groups (" + std::to_string(groups) + ")");
  }
  Tensor<T> y(s);
  const int64_t hw = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t oc = 0; oc < s.c; ++oc) {
      const int64_t ic = shuffle_source_channel(oc, s.c, groups);
      const T* xp = x.data() + (n * s.c + ic) * hw;
      T* yp = y.data() + (n * s.c + oc) * hw;
      for (int64_t k = 0; k < hw; ++k) yp[k] = xp[k];
    }
  }
  return y;
}

// Copies channels [c0, c1).
template <typename T>
Tensor<T> channel_slice(const Tensor<T>& x, int64_t c0, int64_t c1) {
  const Shape4& s = x.shape();
  if (c0 < 0 || c1 > s.c || c0 >= c1) {
    throw ShapeError("channel_slice: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") invalid for " + std::to_string(s.c) + " channels");
  }
  Tensor<T> y(Shape4{s.n, c1 - c0, s.h, s.w});
  const int64_t hw = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t ch = c0; ch < c1; ++ch) {
      const T* xp = x.data() + (n * s.c + ch) * hw;
      T* yp = y.data() + (n * (c1 - c0) + (ch - c0)) * hw;
      for (int64_t k = 0; k < hw; ++k) yp[k] = xp[k];
    }
  }
  return y;
}

template <typename T>
Tensor<T> channel_concat(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("channel_concat: no inputs");
  const Shape4& s0 = parts.front().shape();
  int64_t ctotal = 0;
  for (const auto& p : parts) {
    const Shape4& s = p.shape();
    if (s.n != s0.n || s.h != s0.h || s.w != s0.w) {
      throw ShapeError("channel_concat: part shape " + s.str() +
                       " mismatches leading part " + s0.str() + " outside the channel axis");
    }
    ctotal += s.c;
  }
  Tensor<T> y(Shape4{s0.n, ctotal, s0.h, s0.w});
  const int64_t hw = s0.h * s0.w;
  for (int64_t n = 0; n < s0.n; ++n) {
    int64_t base = 0;
    for (const auto& p : parts) {
      const int64_t pc = p.shape().c;
      for (int64_t ch = 0; ch < pc; ++ch) {
        const T* xp = p.data() + (n * pc + ch) * hw;
        T* yp = y.data() + (n * ctotal + base + ch) * hw;
        for (int64_t k = 0; k < hw; ++k) yp[k] = xp[k];
      }
      base += pc;
    }
  }
  return y;
}

}  // namespace mfn

#endif  // MFN_OPS_HPP_
