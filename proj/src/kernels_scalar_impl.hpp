// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels. The loop order here is the contract every SIMD variant
// must reproduce bitwise: per output element the reduction runs over
// (in-channel, ky, kx) in that order, with padded taps skipped, and a
// separate multiply and add per tap (no fused contraction; the build sets
// -ffp-contract=off globally).

#ifndef MFN_KERNELS_SCALAR_IMPL_HPP_
#define MFN_KERNELS_SCALAR_IMPL_HPP_

#include "mfn/kernels.hpp"

namespace mfn::kernels {

template <typename T>
void conv2d_scalar_impl(const T* x, const T* w, const T* bias, T* y, const ConvGeom& g) {
  const int64_t icg = g.in_c / g.groups;
  const int64_t ocg = g.out_c / g.groups;
  const int64_t ktap = g.kh * g.kw;
  for (int64_t n = 0; n < g.n; ++n) {
    for (int64_t gr = 0; gr < g.groups; ++gr) {
      for (int64_t oc = gr * ocg; oc < (gr + 1) * ocg; ++oc) {
        const T* woc = w + oc * icg * ktap;
        T* yp = y + ((n * g.out_c + oc) * g.out_h) * g.out_w;
        for (int64_t oy = 0; oy < g.out_h; ++oy) {
          for (int64_t ox = 0; ox < g.out_w; ++ox) {
            T acc = bias ? bias[oc] : T(0);
            for (int64_t ic = 0; ic < icg; ++ic) {
              const T* xp = x + ((n * g.in_c + gr * icg + ic) * g.in_h) * g.in_w;
              const T* wp = woc + ic * ktap;
              for (int64_t ky = 0; ky < g.kh; ++ky) {
                const int64_t iy = oy * g.stride + ky - g.pad;
                if (iy < 0 || iy >= g.in_h) continue;
                for (int64_t kx = 0; kx < g.kw; ++kx) {
                  const int64_t ix = ox * g.stride + kx - g.pad;
                  if (ix < 0 || ix >= g.in_w) continue;
                  acc += xp[iy * g.in_w + ix] * wp[ky * g.kw + kx];
                }
              }
            }
            yp[oy * g.out_w + ox] = acc;
          }
        }
      }
    }
  }
}

template <typename T>
void affine_channels_scalar_impl(const T* x, const T* scale, const T* shift, T* y,
                                 int64_t n, int64_t c, int64_t hw) {
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T s = scale[ch];
      const T b = shift[ch];
      const T* xp = x + (i * c + ch) * hw;
      T* yp = y + (i * c + ch) * hw;
      for (int64_t k = 0; k < hw; ++k) yp[k] = xp[k] * s + b;
    }
  }
}

template <typename T>
void prelu_scalar_impl(const T* x, const T* alpha, T* y, int64_t n, int64_t c, int64_t hw) {
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T a = alpha[ch];
      const T* xp = x + (i * c + ch) * hw;
      T* yp = y + (i * c + ch) * hw;
      for (int64_t k = 0; k < hw; ++k) {
        const T v = xp[k];
        yp[k] = v >= T(0) ? v : a * v;
      }
    }
  }
}

template <typename T>
void add_scalar_impl(const T* a, const T* b, T* y, int64_t len) {
  for (int64_t k = 0; k < len; ++k) y[k] = a[k] + b[k];
}

template <typename T>
void scale_channels_scalar_impl(const T* x, const T* s, T* y, int64_t n, int64_t c,
                                int64_t hw) {
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T g = s[i * c + ch];
      const T* xp = x + (i * c + ch) * hw;
      T* yp = y + (i * c + ch) * hw;
      for (int64_t k = 0; k < hw; ++k) yp[k] = xp[k] * g;
    }
  }
}

}  // namespace mfn::kernels

#endif  // MFN_KERNELS_SCALAR_IMPL_HPP_
