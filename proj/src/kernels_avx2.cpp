// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// AVX2 kernels. Lanes run parallel over output columns; each lane performs
// the exact tap sequence of the scalar reference (same order, separate mul
// and add, no FMA), so results are bitwise identical to the scalar backend.
// This file is the only translation unit compiled with -mavx2.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "kernels_scalar_impl.hpp"
#include "mfn/kernels.hpp"

namespace mfn::kernels {
namespace {

// Single-output-element reference, shared by border/tail paths.
inline float conv_point(const float* x, const float* w, float acc, const ConvGeom& g,
                        int64_t n, int64_t gr, int64_t oc, int64_t oy, int64_t ox) {
  const int64_t icg = g.in_c / g.groups;
  const int64_t ktap = g.kh * g.kw;
  const float* woc = w + oc * icg * ktap;
  for (int64_t ic = 0; ic < icg; ++ic) {
    const float* xp = x + ((n * g.in_c + gr * icg + ic) * g.in_h) * g.in_w;
    const float* wp = woc + ic * ktap;
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
  return acc;
}

// 1x1 stride-1 unpadded convolution (grouped pointwise). Lanes over columns.
void conv2d_pointwise(const float* x, const float* w, const float* bias, float* y,
                      const ConvGeom& g) {
  const int64_t icg = g.in_c / g.groups;
  const int64_t ocg = g.out_c / g.groups;
  const int64_t hw = g.out_h * g.out_w;
  for (int64_t n = 0; n < g.n; ++n) {
    for (int64_t gr = 0; gr < g.groups; ++gr) {
      const float* xg = x + (n * g.in_c + gr * icg) * hw;
      for (int64_t oc = gr * ocg; oc < (gr + 1) * ocg; ++oc) {
        const float* wp = w + oc * icg;
        float* yp = y + (n * g.out_c + oc) * hw;
        const float b = bias ? bias[oc] : 0.0f;
        int64_t k = 0;
        for (; k + 8 <= hw; k += 8) {
          __m256 acc = _mm256_set1_ps(b);
          for (int64_t ic = 0; ic < icg; ++ic) {
            const __m256 xv = _mm256_loadu_ps(xg + ic * hw + k);
            const __m256 wv = _mm256_set1_ps(wp[ic]);
            acc = _mm256_add_ps(acc, _mm256_mul_ps(xv, wv));
          }
          _mm256_storeu_ps(yp + k, acc);
        }
        for (; k < hw; ++k) {
          float acc = b;
          for (int64_t ic = 0; ic < icg; ++ic) acc += xg[ic * hw + k] * wp[ic];
          yp[k] = acc;
        }
      }
    }
  }
}

// Depthwise stride-1 convolution. Interior columns run 8 lanes wide; border
// columns fall back to the single-element reference.
void conv2d_depthwise_s1(const float* x, const float* w, const float* bias, float* y,
                         const ConvGeom& g) {
  const int64_t ktap = g.kh * g.kw;
  // Columns where every kx tap is in bounds.
  const int64_t lo = g.pad;
  const int64_t hi = g.in_w - g.kw + g.pad;  // inclusive
  for (int64_t n = 0; n < g.n; ++n) {
    for (int64_t c = 0; c < g.out_c; ++c) {
      const float* xp = x + ((n * g.in_c + c) * g.in_h) * g.in_w;
      const float* wp = w + c * ktap;
      float* yp = y + ((n * g.out_c + c) * g.out_h) * g.out_w;
      const float b = bias ? bias[c] : 0.0f;
      for (int64_t oy = 0; oy < g.out_h; ++oy) {
        int64_t ox = 0;
        for (; ox < g.out_w && ox < lo; ++ox) {
          yp[oy * g.out_w + ox] = conv_point(x, w, b, g, n, c, c, oy, ox);
        }
        for (; ox + 8 <= g.out_w && ox + 7 <= hi; ox += 8) {
          __m256 acc = _mm256_set1_ps(b);
          for (int64_t ky = 0; ky < g.kh; ++ky) {
            const int64_t iy = oy + ky - g.pad;
            if (iy < 0 || iy >= g.in_h) continue;
            const float* row = xp + iy * g.in_w + ox - g.pad;
            for (int64_t kx = 0; kx < g.kw; ++kx) {
              const __m256 xv = _mm256_loadu_ps(row + kx);
              const __m256 wv = _mm256_set1_ps(wp[ky * g.kw + kx]);
              acc = _mm256_add_ps(acc, _mm256_mul_ps(xv, wv));
            }
          }
          _mm256_storeu_ps(yp + oy * g.out_w + ox, acc);
        }
        for (; ox < g.out_w; ++ox) {
          yp[oy * g.out_w + ox] = conv_point(x, w, b, g, n, c, c, oy, ox);
        }
      }
    }
  }
}

}  // namespace

void conv2d_avx2(const float* x, const float* w, const float* bias, float* y,
                 const ConvGeom& g) {
  if (g.kh == 1 && g.kw == 1 && g.pad == 0 && g.stride == 1) {
    conv2d_pointwise(x, w, bias, y, g);
  } else if (g.groups == g.in_c && g.in_c == g.out_c && g.stride == 1) {
    conv2d_depthwise_s1(x, w, bias, y, g);
  } else {
    conv2d_scalar_impl(x, w, bias, y, g);
  }
}

void affine_channels_avx2(const float* x, const float* scale, const float* shift,
                          float* y, int64_t n, int64_t c, int64_t hw) {
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const __m256 sv = _mm256_set1_ps(scale[ch]);
      const __m256 bv = _mm256_set1_ps(shift[ch]);
      const float* xp = x + (i * c + ch) * hw;
      float* yp = y + (i * c + ch) * hw;
      int64_t k = 0;
      for (; k + 8 <= hw; k += 8) {
        _mm256_storeu_ps(yp + k,
                         _mm256_add_ps(_mm256_mul_ps(_mm256_loadu_ps(xp + k), sv), bv));
      }
      for (; k < hw; ++k) yp[k] = xp[k] * scale[ch] + shift[ch];
    }
  }
}

void prelu_avx2(const float* x, const float* alpha, float* y, int64_t n, int64_t c,
                int64_t hw) {
  const __m256 zero = _mm256_setzero_ps();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const float a = alpha[ch];
      const __m256 av = _mm256_set1_ps(a);
      const float* xp = x + (i * c + ch) * hw;
      float* yp = y + (i * c + ch) * hw;
      int64_t k = 0;
      for (; k + 8 <= hw; k += 8) {
        const __m256 v = _mm256_loadu_ps(xp + k);
        const __m256 neg = _mm256_mul_ps(av, v);
        const __m256 keep = _mm256_cmp_ps(v, zero, _CMP_GE_OQ);
        _mm256_storeu_ps(yp + k, _mm256_blendv_ps(neg, v, keep));
      }
      for (; k < hw; ++k) {
        const float v = xp[k];
        yp[k] = v >= 0.0f ? v : a * v;
      }
    }
  }
}

void add_avx2(const float* a, const float* b, float* y, int64_t len) {
  int64_t k = 0;
  for (; k + 8 <= len; k += 8) {
    _mm256_storeu_ps(y + k, _mm256_add_ps(_mm256_loadu_ps(a + k), _mm256_loadu_ps(b + k)));
  }
  for (; k < len; ++k) y[k] = a[k] + b[k];
}

void scale_channels_avx2(const float* x, const float* s, float* y, int64_t n,
                         int64_t c, int64_t hw) {
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const float g = s[i * c + ch];
      const __m256 gv = _mm256_set1_ps(g);
      const float* xp = x + (i * c + ch) * hw;
      float* yp = y + (i * c + ch) * hw;
      int64_t k = 0;
      for (; k + 8 <= hw; k += 8) {
        _mm256_storeu_ps(yp + k, _mm256_mul_ps(_mm256_loadu_ps(xp + k), gv));
      }
      for (; k < hw; ++k) yp[k] = xp[k] * g;
    }
  }
}

}  // namespace mfn::kernels

#endif  // x86-64
