// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFN_KERNELS_HPP_
#define MFN_KERNELS_HPP_

#include <cstddef>
#include <cstdint>

namespace mfn::kernels {

// Fully resolved convolution geometry. Symmetric zero padding,
// out = floor((in + 2*pad - k) / stride) + 1 for each spatial axis.
struct ConvGeom {
  int64_t n;
  int64_t in_c, in_h, in_w;
  int64_t out_c, out_h, out_w;
  int64_t kh, kw;
  int64_t stride;
  int64_t pad;
  int64_t groups;
};

enum class Backend {
  kAuto,    // pick the widest backend the CPU supports
  kScalar,  // portable reference loops
  kAvx2,    // x86-64 AVX2 lanes, bitwise-equal to scalar
};

// Selects the backend for float fast paths. kAuto consults the CPU and the
// MFN_SIMD environment variable (values: auto, scalar, avx2). Throws
// mfn::ConfigError if an unsupported backend is forced.
void set_backend(Backend b);

// Resolved backend currently in use (never kAuto).
Backend active_backend();
const char* backend_name();
bool cpu_has_avx2();

// Float fast-path entry points, one indirection per op call.
// Every implementation must reproduce the scalar reference bitwise: identical
// reduction order (ic, then ky, then kx), separate mul and add (no FMA).
struct KernelTable {
  void (*conv2d)(const float* x, const float* w, const float* bias, float* y,
                 const ConvGeom& g);
  // y = x * scale[c] + shift[c]; hw = h*w elements per channel plane.
  void (*affine_channels)(const float* x, const float* scale, const float* shift,
                          float* y, int64_t n, int64_t c, int64_t hw);
  void (*prelu)(const float* x, const float* alpha, float* y, int64_t n,
                int64_t c, int64_t hw);
  void (*add)(const float* a, const float* b, float* y, int64_t len);
  // y[n,c,:,:] = x[n,c,:,:] * s[n*c + c-index]; s has one entry per (n, c).
  void (*scale_channels)(const float* x, const float* s, float* y, int64_t n,
                         int64_t c, int64_t hw);
};

const KernelTable& table();

// Scalar reference implementations, templated for float/double. Double always
// runs these; float runs them when the scalar backend is active.
template <typename T>
void conv2d_scalar(const T* x, const T* w, const T* bias, T* y, const ConvGeom& g);
template <typename T>
void affine_channels_scalar(const T* x, const T* scale, const T* shift, T* y,
                            int64_t n, int64_t c, int64_t hw);
template <typename T>
void prelu_scalar(const T* x, const T* alpha, T* y, int64_t n, int64_t c, int64_t hw);
template <typename T>
void add_scalar(const T* a, const T* b, T* y, int64_t len);
template <typename T>
void scale_channels_scalar(const T* x, const T* s, T* y, int64_t n, int64_t c,
                           int64_t hw);

// AVX2 variants (float only); present on every build, but callable only when
// cpu_has_avx2(). Defined out of line so only their translation unit needs
// -mavx2.
#if defined(__x86_64__) || defined(_M_X64)
#define MFN_HAVE_AVX2_BUILD 1
void conv2d_avx2(const float* x, const float* w, const float* bias, float* y,
                 const ConvGeom& g);
void affine_channels_avx2(const float* x, const float* scale, const float* shift,
                          float* y, int64_t n, int64_t c, int64_t hw);
void prelu_avx2(const float* x, const float* alpha, float* y, int64_t n, int64_t c,
                int64_t hw);
void add_avx2(const float* a, const float* b, float* y, int64_t len);
void scale_channels_avx2(const float* x, const float* s, float* y, int64_t n,
                         int64_t c, int64_t hw);
#endif

}  // namespace mfn::kernels

#endif  // MFN_KERNELS_HPP_
