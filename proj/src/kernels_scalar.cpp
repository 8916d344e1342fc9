// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "kernels_scalar_impl.hpp"

#include "mfn/kernels.hpp"

namespace mfn::kernels {

template <typename T>
void conv2d_scalar(const T* x, const T* w, const T* bias, T* y, const ConvGeom& g) {
  conv2d_scalar_impl(x, w, bias, y, g);
}
template <typename T>
void affine_channels_scalar(const T* x, const T* scale, const T* shift, T* y,
                            int64_t n, int64_t c, int64_t hw) {
  affine_channels_scalar_impl(x, scale, shift, y, n, c, hw);
}
template <typename T>
void prelu_scalar(const T* x, const T* alpha, T* y, int64_t n, int64_t c, int64_t hw) {
  prelu_scalar_impl(x, alpha, y, n, c, hw);
}
template <typename T>
void add_scalar(const T* a, const T* b, T* y, int64_t len) {
  add_scalar_impl(a, b, y, len);
}
template <typename T>
void scale_channels_scalar(const T* x, const T* s, T* y, int64_t n, int64_t c,
                           int64_t hw) {
  scale_channels_scalar_impl(x, s, y, n, c, hw);
}

#define MFN_INSTANTIATE(T)                                                          \
  template void conv2d_scalar<T>(const T*, const T*, const T*, T*, const ConvGeom&); \
  template void affine_channels_scalar<T>(const T*, const T*, const T*, T*, int64_t, \
                                          int64_t, int64_t);                         \
  template void prelu_scalar<T>(const T*, const T*, T*, int64_t, int64_t, int64_t);  \
  template void add_scalar<T>(const T*, const T*, T*, int64_t);                      \
  template void scale_channels_scalar<T>(const T*, const T*, T*, int64_t, int64_t,   \
                                         int64_t);

MFN_INSTANTIATE(float)
MFN_INSTANTIATE(double)

#undef MFN_INSTANTIATE

}  // namespace mfn::kernels
