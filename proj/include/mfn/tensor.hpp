// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFN_TENSOR_HPP_
#define MFN_TENSOR_HPP_

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfn {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension/shape violations. Messages name the offending dimension.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed files, bad magic bytes, truncated payloads, unwritable paths.
struct IoError : Error {
  using Error::Error;
};

// Invalid network configurations and CLI arguments.
struct ConfigError : Error {
  using Error::Error;
};

// Dense 4-d shape, (batch, channels, height, width). Rank-4 everywhere;
// vectors ride as (n, d, 1, 1).
struct Shape4 {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  int64_t numel() const { return n * c * h * w; }

  bool operator==(const Shape4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  bool operator!=(const Shape4& o) const { return !(*this == o); }

  std::string str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
  }
};

// Row-major dense tensor: index (n, c, h, w) flattens to
// ((n*C + c)*H + h)*W + w. Owns its storage.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape4 shape) : shape_(shape) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
      throw ShapeError("tensor: negative dimension in " + shape.str());
    }
    data_.assign(static_cast<size_t>(shape.numel()), T(0));
  }

  Tensor(Shape4 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != shape.numel()) {
      throw ShapeError("tensor: payload of " + std::to_string(data_.size()) +
                       " elements does not fill shape " + shape.str());
    }
  }

  static Tensor full(Shape4 shape, T value) {
    Tensor t(shape);
    for (auto& v : t.data_) v = value;
    return t;
  }

  const Shape4& shape() const { return shape_; }
  int64_t numel() const { return shape_.numel(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * shape_.c + c) * shape_.h + h) * shape_.w + w)];
  }
  const T& at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * shape_.c + c) * shape_.h + h) * shape_.w + w)];
  }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  void fill(T value) {
    for (auto& v : data_) v = value;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (int64_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(data_[static_cast<size_t>(i)]);
    return out;
  }

 private:
  Shape4 shape_{};
  std::vector<T> data_;
};

namespace detail {

// NaN/Inf tripwire on op outputs. Compiled in for test targets only
// (MFN_FINITE_CHECKS); release builds skip the scan.
template <typename T>
inline void check_finite(const Tensor<T>& t, const char* op) {
#ifdef MFN_FINITE_CHECKS
  for (int64_t i = 0; i < t.numel(); ++i) {
    if (!std::isfinite(static_cast<double>(t[static_cast<size_t>(i)]))) {
      throw Error(std::string(op) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
#else
  (void)t;
  (void)op;
#endif
}

}  // namespace detail
}  // namespace mfn

#endif  // MFN_TENSOR_HPP_
