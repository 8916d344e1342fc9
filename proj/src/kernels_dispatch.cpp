// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string>

#include "mfn/kernels.hpp"
#include "mfn/tensor.hpp"

namespace mfn::kernels {
namespace {

KernelTable scalar_table() {
  return KernelTable{
      &conv2d_scalar<float>, &affine_channels_scalar<float>, &prelu_scalar<float>,
      &add_scalar<float>,    &scale_channels_scalar<float>,
  };
}

#ifdef MFN_HAVE_AVX2_BUILD
KernelTable avx2_table() {
  return KernelTable{
      &conv2d_avx2, &affine_channels_avx2, &prelu_avx2, &add_avx2, &scale_channels_avx2,
  };
}
#endif

struct State {
  Backend backend;
  KernelTable table;
};

Backend backend_from_env() {
  const char* env = std::getenv("MFN_SIMD");
  if (env == nullptr) return Backend::kAuto;
  const std::string v(env);
  if (v == "auto" || v.empty()) return Backend::kAuto;
  if (v == "scalar") return Backend::kScalar;
  if (v == "avx2") return Backend::kAvx2;
  throw ConfigError("MFN_SIMD: unknown backend '" + v + "' (expected auto, scalar, or avx2)");
}

State resolve(Backend requested) {
  if (requested == Backend::kAuto) {
    requested = cpu_has_avx2() ? Backend::kAvx2 : Backend::kScalar;
  }
  if (requested == Backend::kAvx2) {
#ifdef MFN_HAVE_AVX2_BUILD
    if (!cpu_has_avx2()) throw ConfigError("simd: avx2 requested but the CPU lacks it");
    return State{Backend::kAvx2, avx2_table()};
#else
    throw ConfigError("simd: avx2 requested but this build has no avx2 kernels");
#endif
  }
  return State{Backend::kScalar, scalar_table()};
}

State& state() {
  static State s = resolve(backend_from_env());
  return s;
}

}  // namespace

bool cpu_has_avx2() {
#ifdef MFN_HAVE_AVX2_BUILD
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

void set_backend(Backend b) { state() = resolve(b); }

Backend active_backend() { return state().backend; }

const char* backend_name() {
  return state().backend == Backend::kAvx2 ? "avx2" : "scalar";
}

const KernelTable& table() { return state().table; }

}  // namespace mfn::kernels
