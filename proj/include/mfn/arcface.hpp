// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Additive angular margin softmax head. Logits are scaled cosines between
// L2-normalized embeddings and L2-normalized class weights; the target
// class cosine is replaced by cos(theta + margin) before scaling. The
// backward pass is analytic and recorded on the tape as one step.

#ifndef MFN_ARCFACE_HPP_
#define MFN_ARCFACE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mfn/autodiff.hpp"
#include "mfn/params.hpp"
#include "mfn/random.hpp"
#include "mfn/tensor.hpp"

namespace mfn {

// -log softmax(z)[target], accumulated in double. `probs` (length n) gets
// the softmax row; pass nullptr to skip it.
template <typename T>
double softmax_cross_entropy_row(const T* z, int64_t n, int64_t target, double* probs) {
  double zmax = static_cast<double>(z[0]);
  for (int64_t j = 1; j < n; ++j) zmax = std::max(zmax, static_cast<double>(z[j]));
  double denom = 0.0;
  for (int64_t j = 0; j < n; ++j) denom += std::exp(static_cast<double>(z[j]) - zmax);
  if (probs != nullptr) {
    for (int64_t j = 0; j < n; ++j) {
      probs[j] = std::exp(static_cast<double>(z[j]) - zmax) / denom;
    }
  }
  return std::log(denom) - (static_cast<double>(z[target]) - zmax);
}

template <typename T>
struct ArcFaceResult {
  double loss = 0.0;               // mean cross-entropy over the batch
  Var<T> loss_var;                 // scalar; backward() entry point when tracked
  int64_t correct = 0;             // margin-free argmax == target
  std::vector<int64_t> predicted;  // margin-free argmax, ties -> lowest index
  std::vector<T> cosines;          // (n, classes), clamped, no margin
  std::vector<T> logits;           // (n, classes), margin applied, scaled
};

// Cosine clamp keeps acos and the easy-case derivative finite.
inline constexpr double kArcCosineClamp = 1.0 - 1e-7;
// Exact zero norms raise; positive norms below this floor are clamped to it.
inline constexpr double kArcNormFloor = 1e-12;

template <typename T>
class ArcFaceHead {
 public:
  static constexpr T kDefaultMargin = T(0.5);
  static constexpr T kDefaultScale = T(64);

  // Registers "arcface.weight" (classes, dim, 1, 1), init normal(0, 0.01).
  ArcFaceHead(ParamStore<T>& store, int64_t num_classes, int64_t embed_dim, Rng& rng,
              T margin = kDefaultMargin, T scale = kDefaultScale)
      : classes_(num_classes), dim_(embed_dim), margin_(margin), scale_(scale) {
    if (num_classes < 2) {
      throw ConfigError("arcface: need at least 2 classes, got " + std::to_string(num_classes));
    }
    if (embed_dim < 1) {
      throw ConfigError("arcface: embedding dim must be positive, got " +
                        std::to_string(embed_dim));
    }
    if (!(margin >= T(0)) || static_cast<double>(margin) >= 3.141592653589793) {
      throw ConfigError("arcface: margin must lie in [0, pi)");
    }
    if (!(scale > T(0))) throw ConfigError("arcface: scale must be positive");
    Tensor<T> w(Shape4{num_classes, embed_dim, 1, 1});
    for (auto& v : w.storage()) v = static_cast<T>(rng.normal(0.0, 0.01));
    weight_ = store.add("arcface.weight", std::move(w), true);
  }

  const Var<T>& weight() const { return weight_; }
  int64_t classes() const { return classes_; }
  T margin() const { return margin_; }
  T scale() const { return scale_; }

  // Embeddings (n, dim, 1, 1). Records one analytic backward step on `tape`
  // filling emb.grad and weight grads with d(mean CE)/d(input).
  ArcFaceResult<T> forward(Tape<T>* tape, const Var<T>& emb,
                           const std::vector<int64_t>& targets) const {
    const Shape4& es = emb.shape();
    if (es.c != dim_ || es.h != 1 || es.w != 1) {
      throw ShapeError("arcface: embeddings must be (n, " + std::to_string(dim_) +
                       ", 1, 1), got " + es.str());
    }
    const int64_t n = es.n;
    if (n < 1) throw ShapeError("arcface: empty batch");
    if (static_cast<int64_t>(targets.size()) != n) {
      throw ShapeError("arcface: " + std::to_string(targets.size()) + " targets for batch of " +
                       std::to_string(n));
    }
    for (int64_t i = 0; i < n; ++i) {
      if (targets[i] < 0 || targets[i] >= classes_) {
        throw ConfigError("arcface: target " + std::to_string(targets[i]) +
                          " outside [0, " + std::to_string(classes_) + ")");
      }
    }

    const T* x = emb.value->data();
    const T* w = weight_.value->data();
    const int64_t d = dim_;
    const int64_t k = classes_;
    const double cos_m = std::cos(static_cast<double>(margin_));
    const double sin_m = std::sin(static_cast<double>(margin_));
    // Below this cosine, cos(theta + m) is past the minimum of cos; fall
    // back to the linear form cos(theta) - m*sin(m).
    const double easy_floor = std::cos(3.141592653589793 - static_cast<double>(margin_));

    // L2-normalize rows; an exactly zero row has no direction to classify.
    auto normalize_rows = [d](const T* src, int64_t rows, std::vector<double>& out,
                              std::vector<double>& inv_norm, const char* what) {
      out.resize(static_cast<size_t>(rows * d));
      inv_norm.resize(static_cast<size_t>(rows));
      for (int64_t r = 0; r < rows; ++r) {
        double ssq = 0.0;
        for (int64_t j = 0; j < d; ++j) {
          const double v = static_cast<double>(src[r * d + j]);
          ssq += v * v;
        }
        if (ssq == 0.0) {
          throw Error("arcface: zero-norm " + std::string(what) + " row " + std::to_string(r));
        }
        const double norm = std::max(std::sqrt(ssq), kArcNormFloor);
        inv_norm[static_cast<size_t>(r)] = 1.0 / norm;
        for (int64_t j = 0; j < d; ++j) {
          out[static_cast<size_t>(r * d + j)] = static_cast<double>(src[r * d + j]) / norm;
        }
      }
    };
    auto xn = std::make_shared<std::vector<double>>();
    auto wn = std::make_shared<std::vector<double>>();
    auto inv_rx = std::make_shared<std::vector<double>>();
    auto inv_rw = std::make_shared<std::vector<double>>();
    normalize_rows(x, n, *xn, *inv_rx, "embedding");
    normalize_rows(w, k, *wn, *inv_rw, "weight");

    auto cosines = std::make_shared<std::vector<double>>(static_cast<size_t>(n * k));
    auto easy = std::make_shared<std::vector<char>>(static_cast<size_t>(n), char(1));
    ArcFaceResult<T> res;
    res.predicted.resize(static_cast<size_t>(n));
    res.cosines.resize(static_cast<size_t>(n * k));
    res.logits.resize(static_cast<size_t>(n * k));
    auto probs = std::make_shared<std::vector<double>>(static_cast<size_t>(n * k));
    std::vector<double> row_logits(static_cast<size_t>(k));
    double loss_sum = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      int64_t best = 0;
      for (int64_t j = 0; j < k; ++j) {
        double c = 0.0;
        for (int64_t q = 0; q < d; ++q) {
          c += (*xn)[static_cast<size_t>(i * d + q)] * (*wn)[static_cast<size_t>(j * d + q)];
        }
        c = std::clamp(c, -kArcCosineClamp, kArcCosineClamp);
        (*cosines)[static_cast<size_t>(i * k + j)] = c;
        res.cosines[static_cast<size_t>(i * k + j)] = static_cast<T>(c);
        if (c > (*cosines)[static_cast<size_t>(i * k + best)]) best = j;
        row_logits[static_cast<size_t>(j)] = static_cast<double>(scale_) * c;
      }
      const int64_t t = targets[static_cast<size_t>(i)];
      const double ct = (*cosines)[static_cast<size_t>(i * k + t)];
      double phi;
      if (ct > easy_floor) {
        phi = ct * cos_m - std::sqrt(1.0 - ct * ct) * sin_m;
      } else {
        phi = ct - static_cast<double>(margin_) * sin_m;
        (*easy)[static_cast<size_t>(i)] = 0;
      }
      row_logits[static_cast<size_t>(t)] = static_cast<double>(scale_) * phi;
      for (int64_t j = 0; j < k; ++j) {
        res.logits[static_cast<size_t>(i * k + j)] = static_cast<T>(row_logits[static_cast<size_t>(j)]);
      }
      loss_sum += softmax_cross_entropy_row(row_logits.data(), k, t,
                                            probs->data() + i * k);
      res.predicted[static_cast<size_t>(i)] = best;
      if (best == t) ++res.correct;
    }
    res.loss = loss_sum / static_cast<double>(n);

    const bool track = ad::detail::want_grad(tape, {&emb, &weight_});
    Tensor<T> loss_t(Shape4{1, 1, 1, 1});
    loss_t[0] = static_cast<T>(res.loss);
    Var<T> loss = make_var(std::move(loss_t), track);
    if (track) {
      auto eg = emb.grad;
      auto wg = weight_.grad;
      auto lg = loss.grad;
      auto tgt = std::make_shared<std::vector<int64_t>>(targets);
      const double s = static_cast<double>(scale_);
      tape->record([eg, wg, lg, xn, wn, inv_rx, inv_rw, cosines, easy, probs, tgt, n, k, d, s,
                    cos_m, sin_m]() {
        const double upstream = static_cast<double>((*lg)[0]);
        std::vector<double> dxn(static_cast<size_t>(n * d), 0.0);
        std::vector<double> dwn(static_cast<size_t>(k * d), 0.0);
        for (int64_t i = 0; i < n; ++i) {
          const int64_t t = (*tgt)[static_cast<size_t>(i)];
          for (int64_t j = 0; j < k; ++j) {
            const double p = (*probs)[static_cast<size_t>(i * k + j)];
            double dz = (p - (j == t ? 1.0 : 0.0)) / static_cast<double>(n) * upstream;
            double dc = s * dz;
            if (j == t) {
              const double c = (*cosines)[static_cast<size_t>(i * k + t)];
              // d phi / d cos: easy case differentiates cos(theta + m),
              // hard case is linear in cos(theta).
              const double dphi = (*easy)[static_cast<size_t>(i)]
                                      ? cos_m + c * sin_m / std::sqrt(1.0 - c * c)
                                      : 1.0;
              dc *= dphi;
            }
            if (dc == 0.0) continue;
            for (int64_t q = 0; q < d; ++q) {
              dxn[static_cast<size_t>(i * d + q)] += dc * (*wn)[static_cast<size_t>(j * d + q)];
              dwn[static_cast<size_t>(j * d + q)] += dc * (*xn)[static_cast<size_t>(i * d + q)];
            }
          }
        }
        // Through v -> v/||v||: dv = (dvn - (dvn . vn) vn) / ||v||.
        auto through_norm = [d](std::vector<double>& dvn, const std::vector<double>& vn,
                                const std::vector<double>& inv_norm, int64_t rows) {
          for (int64_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (int64_t j = 0; j < d; ++j) {
              dot += dvn[static_cast<size_t>(r * d + j)] * vn[static_cast<size_t>(r * d + j)];
            }
            for (int64_t j = 0; j < d; ++j) {
              const size_t idx = static_cast<size_t>(r * d + j);
              dvn[idx] = (dvn[idx] - dot * vn[idx]) * inv_norm[static_cast<size_t>(r)];
            }
          }
        };
        through_norm(dxn, *xn, *inv_rx, n);
        through_norm(dwn, *wn, *inv_rw, k);
        if (eg) {
          for (int64_t i = 0; i < n * d; ++i) {
            (*eg)[i] += static_cast<T>(dxn[static_cast<size_t>(i)]);
          }
        }
        if (wg) {
          for (int64_t j = 0; j < k * d; ++j) {
            (*wg)[j] += static_cast<T>(dwn[static_cast<size_t>(j)]);
          }
        }
      });
    }
    res.loss_var = loss;
    return res;
  }

 private:
  int64_t classes_;
  int64_t dim_;
  T margin_;
  T scale_;
  Var<T> weight_;
};

}  // namespace mfn

#endif  // MFN_ARCFACE_HPP_
