// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent naive-loop references for the test suite. Everything here is
// written from the operation definitions, not from the engine's kernels:
// different loop structure, double accumulation, no shared helpers. The
// instrumented variants count scalar multiplies and adds one by one.

#ifndef MFN_TESTS_NAIVE_REF_HPP_
#define MFN_TESTS_NAIVE_REF_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mfn/tensor.hpp"

namespace naive {

struct OpCount {
  int64_t muls = 0;
  int64_t adds = 0;
};

// Gather-style convolution: for each output element, walk the kernel window
// over the (possibly grouped) input channels. Accumulates in double.
// counts, when given, gets one mul per multiply and one add per scalar add,
// counting the bias load as the accumulator's initial add.
template <typename T>
mfn::Tensor<T> conv2d(const mfn::Tensor<T>& x, const mfn::Tensor<T>& w, const mfn::Tensor<T>* bias,
                      int64_t stride, int64_t pad, int64_t groups, OpCount* counts = nullptr) {
  const mfn::Shape4& xs = x.shape();
  const mfn::Shape4& ws = w.shape();
  const int64_t in_c = xs.c, out_c = ws.n, kh = ws.h, kw = ws.w;
  const int64_t icg = in_c / groups, ocg = out_c / groups;
  const int64_t oh = (xs.h + 2 * pad - kh) / stride + 1;
  const int64_t ow = (xs.w + 2 * pad - kw) / stride + 1;
  mfn::Tensor<T> y(mfn::Shape4{xs.n, out_c, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n) {
    for (int64_t oc = 0; oc < out_c; ++oc) {
      const int64_t g = oc / ocg;
      for (int64_t i = 0; i < oh; ++i) {
        for (int64_t j = 0; j < ow; ++j) {
          double acc = 0.0;
          if (bias) {
            acc = static_cast<double>(bias->data()[oc]);
            if (counts) counts->adds += 1;
          }
          for (int64_t ic = 0; ic < icg; ++ic) {
            for (int64_t ky = 0; ky < kh; ++ky) {
              for (int64_t kx = 0; kx < kw; ++kx) {
                const int64_t yy = i * stride + ky - pad;
                const int64_t xx = j * stride + kx - pad;
                if (yy < 0 || yy >= xs.h || xx < 0 || xx >= xs.w) continue;
                const double xv = static_cast<double>(x.at(n, g * icg + ic, yy, xx));
                const double wv = static_cast<double>(w.at(oc, ic, ky, kx));
                acc += xv * wv;
                if (counts) {
                  counts->muls += 1;
                  counts->adds += 1;
                }
              }
            }
          }
          y.at(n, oc, i, j) = static_cast<T>(acc);
        }
      }
    }
  }
  return y;
}

// Multiply/add counts for a conv layer when no element is skipped by padding
// masks in the cost model's sense: every tap is counted whether or not it
// falls outside (the cost model charges the full kernel). For exact-match
// tests against the cost model, run conv with pad 0 so the instrumented count
// has no masked taps, or use this closed form for the padded case.
inline OpCount conv_full_tap_count(int64_t n, int64_t in_c, int64_t out_c, int64_t kh, int64_t kw,
                                   int64_t oh, int64_t ow, int64_t groups, bool bias) {
  OpCount c;
  c.muls = n * out_c * oh * ow * (in_c / groups) * kh * kw;
  c.adds = c.muls + (bias ? n * out_c * oh * ow : 0);
  return c;
}

template <typename T>
mfn::Tensor<T> batch_norm_infer(const mfn::Tensor<T>& x, const mfn::Tensor<T>& gamma,
                                const mfn::Tensor<T>& beta, const mfn::Tensor<T>& mean,
                                const mfn::Tensor<T>& var, double eps) {
  mfn::Tensor<T> y(x.shape());
  const mfn::Shape4& s = x.shape();
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      const double g = static_cast<double>(gamma.data()[c]);
      const double b = static_cast<double>(beta.data()[c]);
      const double m = static_cast<double>(mean.data()[c]);
      const double v = static_cast<double>(var.data()[c]);
      for (int64_t i = 0; i < s.h; ++i) {
        for (int64_t j = 0; j < s.w; ++j) {
          const double xv = static_cast<double>(x.at(n, c, i, j));
          y.at(n, c, i, j) = static_cast<T>(g * (xv - m) / std::sqrt(v + eps) + b);
        }
      }
    }
  }
  return y;
}

// Batch statistics per channel: biased variance for normalization.
template <typename T>
mfn::Tensor<T> batch_norm_train(const mfn::Tensor<T>& x, const mfn::Tensor<T>& gamma,
                                const mfn::Tensor<T>& beta, double eps,
                                std::vector<double>* out_mean = nullptr,
                                std::vector<double>* out_var_biased = nullptr) {
  const mfn::Shape4& s = x.shape();
  mfn::Tensor<T> y(s);
  const double cnt = static_cast<double>(s.n * s.h * s.w);
  for (int64_t c = 0; c < s.c; ++c) {
    double sum = 0.0;
    for (int64_t n = 0; n < s.n; ++n)
      for (int64_t i = 0; i < s.h; ++i)
        for (int64_t j = 0; j < s.w; ++j) sum += static_cast<double>(x.at(n, c, i, j));
    const double mean = sum / cnt;
    double ssq = 0.0;
    for (int64_t n = 0; n < s.n; ++n)
      for (int64_t i = 0; i < s.h; ++i)
        for (int64_t j = 0; j < s.w; ++j) {
          const double d = static_cast<double>(x.at(n, c, i, j)) - mean;
          ssq += d * d;
        }
    const double var = ssq / cnt;
    if (out_mean) out_mean->push_back(mean);
    if (out_var_biased) out_var_biased->push_back(var);
    const double g = static_cast<double>(gamma.data()[c]);
    const double b = static_cast<double>(beta.data()[c]);
    for (int64_t n = 0; n < s.n; ++n)
      for (int64_t i = 0; i < s.h; ++i)
        for (int64_t j = 0; j < s.w; ++j) {
          const double xv = static_cast<double>(x.at(n, c, i, j));
          y.at(n, c, i, j) = static_cast<T>(g * (xv - mean) / std::sqrt(var + eps) + b);
        }
  }
  return y;
}

template <typename T>
mfn::Tensor<T> prelu(const mfn::Tensor<T>& x, const mfn::Tensor<T>& alpha) {
  const mfn::Shape4& s = x.shape();
  mfn::Tensor<T> y(s);
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t i = 0; i < s.h; ++i)
        for (int64_t j = 0; j < s.w; ++j) {
          const double v = static_cast<double>(x.at(n, c, i, j));
          const double a = static_cast<double>(alpha.data()[c]);
          y.at(n, c, i, j) = static_cast<T>(v >= 0.0 ? v : a * v);
        }
  return y;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

template <typename T>
mfn::Tensor<T> swish(const mfn::Tensor<T>& x) {
  mfn::Tensor<T> y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double v = static_cast<double>(x[static_cast<size_t>(i)]);
    y[static_cast<size_t>(i)] = static_cast<T>(v * sigmoid(v));
  }
  return y;
}

template <typename T>
mfn::Tensor<T> global_avg_pool(const mfn::Tensor<T>& x) {
  const mfn::Shape4& s = x.shape();
  mfn::Tensor<T> y(mfn::Shape4{s.n, s.c, 1, 1});
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c) {
      double sum = 0.0;
      for (int64_t i = 0; i < s.h; ++i)
        for (int64_t j = 0; j < s.w; ++j) sum += static_cast<double>(x.at(n, c, i, j));
      y.at(n, c, 0, 0) = static_cast<T>(sum / static_cast<double>(s.h * s.w));
    }
  return y;
}

// reshape(g, c/g) -> transpose -> flatten, done literally on an index table.
template <typename T>
mfn::Tensor<T> channel_shuffle(const mfn::Tensor<T>& x, int64_t groups) {
  const mfn::Shape4& s = x.shape();
  const int64_t cpg = s.c / groups;
  std::vector<int64_t> order;
  for (int64_t j = 0; j < cpg; ++j)
    for (int64_t g = 0; g < groups; ++g) order.push_back(g * cpg + j);
  mfn::Tensor<T> y(s);
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t oc = 0; oc < s.c; ++oc)
      for (int64_t i = 0; i < s.h; ++i)
        for (int64_t j = 0; j < s.w; ++j)
          y.at(n, oc, i, j) = x.at(n, order[static_cast<size_t>(oc)], i, j);
  return y;
}

// Squeeze-excite, step by step: mean pool, 1x1 reduce + act, 1x1 expand,
// sigmoid, scale. act: 0 = PReLU(alpha), 1 = swish.
template <typename T>
mfn::Tensor<T> squeeze_excite(const mfn::Tensor<T>& x, const mfn::Tensor<T>& w1,
                              const mfn::Tensor<T>& b1, const mfn::Tensor<T>& w2,
                              const mfn::Tensor<T>& b2, int act, const mfn::Tensor<T>* alpha) {
  const mfn::Shape4& s = x.shape();
  const int64_t c = s.c, hidden = w1.shape().n;
  mfn::Tensor<T> y(s);
  for (int64_t n = 0; n < s.n; ++n) {
    std::vector<double> pooled(static_cast<size_t>(c), 0.0);
    for (int64_t ch = 0; ch < c; ++ch) {
      double sum = 0.0;
      for (int64_t i = 0; i < s.h; ++i)
        for (int64_t j = 0; j < s.w; ++j) sum += static_cast<double>(x.at(n, ch, i, j));
      pooled[static_cast<size_t>(ch)] = sum / static_cast<double>(s.h * s.w);
    }
    std::vector<double> mid(static_cast<size_t>(hidden), 0.0);
    for (int64_t h = 0; h < hidden; ++h) {
      double acc = static_cast<double>(b1.data()[h]);
      for (int64_t ch = 0; ch < c; ++ch)
        acc += static_cast<double>(w1.at(h, ch, 0, 0)) * pooled[static_cast<size_t>(ch)];
      if (act == 0) {
        const double a = static_cast<double>(alpha->data()[h]);
        acc = acc >= 0.0 ? acc : a * acc;
      } else {
        acc = acc * sigmoid(acc);
      }
      mid[static_cast<size_t>(h)] = acc;
    }
    for (int64_t ch = 0; ch < c; ++ch) {
      double acc = static_cast<double>(b2.data()[ch]);
      for (int64_t h = 0; h < hidden; ++h)
        acc += static_cast<double>(w2.at(ch, h, 0, 0)) * mid[static_cast<size_t>(h)];
      const double gate = sigmoid(acc);
      for (int64_t i = 0; i < s.h; ++i)
        for (int64_t j = 0; j < s.w; ++j)
          y.at(n, ch, i, j) = static_cast<T>(static_cast<double>(x.at(n, ch, i, j)) * gate);
    }
  }
  return y;
}

template <typename T>
double max_abs_diff(const mfn::Tensor<T>& a, const mfn::Tensor<T>& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[static_cast<size_t>(i)]) -
                             static_cast<double>(b[static_cast<size_t>(i)])));
  }
  return m;
}

// ---- metric protocol oracles (exhaustive, O(n^2) or worse) ----

// Frozen acceptance rule: comparator >=, candidate thresholds are midpoints
// of adjacent distinct impostor scores plus one value just above the largest
// impostor; pick the smallest candidate whose FAR <= target.
struct TarFarOracle {
  double tar = 0.0, far = 0.0, threshold = 0.0;
};
inline TarFarOracle tar_at_far(std::vector<double> genuine, std::vector<double> impostor,
                               double far_target) {
  std::sort(impostor.begin(), impostor.end());
  std::vector<double> uniq(impostor);
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> candidates;
  for (size_t i = 0; i + 1 < uniq.size(); ++i) candidates.push_back((uniq[i] + uniq[i + 1]) / 2.0);
  candidates.push_back(std::nextafter(uniq.back(), std::numeric_limits<double>::infinity()));
  auto frac_ge = [](const std::vector<double>& v, double t) {
    int64_t k = 0;
    for (double s : v) k += s >= t ? 1 : 0;
    return static_cast<double>(k) / static_cast<double>(v.size());
  };
  TarFarOracle r;
  bool found = false;
  for (double t : candidates) {
    if (frac_ge(impostor, t) <= far_target) {
      r.threshold = t;
      found = true;
      break;
    }
  }
  if (!found) r.threshold = candidates.back();
  r.far = frac_ge(impostor, r.threshold);
  r.tar = frac_ge(genuine, r.threshold);
  return r;
}

// Per-fold brute force: every candidate threshold (one below the minimum,
// midpoints of adjacent distinct training scores, one above the maximum)
// scored on the training split; highest accuracy wins, ties to the lowest
// threshold; that threshold is applied to the held-out fold.
struct KfoldOracle {
  double mean = 0.0, stddev = 0.0;
  std::vector<double> fold_accuracy;
  std::vector<double> fold_threshold;
};
inline KfoldOracle kfold_accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                                  const std::vector<int>& folds) {
  const int64_t n = static_cast<int64_t>(scores.size());
  const int num_folds = *std::max_element(folds.begin(), folds.end()) + 1;
  KfoldOracle r;
  for (int f = 0; f < num_folds; ++f) {
    std::vector<double> train;
    for (int64_t i = 0; i < n; ++i)
      if (folds[static_cast<size_t>(i)] != f) train.push_back(scores[static_cast<size_t>(i)]);
    std::sort(train.begin(), train.end());
    train.erase(std::unique(train.begin(), train.end()), train.end());
    std::vector<double> candidates{train.front() - 1.0};
    for (size_t i = 0; i + 1 < train.size(); ++i)
      candidates.push_back((train[i] + train[i + 1]) / 2.0);
    candidates.push_back(train.back() + 1.0);
    auto accuracy_on = [&](double t, bool eval_fold) {
      int64_t hit = 0, total = 0;
      for (int64_t i = 0; i < n; ++i) {
        if ((folds[static_cast<size_t>(i)] == f) != eval_fold) continue;
        ++total;
        const int pred = scores[static_cast<size_t>(i)] >= t ? 1 : 0;
        hit += pred == labels[static_cast<size_t>(i)] ? 1 : 0;
      }
      return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
    };
    double best_t = candidates.front();
    double best_acc = -1.0;
    for (double t : candidates) {
      const double acc = accuracy_on(t, /*eval_fold=*/false);
      if (acc > best_acc) {
        best_acc = acc;
        best_t = t;
      }
    }
    r.fold_threshold.push_back(best_t);
    r.fold_accuracy.push_back(accuracy_on(best_t, /*eval_fold=*/true));
  }
  double sum = 0.0;
  for (double a : r.fold_accuracy) sum += a;
  r.mean = sum / static_cast<double>(num_folds);
  double ssq = 0.0;
  for (double a : r.fold_accuracy) ssq += (a - r.mean) * (a - r.mean);
  r.stddev = std::sqrt(ssq / static_cast<double>(num_folds));
  return r;
}

}  // namespace naive

#endif  // MFN_TESTS_NAIVE_REF_HPP_
