// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode autodiff over the primitive ops. Tracked ops run the forward
// primitive, then push a closure onto the tape; backward() replays the
// closures in reverse. Gradients accumulate (+=), so a value consumed twice
// receives both contributions.

#ifndef MFN_AUTODIFF_HPP_
#define MFN_AUTODIFF_HPP_

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "mfn/ops.hpp"
#include "mfn/tensor.hpp"

namespace mfn {

// A value in the graph. `grad` is non-null iff the value participates in
// differentiation. Copies share storage.
template <typename T>
struct Var {
  std::shared_ptr<Tensor<T>> value;
  std::shared_ptr<Tensor<T>> grad;

  Var() = default;
  bool tracked() const { return grad != nullptr; }
  const Shape4& shape() const { return value->shape(); }
};

template <typename T>
Var<T> make_var(Tensor<T> value, bool track) {
  Var<T> v;
  v.value = std::make_shared<Tensor<T>>(std::move(value));
  if (track) v.grad = std::make_shared<Tensor<T>>(v.value->shape());
  return v;
}

template <typename T>
class Tape {
 public:
  void record(std::function<void()> fn) { steps_.push_back(std::move(fn)); }

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. Consumes the
  // tape: a second call without new recordings throws.
  void backward(Var<T>& loss) {
    if (consumed_) throw Error("tape: backward() called twice without re-recording");
    if (!loss.tracked()) throw Error("tape: backward() on an untracked value");
    if (loss.value->numel() != 1) {
      throw ShapeError("tape: backward() needs a scalar loss, got shape " +
                       loss.shape().str());
    }
    (*loss.grad)[0] = T(1);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
    steps_.clear();
    consumed_ = true;
  }

  void reset() {
    steps_.clear();
    consumed_ = false;
  }

  size_t size() const { return steps_.size(); }

 private:
  std::vector<std::function<void()>> steps_;
  bool consumed_ = false;
};

namespace ad {

namespace detail {

template <typename T>
bool want_grad(Tape<T>* tape, std::initializer_list<const Var<T>*> ins) {
  if (!tape) return false;
  for (const Var<T>* v : ins) {
    if (v && v->tracked()) return true;
  }
  return false;
}

// dL/dx for a convolution, gather form: every input cell sums the output
// cells its value fed. Deterministic loop order (oc, ky, kx ascending).
template <typename T>
void conv2d_grad_input(const Tensor<T>& dy, const Tensor<T>& w, Tensor<T>& dx,
                       const kernels::ConvGeom& g) {
  const int64_t icg = g.in_c / g.groups;
  const int64_t ocg = g.out_c / g.groups;
  const int64_t ktap = g.kh * g.kw;
  for (int64_t n = 0; n < g.n; ++n) {
    for (int64_t gr = 0; gr < g.groups; ++gr) {
      for (int64_t ic = 0; ic < icg; ++ic) {
        T* dxp = dx.data() + ((n * g.in_c + gr * icg + ic) * g.in_h) * g.in_w;
        for (int64_t iy = 0; iy < g.in_h; ++iy) {
          for (int64_t ix = 0; ix < g.in_w; ++ix) {
            T acc = T(0);
            for (int64_t ol = 0; ol < ocg; ++ol) {
              const int64_t oc = gr * ocg + ol;
              const T* dyp = dy.data() + ((n * g.out_c + oc) * g.out_h) * g.out_w;
              const T* wp = w.data() + (oc * icg + ic) * ktap;
              for (int64_t ky = 0; ky < g.kh; ++ky) {
                const int64_t ty = iy + g.pad - ky;
                if (ty < 0 || ty % g.stride != 0) continue;
                const int64_t oy = ty / g.stride;
                if (oy >= g.out_h) continue;
                for (int64_t kx = 0; kx < g.kw; ++kx) {
                  const int64_t tx = ix + g.pad - kx;
                  if (tx < 0 || tx % g.stride != 0) continue;
                  const int64_t ox = tx / g.stride;
                  if (ox >= g.out_w) continue;
                  acc += dyp[oy * g.out_w + ox] * wp[ky * g.kw + kx];
                }
              }
            }
            dxp[iy * g.in_w + ix] += acc;
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_grad_weight(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dw,
                        const kernels::ConvGeom& g) {
  const int64_t icg = g.in_c / g.groups;
  const int64_t ocg = g.out_c / g.groups;
  const int64_t ktap = g.kh * g.kw;
  for (int64_t oc = 0; oc < g.out_c; ++oc) {
    const int64_t gr = oc / ocg;
    for (int64_t ic = 0; ic < icg; ++ic) {
      for (int64_t ky = 0; ky < g.kh; ++ky) {
        for (int64_t kx = 0; kx < g.kw; ++kx) {
          T acc = T(0);
          for (int64_t n = 0; n < g.n; ++n) {
            const T* xp = x.data() + ((n * g.in_c + gr * icg + ic) * g.in_h) * g.in_w;
            const T* dyp = dy.data() + ((n * g.out_c + oc) * g.out_h) * g.out_w;
            for (int64_t oy = 0; oy < g.out_h; ++oy) {
              const int64_t iy = oy * g.stride + ky - g.pad;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int64_t ox = 0; ox < g.out_w; ++ox) {
                const int64_t ix = ox * g.stride + kx - g.pad;
                if (ix < 0 || ix >= g.in_w) continue;
                acc += xp[iy * g.in_w + ix] * dyp[oy * g.out_w + ox];
              }
            }
          }
          dw.data()[(oc * icg + ic) * ktap + ky * g.kw + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_grad_bias(const Tensor<T>& dy, Tensor<T>& db, const kernels::ConvGeom& g) {
  const int64_t ohw = g.out_h * g.out_w;
  for (int64_t oc = 0; oc < g.out_c; ++oc) {
    T acc = T(0);
    for (int64_t n = 0; n < g.n; ++n) {
      const T* dyp = dy.data() + (n * g.out_c + oc) * ohw;
      for (int64_t k = 0; k < ohw; ++k) acc += dyp[k];
    }
    db[static_cast<size_t>(oc)] += acc;
  }
}

}  // namespace detail

template <typename T>
Var<T> conv2d(Tape<T>* tape, const Var<T>& x, const Var<T>& w, const Var<T>* bias,
              const ConvParams& p) {
  const Tensor<T>* bt = bias ? bias->value.get() : nullptr;
  Var<T> y = make_var(mfn::conv2d(*x.value, *w.value, bt, p),
                      detail::want_grad(tape, {&x, &w, bias}));
  if (y.tracked()) {
    const kernels::ConvGeom g = conv2d_geometry(*x.value, *w.value, bt, p);
    auto xg = x.grad;
    auto wg = w.grad;
    auto bg = bias ? bias->grad : nullptr;
    auto xv = x.value;
    auto wv = w.value;
    auto yg = y.grad;
    tape->record([=]() {
      if (xg) detail::conv2d_grad_input(*yg, *wv, *xg, g);
      if (wg) detail::conv2d_grad_weight(*xv, *yg, *wg, g);
      if (bg) detail::conv2d_grad_bias(*yg, *bg, g);
    });
  }
  return y;
}

// Training-mode batch norm. Normalizes with biased batch statistics and, when
// running stats are supplied, folds in the unbiased variance.
template <typename T>
Var<T> batch_norm_train(Tape<T>* tape, const Var<T>& x, const Var<T>& gamma,
                        const Var<T>& beta, Tensor<T>* running_mean,
                        Tensor<T>* running_var, T eps, T momentum) {
  BatchNormTrainResult<T> r = mfn::batch_norm_train(*x.value, *gamma.value, *beta.value,
                                                    running_mean, running_var, eps, momentum);
  Var<T> y = make_var(std::move(r.y), detail::want_grad(tape, {&x, &gamma, &beta}));
  if (y.tracked()) {
    auto mean = std::make_shared<Tensor<T>>(std::move(r.mean));
    auto invstd = std::make_shared<Tensor<T>>(std::move(r.invstd));
    auto xv = x.value;
    auto gv = gamma.value;
    auto xg = x.grad;
    auto gg = gamma.grad;
    auto bg = beta.grad;
    auto yg = y.grad;
    tape->record([=]() {
      const Shape4& s = xv->shape();
      const int64_t hw = s.h * s.w;
      const int64_t m = s.n * hw;
      for (int64_t ch = 0; ch < s.c; ++ch) {
        const T mu = (*mean)[static_cast<size_t>(ch)];
        const T is = (*invstd)[static_cast<size_t>(ch)];
        const T ga = (*gv)[static_cast<size_t>(ch)];
        T sum_dy = T(0), sum_dy_xhat = T(0);
        for (int64_t n = 0; n < s.n; ++n) {
          const T* xp = xv->data() + (n * s.c + ch) * hw;
          const T* dyp = yg->data() + (n * s.c + ch) * hw;
          for (int64_t k = 0; k < hw; ++k) {
            sum_dy += dyp[k];
            sum_dy_xhat += dyp[k] * ((xp[k] - mu) * is);
          }
        }
        if (gg) (*gg)[static_cast<size_t>(ch)] += sum_dy_xhat;
        if (bg) (*bg)[static_cast<size_t>(ch)] += sum_dy;
        if (xg) {
          const T coef = ga * is / static_cast<T>(m);
          for (int64_t n = 0; n < s.n; ++n) {
            const T* xp = xv->data() + (n * s.c + ch) * hw;
            const T* dyp = yg->data() + (n * s.c + ch) * hw;
            T* dxp = xg->data() + (n * s.c + ch) * hw;
            for (int64_t k = 0; k < hw; ++k) {
              const T xhat = (xp[k] - mu) * is;
              dxp[k] += coef * (static_cast<T>(m) * dyp[k] - sum_dy - xhat * sum_dy_xhat);
            }
          }
        }
      }
    });
  }
  return y;
}

// Inference-mode batch norm with fixed statistics; differentiable in x, gamma,
// beta (the statistics are constants).
template <typename T>
Var<T> batch_norm_infer(Tape<T>* tape, const Var<T>& x, const Var<T>& gamma,
                        const Var<T>& beta, const Tensor<T>& mean, const Tensor<T>& var,
                        T eps) {
  Var<T> y = make_var(mfn::batch_norm_infer(*x.value, *gamma.value, *beta.value, mean, var, eps),
                      detail::want_grad(tape, {&x, &gamma, &beta}));
  if (y.tracked()) {
    auto mu = std::make_shared<Tensor<T>>(mean);
    auto inv = std::make_shared<Tensor<T>>(var.shape());
    for (int64_t i = 0; i < var.numel(); ++i) {
      (*inv)[static_cast<size_t>(i)] = T(1) / std::sqrt(var[static_cast<size_t>(i)] + eps);
    }
    auto xv = x.value;
    auto gv = gamma.value;
    auto xg = x.grad;
    auto gg = gamma.grad;
    auto bg = beta.grad;
    auto yg = y.grad;
    tape->record([=]() {
      const Shape4& s = xv->shape();
      const int64_t hw = s.h * s.w;
      for (int64_t ch = 0; ch < s.c; ++ch) {
        const T im = (*mu)[static_cast<size_t>(ch)];
        const T is = (*inv)[static_cast<size_t>(ch)];
        const T scale = (*gv)[static_cast<size_t>(ch)] * is;
        T sum_dy = T(0), sum_dy_xhat = T(0);
        for (int64_t n = 0; n < s.n; ++n) {
          const T* xp = xv->data() + (n * s.c + ch) * hw;
          const T* dyp = yg->data() + (n * s.c + ch) * hw;
          T* dxp = xg ? xg->data() + (n * s.c + ch) * hw : nullptr;
          for (int64_t k = 0; k < hw; ++k) {
            sum_dy += dyp[k];
            sum_dy_xhat += dyp[k] * ((xp[k] - im) * is);
            if (dxp) dxp[k] += dyp[k] * scale;
          }
        }
        if (gg) (*gg)[static_cast<size_t>(ch)] += sum_dy_xhat;
        if (bg) (*bg)[static_cast<size_t>(ch)] += sum_dy;
      }
    });
  }
  return y;
}

template <typename T>
Var<T> prelu(Tape<T>* tape, const Var<T>& x, const Var<T>& alpha) {
  Var<T> y = make_var(mfn::prelu(*x.value, *alpha.value), detail::want_grad(tape, {&x, &alpha}));
  if (y.tracked()) {
    auto xv = x.value;
    auto av = alpha.value;
    auto xg = x.grad;
    auto ag = alpha.grad;
    auto yg = y.grad;
    tape->record([=]() {
      const Shape4& s = xv->shape();
      const int64_t hw = s.h * s.w;
      for (int64_t n = 0; n < s.n; ++n) {
        for (int64_t ch = 0; ch < s.c; ++ch) {
          const T a = (*av)[static_cast<size_t>(ch)];
          const T* xp = xv->data() + (n * s.c + ch) * hw;
          const T* dyp = yg->data() + (n * s.c + ch) * hw;
          T* dxp = xg ? xg->data() + (n * s.c + ch) * hw : nullptr;
          T da = T(0);
          for (int64_t k = 0; k < hw; ++k) {
            if (xp[k] >= T(0)) {
              if (dxp) dxp[k] += dyp[k];
            } else {
              if (dxp) dxp[k] += dyp[k] * a;
              da += dyp[k] * xp[k];
            }
          }
          if (ag) (*ag)[static_cast<size_t>(ch)] += da;
        }
      }
    });
  }
  return y;
}

template <typename T>
Var<T> swish(Tape<T>* tape, const Var<T>& x) {
  Var<T> y = make_var(mfn::swish(*x.value), detail::want_grad(tape, {&x}));
  if (y.tracked()) {
    auto xv = x.value;
    auto xg = x.grad;
    auto yg = y.grad;
    tape->record([=]() {
      for (int64_t i = 0; i < xv->numel(); ++i) {
        const T v = (*xv)[static_cast<size_t>(i)];
        const T s = sigmoid_value(v);
        (*xg)[static_cast<size_t>(i)] +=
            (*yg)[static_cast<size_t>(i)] * (s + v * s * (T(1) - s));
      }
    });
  }
  return y;
}

template <typename T>
Var<T> sigmoid(Tape<T>* tape, const Var<T>& x) {
  Var<T> y = make_var(mfn::sigmoid(*x.value), detail::want_grad(tape, {&x}));
  if (y.tracked()) {
    auto yv = y.value;
    auto xg = x.grad;
    auto yg = y.grad;
    tape->record([=]() {
      for (int64_t i = 0; i < yv->numel(); ++i) {
        const T s = (*yv)[static_cast<size_t>(i)];
        (*xg)[static_cast<size_t>(i)] += (*yg)[static_cast<size_t>(i)] * s * (T(1) - s);
      }
    });
  }
  return y;
}

template <typename T>
Var<T> global_avg_pool(Tape<T>* tape, const Var<T>& x) {
  Var<T> y = make_var(mfn::global_avg_pool(*x.value), detail::want_grad(tape, {&x}));
  if (y.tracked()) {
    auto xg = x.grad;
    auto yg = y.grad;
    const Shape4 s = x.shape();
    tape->record([=]() {
      const int64_t hw = s.h * s.w;
      const T scale = T(1) / static_cast<T>(hw);
      for (int64_t n = 0; n < s.n; ++n) {
        for (int64_t ch = 0; ch < s.c; ++ch) {
          const T g = yg->at(n, ch, 0, 0) * scale;
          T* dxp = xg->data() + (n * s.c + ch) * hw;
          for (int64_t k = 0; k < hw; ++k) dxp[k] += g;
        }
      }
    });
  }
  return y;
}

template <typename T>
Var<T> add(Tape<T>* tape, const Var<T>& a, const Var<T>& b) {
  Var<T> y = make_var(mfn::add(*a.value, *b.value), detail::want_grad(tape, {&a, &b}));
  if (y.tracked()) {
    auto ag = a.grad;
    auto bg = b.grad;
    auto yg = y.grad;
    tape->record([=]() {
      for (int64_t i = 0; i < yg->numel(); ++i) {
        if (ag) (*ag)[static_cast<size_t>(i)] += (*yg)[static_cast<size_t>(i)];
        if (bg) (*bg)[static_cast<size_t>(i)] += (*yg)[static_cast<size_t>(i)];
      }
    });
  }
  return y;
}

template <typename T>
Var<T> scale_channels(Tape<T>* tape, const Var<T>& x, const Var<T>& s) {
  Var<T> y = make_var(mfn::scale_channels(*x.value, *s.value), detail::want_grad(tape, {&x, &s}));
  if (y.tracked()) {
    auto xv = x.value;
    auto sv = s.value;
    auto xg = x.grad;
    auto sg = s.grad;
    auto yg = y.grad;
    tape->record([=]() {
      const Shape4& sh = xv->shape();
      const int64_t hw = sh.h * sh.w;
      for (int64_t n = 0; n < sh.n; ++n) {
        for (int64_t ch = 0; ch < sh.c; ++ch) {
          const T g = (*sv)[static_cast<size_t>(n * sh.c + ch)];
          const T* xp = xv->data() + (n * sh.c + ch) * hw;
          const T* dyp = yg->data() + (n * sh.c + ch) * hw;
          T* dxp = xg ? xg->data() + (n * sh.c + ch) * hw : nullptr;
          T ds = T(0);
          for (int64_t k = 0; k < hw; ++k) {
            if (dxp) dxp[k] += dyp[k] * g;
            ds += dyp[k] * xp[k];
          }
          if (sg) (*sg)[static_cast<size_t>(n * sh.c + ch)] += ds;
        }
      }
    });
  }
  return y;
}

template <typename T>
Var<T> channel_shuffle(Tape<T>* tape, const Var<T>& x, int64_t groups) {
  Var<T> y = make_var(mfn::channel_shuffle(*x.value, groups), detail::want_grad(tape, {&x}));
  if (y.tracked()) {
    auto xg = x.grad;
    auto yg = y.grad;
    const Shape4 s = x.shape();
    tape->record([=]() {
      const int64_t hw = s.h * s.w;
      for (int64_t n = 0; n < s.n; ++n) {
        for (int64_t oc = 0; oc < s.c; ++oc) {
          const int64_t ic = shuffle_source_channel(oc, s.c, groups);
          const T* dyp = yg->data() + (n * s.c + oc) * hw;
          T* dxp = xg->data() + (n * s.c + ic) * hw;
          for (int64_t k = 0; k < hw; ++k) dxp[k] += dyp[k];
        }
      }
    });
  }
  return y;
}

template <typename T>
Var<T> channel_slice(Tape<T>* tape, const Var<T>& x, int64_t c0, int64_t c1) {
  Var<T> y = make_var(mfn::channel_slice(*x.value, c0, c1), detail::want_grad(tape, {&x}));
  if (y.tracked()) {
    auto xg = x.grad;
    auto yg = y.grad;
    const Shape4 s = x.shape();
    tape->record([=]() {
      const int64_t hw = s.h * s.w;
      const int64_t span = c1 - c0;
      for (int64_t n = 0; n < s.n; ++n) {
        for (int64_t ch = 0; ch < span; ++ch) {
          const T* dyp = yg->data() + (n * span + ch) * hw;
          T* dxp = xg->data() + (n * s.c + c0 + ch) * hw;
          for (int64_t k = 0; k < hw; ++k) dxp[k] += dyp[k];
        }
      }
    });
  }
  return y;
}

template <typename T>
Var<T> channel_concat(Tape<T>* tape, const std::vector<Var<T>>& parts) {
  std::vector<Tensor<T>> values;
  values.reserve(parts.size());
  bool track = false;
  for (const auto& p : parts) {
    values.push_back(*p.value);
    track = track || (tape && p.tracked());
  }
  Var<T> y = make_var(mfn::channel_concat(values), track);
  if (y.tracked()) {
    std::vector<std::shared_ptr<Tensor<T>>> grads;
    std::vector<int64_t> widths;
    for (const auto& p : parts) {
      grads.push_back(p.grad);
      widths.push_back(p.shape().c);
    }
    auto yg = y.grad;
    const Shape4 s = y.shape();
    tape->record([=]() {
      const int64_t hw = s.h * s.w;
      for (int64_t n = 0; n < s.n; ++n) {
        int64_t base = 0;
        for (size_t pi = 0; pi < grads.size(); ++pi) {
          const int64_t pc = widths[pi];
          if (grads[pi]) {
            for (int64_t ch = 0; ch < pc; ++ch) {
              const T* dyp = yg->data() + (n * s.c + base + ch) * hw;
              T* dxp = grads[pi]->data() + (n * pc + ch) * hw;
              for (int64_t k = 0; k < hw; ++k) dxp[k] += dyp[k];
            }
          }
          base += pc;
        }
      }
    });
  }
  return y;
}

}  // namespace ad
}  // namespace mfn

#endif  // MFN_AUTODIFF_HPP_
