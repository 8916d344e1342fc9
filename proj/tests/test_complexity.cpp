// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// The static cost model: convolution counters proven against instrumented
// reference loops, pinned layer examples, and the frozen per-architecture
// budgets.

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>

#include "mfn/complexity.hpp"
#include "mfn/network.hpp"
#include "mfn/random.hpp"
#include "naive_ref.hpp"

using mfn::LayerCost;
using mfn::NetworkConfig;
using mfn::Rng;
using mfn::Shape4;
using mfn::Tensor;

TEST_CASE("conv MAC and FLOP counters match instrumented reference loops exactly") {
  // Padding-free geometries: every kernel tap executes, so the instrumented
  // multiply/add tallies and the closed-form model must agree to the digit.
  Rng rng(101);
  int checked = 0;
  while (checked < 24) {
    const int64_t groups = 1 + static_cast<int64_t>(rng.uniform() * 3.0);
    const int64_t in_c = groups * (1 + static_cast<int64_t>(rng.uniform() * 4.0));
    const int64_t out_c = groups * (1 + static_cast<int64_t>(rng.uniform() * 4.0));
    const int64_t k = 1 + 2 * static_cast<int64_t>(rng.uniform() * 3.0);
    const int64_t stride = 1 + static_cast<int64_t>(rng.uniform() * 2.0);
    const int64_t h = k + static_cast<int64_t>(rng.uniform() * 8.0);
    const int64_t w = k + static_cast<int64_t>(rng.uniform() * 8.0);
    const bool bias = rng.uniform() < 0.5;
    if (h < k || w < k) continue;

    Tensor<float> x(Shape4{1, in_c, h, w});
    for (int64_t i = 0; i < x.numel(); ++i)
      x[static_cast<size_t>(i)] = static_cast<float>(rng.uniform(-1.0, 1.0));
    Tensor<float> wt(Shape4{out_c, in_c / groups, k, k});
    for (int64_t i = 0; i < wt.numel(); ++i)
      wt[static_cast<size_t>(i)] = static_cast<float>(rng.uniform(-1.0, 1.0));
    Tensor<float> b(Shape4{1, out_c, 1, 1});

    naive::OpCount ops;
    naive::conv2d(x, wt, bias ? &b : nullptr, stride, /*pad=*/0, groups, &ops);

    const LayerCost cost =
        mfn::conv_cost("probe", in_c, out_c, k, groups, bias, stride, /*pad=*/0, h, w);
    CAPTURE(in_c);
    CAPTURE(out_c);
    CAPTURE(k);
    CAPTURE(stride);
    CAPTURE(groups);
    CAPTURE(h);
    CAPTURE(w);
    CAPTURE(bias);
    CHECK(cost.macs == ops.muls);
    CHECK(cost.flops == ops.muls + ops.adds);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("padded convolutions charge the full kernel footprint") {
  // With padding the executed loops skip masked taps; the model deliberately
  // charges every tap. The closed form pins that convention.
  const LayerCost cost = mfn::conv_cost("padded", 8, 12, 3, 1, true, 1, 1, 10, 10);
  const naive::OpCount want = naive::conv_full_tap_count(1, 8, 12, 3, 3, 10, 10, 1, true);
  CHECK(cost.out == Shape4{1, 12, 10, 10});
  CHECK(cost.macs == want.muls);
  CHECK(cost.flops == want.muls + want.adds);
}

TEST_CASE("pinned layer examples") {
  // A lone biased 1x1 convolution from 200 to 1024 channels carries
  // 200*1024 + 1024 = 205,824 parameters.
  const LayerCost fc = mfn::conv_cost("expand", 200, 1024, 1, 1, true, 1, 0, 7, 7);
  CHECK(fc.params == 205824);

  // Depthwise 3x3 over 64 channels at 56x56 (stride 1, pad 1):
  // 56*56*64*9 = 1,806,336 multiply-accumulates.
  const LayerCost dw = mfn::conv_cost("dw", 64, 64, 3, 64, false, 1, 1, 56, 56);
  CHECK(dw.out == Shape4{1, 64, 56, 56});
  CHECK(dw.macs == 1806336);

  // Flattening 200x7x7 through a dense 512-wide map costs 7*7*200*512 =
  // 5,017,600 MACs; the global depthwise + pointwise pair costs 200*49 +
  // 200*512 = 112,200.
  const LayerCost dense = mfn::conv_cost("dense", 200, 512, 7, 1, false, 1, 0, 7, 7);
  CHECK(dense.out == Shape4{1, 512, 1, 1});
  CHECK(dense.macs == 5017600);
  const LayerCost gdw = mfn::conv_cost("gdw", 200, 200, 7, 200, false, 1, 0, 7, 7);
  const LayerCost pw = mfn::conv_cost("pw", 200, 512, 1, 1, false, 1, 0, 1, 1);
  CHECK(gdw.macs + pw.macs == 112200);
  CHECK(gdw.macs + pw.macs < dense.macs);
}

TEST_CASE("frozen per-architecture budgets hold to the digit") {
  struct Budget {
    const char* name;
    int64_t params, macs, flops;
  };
  const Budget budgets[] = {
      {"mixfacenet-xs", 1040866, 76561120, 162909732},
      {"mixfacenet-s", 3073110, 218141424, 453338444},
      {"mixfacenet-m", 3953046, 303388992, 628118372},
      {"mixfacenet-nano", 11492, 676896, 1504616},
  };
  for (const Budget& b : budgets) {
    CAPTURE(b.name);
    const NetworkConfig cfg = mfn::preset(b.name);
    CHECK(mfn::count_params(cfg) == b.params);
    CHECK(mfn::count_macs(cfg) == b.macs);
    CHECK(mfn::count_flops(cfg) == b.flops);
  }
}

TEST_CASE("published budget gates: params within 1 percent, FLOPs within 2 percent") {
  struct Gate {
    const char* name;
    double params_target, flops_target;
  };
  const Gate gates[] = {
      {"mixfacenet-xs", 1.04e6, 161.9e6},
      {"mixfacenet-s", 3.07e6, 451.7e6},
      {"mixfacenet-m", 3.95e6, 626.1e6},
  };
  for (const Gate& g : gates) {
    CAPTURE(g.name);
    const NetworkConfig cfg = mfn::preset(g.name);
    const double params = static_cast<double>(mfn::count_params(cfg));
    const double flops = static_cast<double>(mfn::count_flops(cfg));
    CHECK(std::abs(params - g.params_target) / g.params_target <= 0.01);
    CHECK(std::abs(flops - g.flops_target) / g.flops_target <= 0.02);
  }
}

TEST_CASE("channel shuffle is free: each twin matches its base architecture") {
  const char* pairs[][2] = {
      {"mixfacenet-xs", "shufflemixfacenet-xs"},
      {"mixfacenet-s", "shufflemixfacenet-s"},
      {"mixfacenet-m", "shufflemixfacenet-m"},
  };
  for (const auto& p : pairs) {
    CAPTURE(p[0]);
    const NetworkConfig base = mfn::preset(p[0]);
    const NetworkConfig twin = mfn::preset(p[1]);
    CHECK(mfn::count_params(base) == mfn::count_params(twin));
    CHECK(mfn::count_macs(base) == mfn::count_macs(twin));
    CHECK(mfn::count_flops(base) == mfn::count_flops(twin));
  }
}

TEST_CASE("report rows sum to the totals and match the built network") {
  for (const std::string& name : mfn::preset_names()) {
    CAPTURE(name);
    const NetworkConfig cfg = mfn::preset(name);
    const mfn::CostReport report = mfn::cost_report(cfg);
    int64_t macs = 0, flops = 0, params = 0;
    for (const auto& row : report.rows) {
      macs += row.macs;
      flops += row.flops;
      params += row.params;
    }
    CHECK(macs == report.total_macs);
    CHECK(flops == report.total_flops);
    CHECK(params == report.total_params);
    CHECK(report.total_macs == mfn::count_macs(cfg));
    CHECK(report.total_flops == mfn::count_flops(cfg));
    CHECK(report.total_params == mfn::count_params(cfg));
  }
  // The model's parameter count equals what construction actually registers.
  const NetworkConfig nano = mfn::preset("nano");
  mfn::Network<float> net(nano, 0);
  CHECK(net.params().trainable_count() == mfn::count_params(nano));
}

TEST_CASE("renderers carry every layer and a totals row") {
  const mfn::CostReport report = mfn::cost_report(mfn::preset("nano"));
  const std::string table = mfn::render_table(report);
  const std::string csv = mfn::render_csv(report);
  for (const auto& row : report.rows) {
    CAPTURE(row.name);
    CHECK(table.find(row.name) != std::string::npos);
    CHECK(csv.find(row.name) != std::string::npos);
  }
  CHECK(table.find("TOTAL") != std::string::npos);
  CHECK(csv.find("TOTAL") != std::string::npos);
  CHECK(csv.rfind("layer,kind,out_shape,macs,params", 0) == 0);
}
