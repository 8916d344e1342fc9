// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Static cost model over a network config, per sample (batch 1).
//
// MACs count convolution multiply-accumulates only:
//   out_h * out_w * out_c * (in_c / groups) * kh * kw
// and match an instrumented execution of the reference loops exactly.
//
// FLOPs count 2 per MAC plus the elementwise work convolution counters skip:
// 2 per normalized element (batch norm), 1 per activation element, 1 per bias
// add, and 1 per element for pooling sums, gates, channel scaling, and
// residual adds. Channel shuffle moves data and costs zero.
//
// Params count trainable floats: conv weights and biases, batch-norm
// gamma/beta, PReLU slopes. Running statistics are state, not parameters.

#ifndef MFN_COMPLEXITY_HPP_
#define MFN_COMPLEXITY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mfn/config.hpp"

namespace mfn {

struct LayerCost {
  std::string name;
  std::string kind;  // conv, bn, act, pool, gate, scale, add, shuffle
  Shape4 out;
  int64_t macs = 0;
  int64_t flops = 0;
  int64_t params = 0;
};

struct CostReport {
  std::vector<LayerCost> rows;
  int64_t total_macs = 0;
  int64_t total_flops = 0;
  int64_t total_params = 0;
};

CostReport cost_report(const NetworkConfig& cfg);

// Cost of one square-kernel convolution applied to an (h, w) extent:
// MACs = oh*ow*out_c*(in_c/groups)*k*k, FLOPs = 2*MACs plus one add per
// output element when biased. `out` carries the produced extent.
LayerCost conv_cost(const std::string& name, int64_t in_c, int64_t out_c, int64_t k,
                    int64_t groups, bool bias, int64_t stride, int64_t pad, int64_t h,
                    int64_t w);

int64_t count_macs(const NetworkConfig& cfg);
int64_t count_flops(const NetworkConfig& cfg);
int64_t count_params(const NetworkConfig& cfg);

// Aligned human-readable table with a totals row.
std::string render_table(const CostReport& report);
// CSV: layer,kind,out_shape,macs,params plus a TOTAL row. Shapes print as
// 1x64x56x56 to keep the column count fixed.
std::string render_csv(const CostReport& report);

}  // namespace mfn

#endif  // MFN_COMPLEXITY_HPP_
