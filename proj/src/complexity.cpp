// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfn/complexity.hpp"

#include <iomanip>
#include <sstream>

namespace mfn {
namespace {

class CostWalk {
 public:
  explicit CostWalk(const NetworkConfig& cfg) : cfg_(cfg) {}

  CostReport run() {
    validate(cfg_);
    h_ = cfg_.input_h;
    w_ = cfg_.input_w;
    conv("stem.conv", "conv", 3, cfg_.stem_c, 3, 1, false, /*stride=*/2);
    bn("stem.bn", cfg_.stem_c);
    act("stem.prelu", cfg_.stem_c, h_ * w_, true);
    for (size_t i = 0; i < cfg_.blocks.size(); ++i) {
      block("blocks." + std::to_string(i), cfg_.blocks[i]);
    }
    embedding();
    CostReport r;
    r.rows = std::move(rows_);
    for (const auto& row : r.rows) {
      r.total_macs += row.macs;
      r.total_flops += row.flops;
      r.total_params += row.params;
    }
    return r;
  }

 private:
  // Convolution at the current spatial extent; stride updates the extent.
  // Square kernel k, padding (k-1)/2 except the 7x7 global depthwise (pad 0).
  void conv(const std::string& name, const std::string& kind, int64_t in_c, int64_t out_c,
            int64_t k, int64_t groups, bool bias, int64_t stride = 1, int64_t pad = -1) {
    if (pad < 0) pad = (k - 1) / 2;
    LayerCost row = conv_cost(name, in_c, out_c, k, groups, bias, stride, pad, h_, w_);
    row.kind = kind;
    h_ = row.out.h;
    w_ = row.out.w;
    rows_.push_back(std::move(row));
  }

  void bn(const std::string& name, int64_t c) {
    LayerCost row;
    row.name = name;
    row.kind = "bn";
    row.out = Shape4{1, c, h_, w_};
    row.flops = 2 * c * h_ * w_;
    row.params = 2 * c;
    rows_.push_back(std::move(row));
  }

  void act(const std::string& name, int64_t c, int64_t hw, bool prelu) {
    LayerCost row;
    row.name = name;
    row.kind = "act";
    row.out = Shape4{1, c, h_, w_};
    row.flops = c * hw;
    row.params = prelu ? c : 0;
    rows_.push_back(std::move(row));
  }

  void zero_cost(const std::string& name, const std::string& kind, int64_t c) {
    LayerCost row;
    row.name = name;
    row.kind = kind;
    row.out = Shape4{1, c, h_, w_};
    rows_.push_back(std::move(row));
  }

  void elementwise(const std::string& name, const std::string& kind, Shape4 out,
                   int64_t flops) {
    LayerCost row;
    row.name = name;
    row.kind = kind;
    row.out = out;
    row.flops = flops;
    rows_.push_back(std::move(row));
  }

  void block(const std::string& prefix, const BlockSpec& b) {
    const bool prelu = b.act == Act::kPReLU;
    const char* act_suffix = prelu ? ".prelu" : ".swish";
    if (b.has_expand()) {
      conv(prefix + ".expand.conv", "conv", b.in_c, b.expand_c, 1, b.expand_groups, false);
      bn(prefix + ".expand.bn", b.expand_c);
      act(prefix + ".expand" + act_suffix, b.expand_c, h_ * w_, prelu);
    }
    // MixConv branches share the input extent; run them at the pre-stride
    // extent and commit the strided extent once.
    const int64_t h_in = h_;
    const int64_t w_in = w_;
    int64_t h_out = 0, w_out = 0;
    for (size_t i = 0; i < b.mix.kernels.size(); ++i) {
      h_ = h_in;
      w_ = w_in;
      const int64_t k = b.mix.kernels[i];
      const int64_t c = b.mix.split[i];
      conv(prefix + ".mixconv.k" + std::to_string(k), "conv", c, c, k, c, false, b.mix.stride);
      h_out = h_;
      w_out = w_;
    }
    h_ = h_out;
    w_ = w_out;
    bn(prefix + ".mixconv.bn", b.expand_c);
    act(prefix + ".mixconv" + act_suffix, b.expand_c, h_ * w_, prelu);
    if (b.shuffle && b.shuffle_pos == ShufflePos::kAfterMixConv) {
      zero_cost(prefix + ".shuffle", "shuffle", b.expand_c);
    }
    if (b.se_hidden > 0) {
      elementwise(prefix + ".se.pool", "pool", Shape4{1, b.expand_c, 1, 1},
                  b.expand_c * h_ * w_);
      const int64_t hs = h_, ws = w_;
      h_ = 1;
      w_ = 1;
      conv(prefix + ".se.reduce", "conv", b.expand_c, b.se_hidden, 1, 1, true);
      act(prefix + ".se.swish", b.se_hidden, 1, false);
      conv(prefix + ".se.expand", "conv", b.se_hidden, b.expand_c, 1, 1, true);
      elementwise(prefix + ".se.gate", "gate", Shape4{1, b.expand_c, 1, 1}, b.expand_c);
      h_ = hs;
      w_ = ws;
      elementwise(prefix + ".se.scale", "scale", Shape4{1, b.expand_c, h_, w_},
                  b.expand_c * h_ * w_);
    }
    conv(prefix + ".project.conv", "conv", b.expand_c, b.out_c, 1, b.project_groups, false);
    bn(prefix + ".project.bn", b.out_c);
    if (b.residual()) {
      elementwise(prefix + ".residual", "add", Shape4{1, b.out_c, h_, w_}, b.out_c * h_ * w_);
    }
    if (b.shuffle && b.shuffle_pos == ShufflePos::kAfterBlock) {
      zero_cost(prefix + ".shuffle", "shuffle", b.out_c);
    }
  }

  void embedding() {
    const int64_t last_c = cfg_.blocks.back().out_c;
    conv("embedding.expand.conv", "conv", last_c, cfg_.embed_mid, 1, 1, false);
    bn("embedding.expand.bn", cfg_.embed_mid);
    act("embedding.expand.prelu", cfg_.embed_mid, h_ * w_, true);
    conv("embedding.gdw.conv", "conv", cfg_.embed_mid, cfg_.embed_mid, 7, cfg_.embed_mid,
         false, 1, 0);
    bn("embedding.gdw.bn", cfg_.embed_mid);
    conv("embedding.proj.conv", "conv", cfg_.embed_mid, cfg_.embed_dim, 1, 1, false);
    bn("embedding.proj.bn", cfg_.embed_dim);
  }

  const NetworkConfig& cfg_;
  std::vector<LayerCost> rows_;
  int64_t h_ = 0;
  int64_t w_ = 0;
};

std::string shape_x(const Shape4& s) {
  std::ostringstream os;
  os << s.n << "x" << s.c << "x" << s.h << "x" << s.w;
  return os.str();
}

}  // namespace

CostReport cost_report(const NetworkConfig& cfg) { return CostWalk(cfg).run(); }

LayerCost conv_cost(const std::string& name, int64_t in_c, int64_t out_c, int64_t k,
                    int64_t groups, bool bias, int64_t stride, int64_t pad, int64_t h,
                    int64_t w) {
  if (in_c % groups != 0 || out_c % groups != 0) {
    throw ConfigError("conv_cost: " + name + ": groups " + std::to_string(groups) +
                      " must divide channels " + std::to_string(in_c) + "/" +
                      std::to_string(out_c));
  }
  const int64_t oh = (h + 2 * pad - k) / stride + 1;
  const int64_t ow = (w + 2 * pad - k) / stride + 1;
  if (oh < 1 || ow < 1) {
    throw ShapeError("conv_cost: " + name + ": kernel does not fit the " + std::to_string(h) +
                     "x" + std::to_string(w) + " extent");
  }
  LayerCost row;
  row.name = name;
  row.kind = "conv";
  row.out = Shape4{1, out_c, oh, ow};
  row.macs = oh * ow * out_c * (in_c / groups) * k * k;
  row.params = out_c * (in_c / groups) * k * k + (bias ? out_c : 0);
  row.flops = 2 * row.macs + (bias ? out_c * oh * ow : 0);
  return row;
}

int64_t count_macs(const NetworkConfig& cfg) { return cost_report(cfg).total_macs; }
int64_t count_flops(const NetworkConfig& cfg) { return cost_report(cfg).total_flops; }
int64_t count_params(const NetworkConfig& cfg) { return cost_report(cfg).total_params; }

std::string render_table(const CostReport& report) {
  size_t name_w = 5, kind_w = 4, shape_w = 9;
  for (const auto& r : report.rows) {
    name_w = std::max(name_w, r.name.size());
    kind_w = std::max(kind_w, r.kind.size());
    shape_w = std::max(shape_w, shape_x(r.out).size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w + 2)) << "layer"
     << std::setw(static_cast<int>(kind_w + 2)) << "kind"
     << std::setw(static_cast<int>(shape_w + 2)) << "out_shape" << std::right << std::setw(14)
     << "macs" << std::setw(14) << "flops" << std::setw(12) << "params" << "\n";
  for (const auto& r : report.rows) {
    os << std::left << std::setw(static_cast<int>(name_w + 2)) << r.name
       << std::setw(static_cast<int>(kind_w + 2)) << r.kind
       << std::setw(static_cast<int>(shape_w + 2)) << shape_x(r.out) << std::right
       << std::setw(14) << r.macs << std::setw(14) << r.flops << std::setw(12) << r.params
       << "\n";
  }
  os << std::left << std::setw(static_cast<int>(name_w + 2)) << "TOTAL"
     << std::setw(static_cast<int>(kind_w + 2)) << "" << std::setw(static_cast<int>(shape_w + 2))
     << "" << std::right << std::setw(14) << report.total_macs << std::setw(14)
     << report.total_flops << std::setw(12) << report.total_params << "\n";
  return os.str();
}

std::string render_csv(const CostReport& report) {
  std::ostringstream os;
  os << "layer,kind,out_shape,macs,params\n";
  for (const auto& r : report.rows) {
    os << r.name << "," << r.kind << "," << shape_x(r.out) << "," << r.macs << "," << r.params
       << "\n";
  }
  os << "TOTAL,,," << report.total_macs << "," << report.total_params << "\n";
  return os.str();
}

}  // namespace mfn
