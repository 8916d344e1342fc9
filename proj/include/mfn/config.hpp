// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFN_CONFIG_HPP_
#define MFN_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mfn/tensor.hpp"

namespace mfn {

enum class Act { kPReLU, kSwish };

enum class ShufflePos {
  kAfterBlock,    // permute the block output (default)
  kAfterMixConv,  // permute right after the MixConv stage activation
};

// Mixed-kernel depthwise stage: channels split across kernel sizes, one
// depthwise convolution per branch, outputs concatenated. Padding per branch
// is (k-1)/2, so every branch keeps the same spatial map.
struct MixConvSpec {
  std::vector<int64_t> kernels;  // odd, strictly increasing
  std::vector<int64_t> split;    // channels per branch, sums to the stage width
  int64_t stride = 1;
};

struct BlockSpec {
  int64_t in_c = 0;
  int64_t out_c = 0;
  int64_t expand_c = 0;  // == in_c skips the expansion convolution
  MixConvSpec mix;
  int64_t expand_groups = 1;
  int64_t project_groups = 1;
  int64_t se_hidden = 0;  // 0 disables squeeze-excitation
  Act act = Act::kSwish;
  bool shuffle = false;
  ShufflePos shuffle_pos = ShufflePos::kAfterBlock;

  bool has_expand() const { return expand_c != in_c; }
  bool residual() const { return mix.stride == 1 && in_c == out_c; }
};

struct NetworkConfig {
  std::string name;
  int64_t input_h = 112;
  int64_t input_w = 112;
  int64_t stem_c = 0;      // 3x3 stride-2 stem width
  std::vector<BlockSpec> blocks;
  int64_t embed_mid = 0;   // width between the 1x1 expansion and the 7x7 global depthwise
  int64_t embed_dim = 0;   // output embedding width
  int64_t shuffle_groups = 2;
};

// Channel rounding used when a width multiplier scales a base architecture:
// nearest multiple of `divisor`, at least `divisor`, never below 90% of the
// unrounded value.
int64_t round_channels(double channels, int64_t divisor = 8);

// Channel split for a MixConv stage: near-even split across `branches`, any
// remainder going to the first (smallest-kernel) branch.
std::vector<int64_t> split_channels(int64_t channels, int64_t branches);

// Throws ConfigError/ShapeError describing the first violated constraint.
// Checks stage chaining, split sums, group divisibility, odd kernels,
// strides in {1,2}, and that the spatial chain ends at exactly 7x7.
void validate(const NetworkConfig& cfg);

// Built-in architectures:
//   mixfacenet-xs / mixfacenet-s / mixfacenet-m
//   shufflemixfacenet-xs / shufflemixfacenet-s / shufflemixfacenet-m
//   mixfacenet-nano (56x56 test/training miniature)
NetworkConfig preset(const std::string& name);
std::vector<std::string> preset_names();

// Human-readable key=value text form; parse(serialize(c)) == c.
std::string serialize_config(const NetworkConfig& cfg);
NetworkConfig parse_config(const std::string& text);

const char* act_name(Act a);
const char* shuffle_pos_name(ShufflePos p);

}  // namespace mfn

#endif  // MFN_CONFIG_HPP_
