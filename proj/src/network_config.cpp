// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfn/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfn {

int64_t round_channels(double channels, int64_t divisor) {
  const double half = static_cast<double>(divisor) / 2.0;
  int64_t rounded = std::max<int64_t>(
      divisor, static_cast<int64_t>(channels + half) / divisor * divisor);
  if (static_cast<double>(rounded) < 0.9 * channels) rounded += divisor;
  return rounded;
}

std::vector<int64_t> split_channels(int64_t channels, int64_t branches) {
  if (branches < 1 || channels < branches) {
    throw ConfigError("split_channels: cannot split " + std::to_string(channels) +
                      " channels across " + std::to_string(branches) + " branches");
  }
  std::vector<int64_t> split(static_cast<size_t>(branches), channels / branches);
  split[0] += channels % branches;
  return split;
}

namespace {

// One stage row of the base architecture, pre width scaling.
struct StageRow {
  int64_t in, out;
  std::vector<int64_t> kernels;
  int64_t expand_groups, project_groups;
  int64_t stride;
  int64_t expand_ratio;
  Act act;
  double se_ratio;  // of the block input width; 0 disables SE
};

// Base stage tables. Both follow the MixNet global structure with a face
// head: stride-2 stem, one expansion-1 residual block, and no downsampling
// in the first block after it (the stride-2 there moves into the stem).
const std::vector<StageRow>& s_rows() {
  static const std::vector<StageRow> rows = {
      {16, 16, {3}, 1, 1, 1, 1, Act::kPReLU, 0.0},
      {16, 24, {3}, 2, 2, 1, 6, Act::kPReLU, 0.0},
      {24, 24, {3}, 2, 2, 1, 3, Act::kPReLU, 0.0},
      {24, 40, {3, 5, 7}, 1, 1, 2, 6, Act::kSwish, 0.5},
      {40, 40, {3, 5}, 2, 2, 1, 6, Act::kSwish, 0.5},
      {40, 40, {3, 5}, 2, 2, 1, 6, Act::kSwish, 0.5},
      {40, 40, {3, 5}, 2, 2, 1, 6, Act::kSwish, 0.5},
      {40, 80, {3, 5, 7}, 1, 2, 2, 6, Act::kSwish, 0.25},
      {80, 80, {3, 5}, 1, 2, 1, 6, Act::kSwish, 0.25},
      {80, 80, {3, 5}, 1, 2, 1, 6, Act::kSwish, 0.25},
      {80, 120, {3, 5, 7}, 2, 2, 1, 6, Act::kSwish, 0.5},
      {120, 120, {3, 5, 7, 9}, 2, 2, 1, 3, Act::kSwish, 0.5},
      {120, 120, {3, 5, 7, 9}, 2, 2, 1, 3, Act::kSwish, 0.5},
      {120, 200, {3, 5, 7, 9, 11}, 1, 1, 2, 6, Act::kSwish, 0.5},
      {200, 200, {3, 5, 7, 9}, 1, 2, 1, 6, Act::kSwish, 0.5},
      {200, 200, {3, 5, 7, 9}, 1, 2, 1, 6, Act::kSwish, 0.5},
  };
  return rows;
}

const std::vector<StageRow>& m_rows() {
  static const std::vector<StageRow> rows = {
      {24, 24, {3}, 1, 1, 1, 1, Act::kPReLU, 0.0},
      {24, 32, {3, 5, 7}, 2, 2, 1, 6, Act::kPReLU, 0.0},
      {32, 32, {3}, 2, 2, 1, 3, Act::kPReLU, 0.0},
      {32, 40, {3, 5, 7, 9}, 1, 1, 2, 6, Act::kSwish, 0.5},
      {40, 40, {3, 5}, 2, 2, 1, 6, Act::kSwish, 0.5},
      {40, 40, {3, 5}, 2, 2, 1, 6, Act::kSwish, 0.5},
      {40, 40, {3, 5}, 2, 2, 1, 6, Act::kSwish, 0.5},
      {40, 80, {3, 5, 7}, 1, 1, 2, 6, Act::kSwish, 0.25},
      {80, 80, {3, 5, 7, 9}, 2, 2, 1, 6, Act::kSwish, 0.25},
      {80, 80, {3, 5, 7, 9}, 2, 2, 1, 6, Act::kSwish, 0.25},
      {80, 80, {3, 5, 7, 9}, 2, 2, 1, 6, Act::kSwish, 0.25},
      {80, 120, {3}, 1, 1, 1, 6, Act::kSwish, 0.5},
      {120, 120, {3, 5, 7, 9}, 2, 2, 1, 3, Act::kSwish, 0.5},
      {120, 120, {3, 5, 7, 9}, 2, 2, 1, 3, Act::kSwish, 0.5},
      {120, 120, {3, 5, 7, 9}, 2, 2, 1, 3, Act::kSwish, 0.5},
      {120, 200, {3, 5, 7, 9}, 1, 1, 2, 6, Act::kSwish, 0.5},
      {200, 200, {3, 5, 7, 9}, 1, 2, 1, 6, Act::kSwish, 0.5},
      {200, 200, {3, 5, 7, 9}, 1, 2, 1, 6, Act::kSwish, 0.5},
      {200, 200, {3, 5, 7, 9}, 1, 2, 1, 6, Act::kSwish, 0.5},
  };
  return rows;
}

NetworkConfig from_rows(const std::string& name, int64_t stem, const std::vector<StageRow>& rows,
                        double mult, int64_t embed_mid_base, bool shuffle) {
  NetworkConfig cfg;
  cfg.name = name;
  cfg.input_h = 112;
  cfg.input_w = 112;
  cfg.stem_c = round_channels(stem * mult);
  for (size_t i = 0; i < rows.size(); ++i) {
    const StageRow& r = rows[i];
    BlockSpec b;
    b.in_c = round_channels(r.in * mult);
    b.out_c = round_channels(r.out * mult);
    b.expand_c = b.in_c * r.expand_ratio;
    b.mix.kernels = r.kernels;
    b.mix.split = split_channels(b.expand_c, static_cast<int64_t>(r.kernels.size()));
    b.mix.stride = r.stride;
    b.expand_groups = r.expand_groups;
    b.project_groups = r.project_groups;
    b.se_hidden = r.se_ratio > 0.0 ? static_cast<int64_t>(b.in_c * r.se_ratio) : 0;
    b.act = r.act;
    // The expansion-1 head block stays unshuffled; permuting its output would
    // only relabel the residual stream.
    b.shuffle = shuffle && i > 0;
    b.shuffle_pos = ShufflePos::kAfterBlock;
    cfg.blocks.push_back(std::move(b));
  }
  cfg.embed_mid = round_channels(embed_mid_base * mult);
  cfg.embed_dim = 512;
  return cfg;
}

NetworkConfig nano_config() {
  NetworkConfig cfg;
  cfg.name = "mixfacenet-nano";
  cfg.input_h = 56;
  cfg.input_w = 56;
  cfg.stem_c = 8;
  BlockSpec head;
  head.in_c = 8;
  head.out_c = 8;
  head.expand_c = 8;
  head.mix.kernels = {3};
  head.mix.split = {8};
  head.mix.stride = 1;
  head.act = Act::kPReLU;
  cfg.blocks.push_back(head);
  BlockSpec b1;
  b1.in_c = 8;
  b1.out_c = 16;
  b1.expand_c = 16;
  b1.mix.kernels = {3, 5};
  b1.mix.split = {8, 8};
  b1.mix.stride = 2;
  b1.se_hidden = 4;
  b1.act = Act::kSwish;
  b1.shuffle = true;
  cfg.blocks.push_back(b1);
  BlockSpec b2;
  b2.in_c = 16;
  b2.out_c = 16;
  b2.expand_c = 32;
  b2.mix.kernels = {3};
  b2.mix.split = {32};
  b2.mix.stride = 2;
  b2.act = Act::kSwish;
  cfg.blocks.push_back(b2);
  cfg.embed_mid = 64;
  cfg.embed_dim = 64;
  return cfg;
}

}  // namespace

NetworkConfig preset(const std::string& name) {
  if (name == "mixfacenet-s") return from_rows(name, 16, s_rows(), 1.0, 1024, false);
  if (name == "mixfacenet-m") return from_rows(name, 24, m_rows(), 1.0, 1024, false);
  if (name == "mixfacenet-xs") return from_rows(name, 16, s_rows(), 0.5, 1024, false);
  if (name == "shufflemixfacenet-s") return from_rows(name, 16, s_rows(), 1.0, 1024, true);
  if (name == "shufflemixfacenet-m") return from_rows(name, 24, m_rows(), 1.0, 1024, true);
  if (name == "shufflemixfacenet-xs") return from_rows(name, 16, s_rows(), 0.5, 1024, true);
  if (name == "mixfacenet-nano" || name == "nano") return nano_config();
  throw ConfigError("preset: unknown architecture '" + name + "' (have " + [] {
    std::string all;
    for (const auto& n : preset_names()) {
      if (!all.empty()) all += ", ";
      all += n;
    }
    return all;
  }() + ")");
}

std::vector<std::string> preset_names() {
  return {"mixfacenet-xs",        "mixfacenet-s",        "mixfacenet-m",
          "shufflemixfacenet-xs", "shufflemixfacenet-s", "shufflemixfacenet-m",
          "mixfacenet-nano"};
}

void validate(const NetworkConfig& cfg) {
  if (cfg.name.empty()) throw ConfigError("config: empty name");
  if (cfg.stem_c < 1) throw ConfigError("config: stem channels must be >= 1");
  if (cfg.blocks.empty()) throw ConfigError("config: no blocks");
  if (cfg.embed_mid < 1 || cfg.embed_dim < 1) {
    throw ConfigError("config: embedding widths must be >= 1");
  }
  if (cfg.shuffle_groups < 2) throw ConfigError("config: shuffle groups must be >= 2");
  if (cfg.input_h < 1 || cfg.input_w < 1) throw ConfigError("config: bad input size");
  if (cfg.input_h % 2 != 0 || cfg.input_w % 2 != 0) {
    throw ConfigError("config: input size must be even for the stride-2 stem");
  }
  int64_t h = cfg.input_h / 2;
  int64_t w = cfg.input_w / 2;
  int64_t c = cfg.stem_c;
  for (size_t i = 0; i < cfg.blocks.size(); ++i) {
    const BlockSpec& b = cfg.blocks[i];
    const std::string at = "config: blocks." + std::to_string(i);
    if (b.in_c != c) {
      throw ConfigError(at + ": in channels " + std::to_string(b.in_c) +
                        " != previous width " + std::to_string(c));
    }
    if (b.out_c < 1) throw ConfigError(at + ": out channels must be >= 1");
    if (b.expand_c < b.in_c) {
      throw ConfigError(at + ": expansion width " + std::to_string(b.expand_c) +
                        " below input width " + std::to_string(b.in_c));
    }
    if (b.mix.kernels.empty()) throw ConfigError(at + ": empty kernel list");
    if (b.mix.kernels.size() != b.mix.split.size()) {
      throw ConfigError(at + ": kernel list and split list differ in length");
    }
    int64_t prev_k = 0;
    for (int64_t k : b.mix.kernels) {
      if (k < 1 || k % 2 == 0) {
        throw ConfigError(at + ": kernel size " + std::to_string(k) + " must be odd");
      }
      if (k <= prev_k) throw ConfigError(at + ": kernel sizes must be strictly increasing");
      prev_k = k;
    }
    int64_t split_sum = 0;
    for (int64_t s : b.mix.split) {
      if (s < 1) throw ConfigError(at + ": split entries must be >= 1");
      split_sum += s;
    }
    if (split_sum != b.expand_c) {
      throw ConfigError(at + ": split sums to " + std::to_string(split_sum) +
                        ", expansion width is " + std::to_string(b.expand_c));
    }
    if (b.mix.stride != 1 && b.mix.stride != 2) {
      throw ConfigError(at + ": stride must be 1 or 2");
    }
    if (b.has_expand()) {
      if (b.in_c % b.expand_groups != 0 || b.expand_c % b.expand_groups != 0) {
        throw ConfigError(at + ": expansion conv groups " + std::to_string(b.expand_groups) +
                          " do not divide " + std::to_string(b.in_c) + "->" +
                          std::to_string(b.expand_c));
      }
    }
    if (b.expand_c % b.project_groups != 0 || b.out_c % b.project_groups != 0) {
      throw ConfigError(at + ": projection conv groups " + std::to_string(b.project_groups) +
                        " do not divide " + std::to_string(b.expand_c) + "->" +
                        std::to_string(b.out_c));
    }
    if (b.se_hidden < 0) throw ConfigError(at + ": negative SE width");
    if (b.shuffle && b.out_c % cfg.shuffle_groups != 0) {
      throw ConfigError(at + ": shuffle groups " + std::to_string(cfg.shuffle_groups) +
                        " do not divide out channels " + std::to_string(b.out_c));
    }
    if (b.shuffle && b.shuffle_pos == ShufflePos::kAfterMixConv &&
        b.expand_c % cfg.shuffle_groups != 0) {
      throw ConfigError(at + ": shuffle groups do not divide expansion width " +
                        std::to_string(b.expand_c));
    }
    if (b.mix.stride == 2) {
      if (h % 2 != 0 || w % 2 != 0) {
        throw ConfigError(at + ": stride 2 on odd spatial extent " + std::to_string(h) + "x" +
                          std::to_string(w));
      }
      h /= 2;
      w /= 2;
    }
    c = b.out_c;
  }
  if (h != 7 || w != 7) {
    throw ConfigError("config: block stack ends at " + std::to_string(h) + "x" +
                      std::to_string(w) + " spatial extent; the embedding stage needs 7x7");
  }
}

const char* act_name(Act a) { return a == Act::kPReLU ? "prelu" : "swish"; }
const char* shuffle_pos_name(ShufflePos p) {
  return p == ShufflePos::kAfterBlock ? "block" : "mixconv";
}

namespace {

std::string join_int_list(const std::vector<int64_t>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int64_t> parse_int_list(const std::string& s, const std::string& where) {
  std::vector<int64_t> out;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    const std::string tok = s.substr(start, comma - start);
    try {
      size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError(where + ": bad integer '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string serialize_config(const NetworkConfig& cfg) {
  std::ostringstream out;
  out << "name " << cfg.name << "\n";
  out << "input " << cfg.input_h << " " << cfg.input_w << "\n";
  out << "stem " << cfg.stem_c << "\n";
  out << "shuffle_groups " << cfg.shuffle_groups << "\n";
  for (const auto& b : cfg.blocks) {
    out << "block in=" << b.in_c << " out=" << b.out_c << " expand=" << b.expand_c
        << " kernels=" << join_int_list(b.mix.kernels) << " split=" << join_int_list(b.mix.split)
        << " stride=" << b.mix.stride << " expand_groups=" << b.expand_groups
        << " project_groups=" << b.project_groups << " se_hidden=" << b.se_hidden
        << " act=" << act_name(b.act) << " shuffle=" << (b.shuffle ? 1 : 0)
        << " shuffle_pos=" << shuffle_pos_name(b.shuffle_pos) << "\n";
  }
  out << "embedding mid=" << cfg.embed_mid << " dim=" << cfg.embed_dim << "\n";
  return out.str();
}

NetworkConfig parse_config(const std::string& text) {
  NetworkConfig cfg;
  cfg.stem_c = 0;
  bool saw_name = false, saw_input = false, saw_stem = false, saw_embedding = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto bad = [&line_no](const std::string& msg) {
    return ConfigError("config:" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "name") {
      if (!(ls >> cfg.name)) throw bad("name needs a value");
      saw_name = true;
    } else if (head == "input") {
      if (!(ls >> cfg.input_h >> cfg.input_w)) throw bad("input needs height and width");
      saw_input = true;
    } else if (head == "stem") {
      if (!(ls >> cfg.stem_c)) throw bad("stem needs a channel count");
      saw_stem = true;
    } else if (head == "shuffle_groups") {
      if (!(ls >> cfg.shuffle_groups)) throw bad("shuffle_groups needs a value");
    } else if (head == "block") {
      BlockSpec b;
      bool saw[12] = {};
      std::string kv;
      while (ls >> kv) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) throw bad("block field '" + kv + "' is not key=value");
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        auto as_int = [&](const char* what) {
          try {
            size_t used = 0;
            const int64_t v = std::stoll(val, &used);
            if (used != val.size()) throw std::invalid_argument(val);
            return v;
          } catch (const std::exception&) {
            throw bad(std::string("bad ") + what + " '" + val + "'");
          }
        };
        if (key == "in") {
          b.in_c = as_int("in");
          saw[0] = true;
        } else if (key == "out") {
          b.out_c = as_int("out");
          saw[1] = true;
        } else if (key == "expand") {
          b.expand_c = as_int("expand");
          saw[2] = true;
        } else if (key == "kernels") {
          b.mix.kernels = parse_int_list(val, "config kernels");
          saw[3] = true;
        } else if (key == "split") {
          b.mix.split = parse_int_list(val, "config split");
          saw[4] = true;
        } else if (key == "stride") {
          b.mix.stride = as_int("stride");
          saw[5] = true;
        } else if (key == "expand_groups") {
          b.expand_groups = as_int("expand_groups");
          saw[6] = true;
        } else if (key == "project_groups") {
          b.project_groups = as_int("project_groups");
          saw[7] = true;
        } else if (key == "se_hidden") {
          b.se_hidden = as_int("se_hidden");
          saw[8] = true;
        } else if (key == "act") {
          if (val == "prelu") {
            b.act = Act::kPReLU;
          } else if (val == "swish") {
            b.act = Act::kSwish;
          } else {
            throw bad("act '" + val + "' must be prelu or swish");
          }
          saw[9] = true;
        } else if (key == "shuffle") {
          if (val != "0" && val != "1") throw bad("shuffle must be 0 or 1");
          b.shuffle = val == "1";
          saw[10] = true;
        } else if (key == "shuffle_pos") {
          if (val == "block") {
            b.shuffle_pos = ShufflePos::kAfterBlock;
          } else if (val == "mixconv") {
            b.shuffle_pos = ShufflePos::kAfterMixConv;
          } else {
            throw bad("shuffle_pos '" + val + "' must be block or mixconv");
          }
          saw[11] = true;
        } else {
          throw bad("unknown block key '" + key + "'");
        }
      }
      static const char* kFieldNames[12] = {
          "in",          "out",           "expand",    "kernels", "split",   "stride",
          "expand_groups", "project_groups", "se_hidden", "act",     "shuffle", "shuffle_pos"};
      for (int i = 0; i < 12; ++i) {
        if (!saw[i]) throw bad(std::string("block missing field '") + kFieldNames[i] + "'");
      }
      cfg.blocks.push_back(std::move(b));
    } else if (head == "embedding") {
      std::string kv;
      while (ls >> kv) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) throw bad("embedding field '" + kv + "' is not key=value");
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        int64_t v;
        try {
          size_t used = 0;
          v = std::stoll(val, &used);
          if (used != val.size()) throw std::invalid_argument(val);
        } catch (const std::exception&) {
          throw bad("bad embedding value '" + val + "'");
        }
        if (key == "mid") {
          cfg.embed_mid = v;
        } else if (key == "dim") {
          cfg.embed_dim = v;
        } else {
          throw bad("unknown embedding key '" + key + "'");
        }
      }
      saw_embedding = true;
    } else {
      throw bad("unknown directive '" + head + "'");
    }
  }
  if (!saw_name) throw ConfigError("config: missing 'name' line");
  if (!saw_input) throw ConfigError("config: missing 'input' line");
  if (!saw_stem) throw ConfigError("config: missing 'stem' line");
  if (!saw_embedding) throw ConfigError("config: missing 'embedding' line");
  validate(cfg);
  return cfg;
}

}  // namespace mfn
