// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfn/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; this build targets LE hosts");

namespace mfn::io {
namespace {

class ByteReader {
 public:
  ByteReader(const std::vector<uint8_t>& bytes, std::string origin)
      : bytes_(bytes), origin_(std::move(origin)) {}

  void read_raw(void* out, size_t len, const char* what) {
    if (pos_ + len > bytes_.size()) {
      throw IoError(origin_ + ": truncated while reading " + std::string(what) + " (need " +
                    std::to_string(len) + " bytes at offset " + std::to_string(pos_) + ")");
    }
    std::memcpy(out, bytes_.data() + pos_, len);
    pos_ += len;
  }

  uint8_t u8(const char* what) {
    uint8_t v;
    read_raw(&v, 1, what);
    return v;
  }
  uint16_t u16(const char* what) {
    uint16_t v;
    read_raw(&v, 2, what);
    return v;
  }
  uint32_t u32(const char* what) {
    uint32_t v;
    read_raw(&v, 4, what);
    return v;
  }

  size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& origin() const { return origin_; }

 private:
  const std::vector<uint8_t>& bytes_;
  std::string origin_;
  size_t pos_ = 0;
};

void append_raw(std::vector<uint8_t>& out, const void* data, size_t len) {
  const uint8_t* p = static_cast<const uint8_t*>(data);
  out.insert(out.end(), p, p + len);
}
void append_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }
void append_u16(std::vector<uint8_t>& out, uint16_t v) { append_raw(out, &v, 2); }
void append_u32(std::vector<uint8_t>& out, uint32_t v) { append_raw(out, &v, 4); }

}  // namespace

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path + ": cannot open for reading");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError(path + ": read failed");
  return bytes;
}

void write_file_bytes(const std::string& path, const void* data, size_t len) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path + ": cannot open for writing");
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  if (!f) throw IoError(path + ": write failed");
}

void write_text_file(const std::string& path, const std::string& text) {
  write_file_bytes(path, text.data(), text.size());
}

std::string read_text_file(const std::string& path) {
  std::vector<uint8_t> b = read_file_bytes(path);
  return std::string(b.begin(), b.end());
}

// ---- tensor file ----

void write_tensor(const std::string& path, const Tensor<float>& t) {
  const Shape4& s = t.shape();
  for (int64_t d : {s.n, s.c, s.h, s.w}) {
    if (d < 0 || d > UINT32_MAX) {
      throw IoError(path + ": dimension " + std::to_string(d) + " not storable as u32");
    }
  }
  std::vector<uint8_t> out;
  out.reserve(22 + t.numel() * 4);
  append_raw(out, "MFTN", 4);
  append_u32(out, kFormatVersion);
  append_u8(out, 4);
  append_u32(out, static_cast<uint32_t>(s.n));
  append_u32(out, static_cast<uint32_t>(s.c));
  append_u32(out, static_cast<uint32_t>(s.h));
  append_u32(out, static_cast<uint32_t>(s.w));
  append_u8(out, 1);  // dtype: f32
  append_raw(out, t.data(), static_cast<size_t>(t.numel()) * 4);
  write_file_bytes(path, out.data(), out.size());
}

Tensor<float> read_tensor(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  ByteReader r(bytes, path);
  char magic[4];
  r.read_raw(magic, 4, "magic");
  if (std::memcmp(magic, "MFTN", 4) != 0) {
    throw IoError(path + ": bad magic bytes (expected MFTN)");
  }
  const uint32_t version = r.u32("version");
  if (version != kFormatVersion) {
    throw IoError(path + ": unsupported tensor format version " + std::to_string(version));
  }
  const uint8_t rank = r.u8("rank");
  if (rank != 4) throw IoError(path + ": rank " + std::to_string(rank) + " != 4");
  uint32_t dims[4];
  for (auto& d : dims) d = r.u32("dims");
  const uint8_t dtype = r.u8("dtype");
  if (dtype != 1) {
    throw IoError(path + ": unsupported dtype tag " + std::to_string(dtype) + " (only 1 = f32)");
  }
  const Shape4 shape{dims[0], dims[1], dims[2], dims[3]};
  const uint64_t count = static_cast<uint64_t>(shape.numel());
  std::vector<float> payload(count);
  r.read_raw(payload.data(), count * 4, "payload");
  if (r.remaining() != 0) {
    throw IoError(path + ": " + std::to_string(r.remaining()) + " trailing bytes after payload");
  }
  return Tensor<float>(shape, std::move(payload));
}

// ---- checkpoint ----

void write_checkpoint_raw(const std::string& path, const std::vector<CheckpointEntry>& entries) {
  std::vector<uint8_t> out;
  append_raw(out, "MFNW", 4);
  append_u32(out, kFormatVersion);
  append_u32(out, static_cast<uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.name.size() > UINT16_MAX) {
      throw IoError(path + ": entry name longer than 65535 bytes");
    }
    uint64_t count = 1;
    for (uint32_t d : e.dims) count *= d;
    if (e.data.size() != count) {
      throw IoError(path + ": entry '" + e.name + "' payload size " +
                    std::to_string(e.data.size()) + " != dims product " + std::to_string(count));
    }
    append_u16(out, static_cast<uint16_t>(e.name.size()));
    append_raw(out, e.name.data(), e.name.size());
    append_u8(out, static_cast<uint8_t>(e.dims.size()));
    for (uint32_t d : e.dims) append_u32(out, d);
    append_raw(out, e.data.data(), e.data.size() * 4);
  }
  write_file_bytes(path, out.data(), out.size());
}

std::vector<CheckpointEntry> read_checkpoint_raw(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  ByteReader r(bytes, path);
  char magic[4];
  r.read_raw(magic, 4, "magic");
  if (std::memcmp(magic, "MFNW", 4) != 0) {
    throw IoError(path + ": bad magic bytes (expected MFNW)");
  }
  const uint32_t version = r.u32("version");
  if (version != kFormatVersion) {
    throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t count = r.u32("entry count");
  std::vector<CheckpointEntry> entries;
  entries.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const uint16_t name_len = r.u16("entry name length");
    e.name.resize(name_len);
    r.read_raw(e.name.data(), name_len, "entry name");
    const uint8_t rank = r.u8("entry rank");
    e.dims.resize(rank);
    uint64_t n = 1;
    for (auto& d : e.dims) {
      d = r.u32("entry dims");
      n *= d;
    }
    e.data.resize(n);
    r.read_raw(e.data.data(), n * 4, "entry payload");
    entries.push_back(std::move(e));
  }
  if (r.remaining() != 0) {
    throw IoError(path + ": " + std::to_string(r.remaining()) + " trailing bytes after entries");
  }
  return entries;
}

// ---- images ----

namespace {

// Reads one PPM header token, treating '#'-to-newline as whitespace.
std::string ppm_token(ByteReader& r) {
  std::string tok;
  for (;;) {
    if (r.remaining() == 0) {
      if (!tok.empty()) return tok;
      throw IoError(r.origin() + ": truncated PPM header");
    }
    const uint8_t ch = r.u8("ppm header");
    if (ch == '#' && tok.empty()) {
      while (r.remaining() > 0 && r.u8("ppm comment") != '\n') {
      }
      continue;
    }
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
}

int64_t ppm_int(ByteReader& r, const char* what) {
  const std::string tok = ppm_token(r);
  try {
    size_t used = 0;
    const long long v = std::stoll(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError(r.origin() + ": bad PPM " + std::string(what) + " '" + tok + "'");
  }
}

}  // namespace

Tensor<float> read_ppm_normalized(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  ByteReader r(bytes, path);
  if (ppm_token(r) != "P6") throw IoError(path + ": not a binary PPM (P6) file");
  const int64_t width = ppm_int(r, "width");
  const int64_t height = ppm_int(r, "height");
  const int64_t maxval = ppm_int(r, "maxval");
  if (maxval != 255) {
    throw IoError(path + ": PPM maxval " + std::to_string(maxval) + " unsupported (need 255)");
  }
  if (width < 1 || height < 1) {
    throw IoError(path + ": degenerate PPM size " + std::to_string(width) + "x" +
                  std::to_string(height));
  }
  const size_t need = static_cast<size_t>(width) * static_cast<size_t>(height) * 3;
  std::vector<uint8_t> rgb(need);
  r.read_raw(rgb.data(), need, "pixel data");
  if (r.remaining() != 0) {
    throw IoError(path + ": " + std::to_string(r.remaining()) + " trailing bytes after pixels");
  }
  Tensor<float> t(Shape4{1, 3, height, width});
  for (int64_t y = 0; y < height; ++y) {
    for (int64_t x = 0; x < width; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        const float p = static_cast<float>(rgb[static_cast<size_t>((y * width + x) * 3 + c)]);
        t.at(0, c, y, x) = (p - 127.5f) / 128.0f;
      }
    }
  }
  return t;
}

void write_ppm(const std::string& path, int64_t width, int64_t height,
               const std::vector<uint8_t>& rgb) {
  if (static_cast<int64_t>(rgb.size()) != width * height * 3) {
    throw IoError(path + ": rgb payload " + std::to_string(rgb.size()) + " != 3*" +
                  std::to_string(width) + "*" + std::to_string(height));
  }
  std::ostringstream head;
  head << "P6\n" << width << " " << height << "\n255\n";
  std::vector<uint8_t> out;
  const std::string h = head.str();
  out.insert(out.end(), h.begin(), h.end());
  out.insert(out.end(), rgb.begin(), rgb.end());
  write_file_bytes(path, out.data(), out.size());
}

// ---- verification pairs ----

std::vector<PairRow> read_pairs(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<PairRow> rows;
  std::string line;
  int line_no = 0;
  int fold_mode = -1;  // -1 unknown, 0 three-column, 1 four-column
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string tok;
    while (ls >> tok) fields.push_back(tok);
    if (fields.empty()) continue;
    if (fields.size() != 3 && fields.size() != 4) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 3 or 4 fields, got " +
                    std::to_string(fields.size()));
    }
    const int has_fold = fields.size() == 4 ? 1 : 0;
    if (fold_mode == -1) {
      fold_mode = has_fold;
    } else if (fold_mode != has_fold) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": inconsistent fold column (file mixes 3- and 4-field rows)");
    }
    PairRow row;
    row.a = fields[0];
    row.b = fields[1];
    if (fields[2] != "0" && fields[2] != "1") {
      throw IoError(path + ":" + std::to_string(line_no) + ": label '" + fields[2] +
                    "' must be 0 or 1");
    }
    row.label = fields[2] == "1" ? 1 : 0;
    if (has_fold) {
      try {
        size_t used = 0;
        row.fold = std::stoi(fields[3], &used);
        if (used != fields[3].size() || row.fold < 0) throw std::invalid_argument(fields[3]);
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line_no) + ": bad fold index '" + fields[3] +
                      "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no pair rows");
  return rows;
}

// ---- score dumps ----

void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows) {
  std::ostringstream out;
  out << "id_a,id_b,label,score\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.score);
    out << r.a << "," << r.b << "," << r.label << "," << buf << "\n";
  }
  write_text_file(path, out.str());
}

std::vector<ScoreRow> read_scores_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "id_a,id_b,label,score") {
    throw IoError(path + ": missing or bad CSV header (expected id_a,id_b,label,score)");
  }
  std::vector<ScoreRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    for (;;) {
      const size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 4) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 4 comma-separated fields");
    }
    ScoreRow r;
    r.a = fields[0];
    r.b = fields[1];
    if (fields[2] != "0" && fields[2] != "1") {
      throw IoError(path + ":" + std::to_string(line_no) + ": label '" + fields[2] +
                    "' must be 0 or 1");
    }
    r.label = fields[2] == "1" ? 1 : 0;
    try {
      size_t used = 0;
      r.score = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument(fields[3]);
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(line_no) + ": bad score '" + fields[3] + "'");
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw IoError(path + ": no score rows");
  return rows;
}

// ---- digests / manifests ----

uint64_t fnv1a64(const void* data, size_t len) {
  const uint8_t* p = static_cast<const uint8_t*>(data);
  uint64_t h = 14695981039346656037ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string file_digest_hex(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  const uint64_t h = fnv1a64(bytes.data(), bytes.size());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::json j;
  j["tool"] = "mixfacenet";
  j["format_version"] = kFormatVersion;
  j["command"] = m.command;
  j["args"] = m.args;
  j["arch"] = m.arch;
  j["simd"] = m.simd_backend;
  j["threads"] = m.threads;
  if (m.has_seed) j["seed"] = m.seed;
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& in : m.inputs) {
    inputs.push_back({{"path", in.path}, {"fnv1a64", in.fnv1a64}});
  }
  j["inputs"] = inputs;
  j["outputs"] = m.outputs;
  return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const RunManifest& m) {
  write_text_file(path, manifest_json(m));
}

}  // namespace mfn::io
