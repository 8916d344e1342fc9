// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// On-disk formats. All binary formats are little-endian with fixed-width
// fields, so files are bit-reproducible across runs and machines.
//
//   tensor file (magic MFTN, version 1):
//     "MFTN" | u32 version | u8 rank (=4) | u32 dims[4] | u8 dtype (1 = f32)
//     | raw little-endian f32 payload
//
//   checkpoint (magic MFNW, version 1):
//     "MFNW" | u32 version | u32 entry_count | entries
//     entry: u16 name_len | name bytes | u8 rank | u32 dims[rank] | f32 payload
//     Entries named "meta/<key>=<value>" carry metadata in the name itself
//     (rank 1, dims {0}, empty payload); "meta/config=" holds the serialized
//     network config.

#ifndef MFN_IO_HPP_
#define MFN_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mfn/tensor.hpp"

namespace mfn::io {

inline constexpr uint32_t kFormatVersion = 1;

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const void* data, size_t len);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// ---- tensor file ----
void write_tensor(const std::string& path, const Tensor<float>& t);
Tensor<float> read_tensor(const std::string& path);

// ---- checkpoint ----
struct CheckpointEntry {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> data;
};
void write_checkpoint_raw(const std::string& path, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_checkpoint_raw(const std::string& path);

// ---- images ----
// Binary PPM (P6), 8-bit, maxval 255 only. Returns (1, 3, h, w) with pixels
// mapped through (p - 127.5) / 128.
Tensor<float> read_ppm_normalized(const std::string& path);
// Raw interleaved RGB rows, for generating fixtures.
void write_ppm(const std::string& path, int64_t width, int64_t height,
               const std::vector<uint8_t>& rgb);

// ---- verification pairs ----
// Text rows: id_a id_b label [fold]; label 1 = genuine. '#' starts a comment.
// The fold column is all-or-nothing across the file.
struct PairRow {
  std::string a, b;
  int label = 0;
  int fold = -1;  // -1 when the file has no fold column
};
std::vector<PairRow> read_pairs(const std::string& path);

// ---- score dumps ----
struct ScoreRow {
  std::string a, b;
  int label = 0;
  double score = 0.0;
};
void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_scores_csv(const std::string& path);

// ---- digests / manifests ----
uint64_t fnv1a64(const void* data, size_t len);
std::string file_digest_hex(const std::string& path);

struct ManifestInput {
  std::string path;
  std::string fnv1a64;
};

struct RunManifest {
  std::string command;                // subcommand name
  std::vector<std::string> args;      // raw argv tail
  std::string arch;
  std::string simd_backend;
  int threads = 1;
  uint64_t seed = 0;
  bool has_seed = false;
  std::vector<ManifestInput> inputs;  // paths + content digests
  std::vector<std::string> outputs;
};

// Serializes the manifest as stable, sorted-key JSON.
std::string manifest_json(const RunManifest& m);
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace mfn::io

#endif  // MFN_IO_HPP_
