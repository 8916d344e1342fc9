// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Verification and identification metrics over embedding comparison scores.
// All acceptance decisions use similarity polarity (higher = more similar)
// with the comparator `score >= threshold`; thresholds are never interpolated.

#ifndef MFN_METRICS_HPP_
#define MFN_METRICS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mfn/io.hpp"
#include "mfn/tensor.hpp"

namespace mfn {

enum class Metric {
  kEuclidean,
  kEuclideanNormalized,
  kCosine,
};

const char* metric_name(Metric m);
Metric parse_metric(const std::string& name);

// Raw comparison value in the metric's native polarity: euclidean forms
// return a distance (lower = more similar), cosine returns a similarity
// in [-1, 1]. euclidean_normalized is euclidean on unit-normalized inputs.
double compare(const double* a, const double* b, int64_t dim, Metric m);
double compare(const std::vector<double>& a, const std::vector<double>& b, Metric m);

// Uniform polarity: similarity = -distance for euclidean forms, cosine as is.
double similarity(const double* a, const double* b, int64_t dim, Metric m);
double similarity(const std::vector<double>& a, const std::vector<double>& b, Metric m);

struct TarFarResult {
  double tar = 0.0;        // fraction of genuine scores >= threshold
  double far = 0.0;        // fraction of impostor scores >= threshold
  double threshold = 0.0;  // smallest candidate with far <= far_target
};

// Candidate thresholds are the midpoints of adjacent unique impostor scores
// plus one step above the maximum impostor; the smallest candidate whose
// false-accept rate is <= far_target wins. Both lists must be non-empty and
// finite; 0 < far_target < 1.
TarFarResult tar_at_far(const std::vector<double>& genuine, const std::vector<double>& impostor,
                        double far_target);

struct KfoldResult {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population standard deviation over folds
  std::vector<double> fold_accuracy;
  std::vector<double> fold_threshold;
};

// Per fold: pick the threshold maximizing accuracy on the other folds
// (candidates = midpoints of adjacent unique training scores plus one below
// the minimum and one above the maximum; ties -> lowest threshold), then
// measure accuracy on the held-out fold. `labels` are 0 (impostor) or
// 1 (genuine). `folds` empty assigns row i to fold i*k/n (contiguous
// blocks); non-empty `folds` must match `scores` in length and its distinct
// values define the folds (`k` is ignored).
KfoldResult kfold_accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                           const std::vector<int>& folds, int64_t k);

struct Rank1Result {
  double rate = 0.0;
  int64_t hits = 0;
  int64_t probes = 0;
};

// Fraction of probes whose most similar gallery entry shares their identity
// label. Ties break to the lowest gallery index. `exclude_same_index` skips
// gallery row i for probe i (leave-one-out when probes == gallery; sizes
// must match). Closed set: every probe identity must occur in the gallery.
Rank1Result rank1_identification(const std::vector<std::vector<double>>& probes,
                                 const std::vector<std::string>& probe_ids,
                                 const std::vector<std::vector<double>>& gallery,
                                 const std::vector<std::string>& gallery_ids, Metric metric,
                                 bool exclude_same_index);

struct ScoredPairs {
  std::vector<io::ScoreRow> rows;  // per pair, in input order
  std::vector<double> genuine;     // scores with label 1
  std::vector<double> impostor;    // scores with label 0
};

// Scores every pair under `metric` with similarity polarity. Throws
// ConfigError naming the first pair id missing from `embeddings`.
ScoredPairs score_pairs(const std::vector<io::PairRow>& pairs,
                        const std::map<std::string, std::vector<double>>& embeddings,
                        Metric metric);

}  // namespace mfn

#endif  // MFN_METRICS_HPP_
