// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace mfn {
namespace {

constexpr double kNormFloor = 1e-12;

void check_finite_scores(const std::vector<double>& v, const char* what) {
  for (double s : v) {
    if (!std::isfinite(s)) throw ConfigError(std::string(what) + " scores must be finite");
  }
}

// Fraction of `sorted` (ascending) that is >= t.
double frac_at_least(const std::vector<double>& sorted, double t) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

double l2(const double* a, const double* b, int64_t dim) {
  double ssq = 0.0;
  for (int64_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    ssq += d * d;
  }
  return std::sqrt(ssq);
}

double norm(const double* a, int64_t dim) {
  double ssq = 0.0;
  for (int64_t i = 0; i < dim; ++i) ssq += a[i] * a[i];
  return std::max(std::sqrt(ssq), kNormFloor);
}

}  // namespace

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::kEuclidean: return "euclidean";
    case Metric::kEuclideanNormalized: return "euclidean_normalized";
    case Metric::kCosine: return "cosine";
  }
  throw ConfigError("metric_name: unknown metric");
}

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::kEuclidean;
  if (name == "euclidean_normalized") return Metric::kEuclideanNormalized;
  if (name == "cosine") return Metric::kCosine;
  throw ConfigError("unknown metric '" + name +
                    "' (choose euclidean, euclidean_normalized, or cosine)");
}

double compare(const double* a, const double* b, int64_t dim, Metric m) {
  if (dim < 1) throw ShapeError("compare: empty vectors");
  switch (m) {
    case Metric::kEuclidean:
      return l2(a, b, dim);
    case Metric::kEuclideanNormalized: {
      const double na = norm(a, dim), nb = norm(b, dim);
      double ssq = 0.0;
      for (int64_t i = 0; i < dim; ++i) {
        const double d = a[i] / na - b[i] / nb;
        ssq += d * d;
      }
      return std::sqrt(ssq);
    }
    case Metric::kCosine: {
      const double na = norm(a, dim), nb = norm(b, dim);
      double dot = 0.0;
      for (int64_t i = 0; i < dim; ++i) dot += a[i] * b[i];
      return std::clamp(dot / (na * nb), -1.0, 1.0);
    }
  }
  throw ConfigError("compare: unknown metric");
}

double compare(const std::vector<double>& a, const std::vector<double>& b, Metric m) {
  if (a.size() != b.size()) {
    throw ShapeError("compare: dimension mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  return compare(a.data(), b.data(), static_cast<int64_t>(a.size()), m);
}

double similarity(const double* a, const double* b, int64_t dim, Metric m) {
  const double c = compare(a, b, dim, m);
  return m == Metric::kCosine ? c : -c;
}

double similarity(const std::vector<double>& a, const std::vector<double>& b, Metric m) {
  if (a.size() != b.size()) {
    throw ShapeError("similarity: dimension mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  return similarity(a.data(), b.data(), static_cast<int64_t>(a.size()), m);
}

TarFarResult tar_at_far(const std::vector<double>& genuine, const std::vector<double>& impostor,
                        double far_target) {
  if (genuine.empty()) throw ConfigError("tar_at_far: no genuine scores");
  if (impostor.empty()) throw ConfigError("tar_at_far: no impostor scores");
  if (!(far_target > 0.0) || !(far_target < 1.0)) {
    throw ConfigError("tar_at_far: far target must lie in (0, 1)");
  }
  check_finite_scores(genuine, "genuine");
  check_finite_scores(impostor, "impostor");

  std::vector<double> imp = impostor;
  std::sort(imp.begin(), imp.end());
  std::vector<double> uniq = imp;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  std::vector<double> candidates;
  candidates.reserve(uniq.size());
  for (size_t i = 0; i + 1 < uniq.size(); ++i) {
    candidates.push_back((uniq[i] + uniq[i + 1]) / 2.0);
  }
  candidates.push_back(std::nextafter(uniq.back(), std::numeric_limits<double>::infinity()));

  TarFarResult r;
  for (double t : candidates) {
    const double far = frac_at_least(imp, t);
    if (far <= far_target) {
      r.threshold = t;
      r.far = far;
      break;
    }
  }
  std::vector<double> gen = genuine;
  std::sort(gen.begin(), gen.end());
  r.tar = frac_at_least(gen, r.threshold);
  return r;
}

KfoldResult kfold_accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                           const std::vector<int>& folds, int64_t k) {
  const int64_t n = static_cast<int64_t>(scores.size());
  if (n == 0) throw ConfigError("kfold: no scores");
  if (labels.size() != scores.size()) {
    throw ConfigError("kfold: " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(n) + " scores");
  }
  check_finite_scores(scores, "comparison");
  for (int v : labels) {
    if (v != 0 && v != 1) throw ConfigError("kfold: labels must be 0 or 1");
  }

  std::vector<int64_t> fold_of(static_cast<size_t>(n));
  int64_t num_folds;
  if (!folds.empty()) {
    if (folds.size() != scores.size()) {
      throw ConfigError("kfold: " + std::to_string(folds.size()) + " fold ids for " +
                        std::to_string(n) + " scores");
    }
    std::map<int, int64_t> remap;
    for (int f : folds) remap.emplace(f, 0);
    num_folds = static_cast<int64_t>(remap.size());
    if (num_folds < 2) throw ConfigError("kfold: need at least 2 distinct folds");
    int64_t next = 0;
    for (auto& [id, idx] : remap) idx = next++;
    for (int64_t i = 0; i < n; ++i) fold_of[static_cast<size_t>(i)] = remap.at(folds[static_cast<size_t>(i)]);
  } else {
    if (k < 2) throw ConfigError("kfold: k must be at least 2");
    if (k > n) {
      throw ConfigError("kfold: k = " + std::to_string(k) + " exceeds " + std::to_string(n) +
                        " rows");
    }
    num_folds = k;
    for (int64_t i = 0; i < n; ++i) fold_of[static_cast<size_t>(i)] = i * k / n;
  }

  KfoldResult res;
  for (int64_t f = 0; f < num_folds; ++f) {
    std::vector<double> train_scores;
    for (int64_t i = 0; i < n; ++i) {
      if (fold_of[static_cast<size_t>(i)] != f) train_scores.push_back(scores[static_cast<size_t>(i)]);
    }
    if (train_scores.empty()) throw ConfigError("kfold: a training split is empty");

    std::sort(train_scores.begin(), train_scores.end());
    train_scores.erase(std::unique(train_scores.begin(), train_scores.end()), train_scores.end());
    std::vector<double> candidates;
    candidates.push_back(train_scores.front() - 1.0);
    for (size_t i = 0; i + 1 < train_scores.size(); ++i) {
      candidates.push_back((train_scores[i] + train_scores[i + 1]) / 2.0);
    }
    candidates.push_back(train_scores.back() + 1.0);

    // Ascending candidates with a strict improvement test: ties keep the
    // lowest threshold.
    double best_t = candidates.front();
    int64_t best_correct = -1;
    for (double t : candidates) {
      int64_t correct = 0;
      for (int64_t i = 0; i < n; ++i) {
        if (fold_of[static_cast<size_t>(i)] == f) continue;
        const int predicted = scores[static_cast<size_t>(i)] >= t ? 1 : 0;
        if (predicted == labels[static_cast<size_t>(i)]) ++correct;
      }
      if (correct > best_correct) {
        best_correct = correct;
        best_t = t;
      }
    }

    int64_t test_total = 0, test_correct = 0;
    for (int64_t i = 0; i < n; ++i) {
      if (fold_of[static_cast<size_t>(i)] != f) continue;
      ++test_total;
      const int predicted = scores[static_cast<size_t>(i)] >= best_t ? 1 : 0;
      if (predicted == labels[static_cast<size_t>(i)]) ++test_correct;
    }
    res.fold_threshold.push_back(best_t);
    res.fold_accuracy.push_back(static_cast<double>(test_correct) /
                                static_cast<double>(test_total));
  }

  double sum = 0.0;
  for (double a : res.fold_accuracy) sum += a;
  res.mean_accuracy = sum / static_cast<double>(num_folds);
  double ssq = 0.0;
  for (double a : res.fold_accuracy) {
    const double d = a - res.mean_accuracy;
    ssq += d * d;
  }
  res.std_accuracy = std::sqrt(ssq / static_cast<double>(num_folds));
  return res;
}

Rank1Result rank1_identification(const std::vector<std::vector<double>>& probes,
                                 const std::vector<std::string>& probe_ids,
                                 const std::vector<std::vector<double>>& gallery,
                                 const std::vector<std::string>& gallery_ids, Metric metric,
                                 bool exclude_same_index) {
  if (gallery.empty()) throw ConfigError("rank1: empty gallery");
  if (probes.empty()) throw ConfigError("rank1: empty probe set");
  if (probe_ids.size() != probes.size() || gallery_ids.size() != gallery.size()) {
    throw ConfigError("rank1: id list lengths do not match embedding counts");
  }
  if (exclude_same_index) {
    if (probes.size() != gallery.size()) {
      throw ConfigError("rank1: self-index exclusion requires probes and gallery of equal size");
    }
    if (gallery.size() < 2) throw ConfigError("rank1: self-index exclusion leaves no candidates");
  }
  const size_t dim = gallery.front().size();
  if (dim == 0) throw ShapeError("rank1: empty embedding vectors");
  for (const auto& v : gallery) {
    if (v.size() != dim) throw ShapeError("rank1: inconsistent gallery dimensions");
  }
  for (const auto& v : probes) {
    if (v.size() != dim) throw ShapeError("rank1: inconsistent probe dimensions");
  }
  const std::set<std::string> gallery_labels(gallery_ids.begin(), gallery_ids.end());
  for (const std::string& id : probe_ids) {
    if (gallery_labels.count(id) == 0) {
      throw ConfigError("rank1: probe identity '" + id + "' absent from the gallery");
    }
  }

  Rank1Result r;
  r.probes = static_cast<int64_t>(probes.size());
  for (size_t i = 0; i < probes.size(); ++i) {
    double best_sim = 0.0;
    size_t best_j = gallery.size();
    for (size_t j = 0; j < gallery.size(); ++j) {
      if (exclude_same_index && j == i) continue;
      const double s = similarity(probes[i].data(), gallery[j].data(),
                                  static_cast<int64_t>(dim), metric);
      if (best_j == gallery.size() || s > best_sim) {
        best_sim = s;
        best_j = j;
      }
    }
    if (gallery_ids[best_j] == probe_ids[i]) ++r.hits;
  }
  r.rate = static_cast<double>(r.hits) / static_cast<double>(r.probes);
  return r;
}

ScoredPairs score_pairs(const std::vector<io::PairRow>& pairs,
                        const std::map<std::string, std::vector<double>>& embeddings,
                        Metric metric) {
  ScoredPairs out;
  out.rows.reserve(pairs.size());
  for (const io::PairRow& p : pairs) {
    const auto ia = embeddings.find(p.a);
    if (ia == embeddings.end()) throw ConfigError("score_pairs: no embedding for id '" + p.a + "'");
    const auto ib = embeddings.find(p.b);
    if (ib == embeddings.end()) throw ConfigError("score_pairs: no embedding for id '" + p.b + "'");
    io::ScoreRow row;
    row.a = p.a;
    row.b = p.b;
    row.label = p.label;
    row.score = similarity(ia->second, ib->second, metric);
    out.rows.push_back(std::move(row));
    if (p.label == 1) {
      out.genuine.push_back(out.rows.back().score);
    } else {
      out.impostor.push_back(out.rows.back().score);
    }
  }
  return out;
}

}  // namespace mfn
