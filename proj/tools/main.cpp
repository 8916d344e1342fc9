// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// mixfacenet CLI: describe architectures, embed images, run verification
// protocols, check gradients, run toy training. Exit codes: 0 success,
// 1 computation failure, 2 usage or validation error.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfn/complexity.hpp"
#include "mfn/gradcheck.hpp"
#include "mfn/io.hpp"
#include "mfn/kernels.hpp"
#include "mfn/metrics.hpp"
#include "mfn/network.hpp"
#include "mfn/threading.hpp"
#include "mfn/toytrain.hpp"

namespace {

using mfn::ConfigError;
using mfn::NetworkConfig;
using mfn::Tensor;

// Presets by name; anything that exists on disk is a config file.
NetworkConfig arch_config(const std::string& arch) {
  if (std::filesystem::exists(arch) && std::filesystem::is_regular_file(arch)) {
    return mfn::parse_config(mfn::io::read_text_file(arch));
  }
  return mfn::preset(arch);
}

std::string basename_id(const std::string& path) {
  const std::string base = std::filesystem::path(path).filename().string();
  const size_t dot = base.rfind('.');
  return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

// Identity label of an embedding id: the part before the final '_'
// (sample suffix), or the whole id when there is none.
std::string identity_of(const std::string& id) {
  const size_t us = id.rfind('_');
  return us == std::string::npos || us == 0 ? id : id.substr(0, us);
}

mfn::io::RunManifest base_manifest(const std::string& command,
                                   const std::vector<std::string>& args) {
  mfn::io::RunManifest m;
  m.command = command;
  m.args = args;
  m.simd_backend = mfn::kernels::backend_name();
  m.threads = static_cast<int>(mfn::thread_count());
  return m;
}

void add_input(mfn::io::RunManifest& m, const std::string& path) {
  m.inputs.push_back({path, mfn::io::file_digest_hex(path)});
}

Tensor<float> load_image(const std::string& path, int64_t want_h, int64_t want_w) {
  Tensor<float> img;
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".ppm") {
    img = mfn::io::read_ppm_normalized(path);
  } else if (path.size() >= 5 && path.substr(path.size() - 5) == ".mftn") {
    img = mfn::io::read_tensor(path);
  } else {
    throw ConfigError(path + ": input images must be .ppm or .mftn");
  }
  const mfn::Shape4& s = img.shape();
  if (s.n != 1 || s.c != 3 || s.h != want_h || s.w != want_w) {
    throw mfn::ShapeError(path + ": image shape " + s.str() + " != (1,3," +
                          std::to_string(want_h) + "," + std::to_string(want_w) +
                          "); no implicit resize");
  }
  return img;
}

mfn::Network<float> build_network(const std::string& arch, const std::string& weights,
                                  uint64_t seed) {
  if (!weights.empty()) {
    if (arch.empty()) return mfn::load_checkpoint(weights);
    mfn::Network<float> net(arch_config(arch), /*seed=*/0);
    mfn::load_checkpoint_into(net, weights);
    return net;
  }
  if (arch.empty()) throw ConfigError("need --arch or --weights to build a network");
  return mfn::Network<float>(arch_config(arch), seed);
}

struct EmbeddingSet {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
};

// Reads an (n, d, 1, 1) tensor file plus its "<path>.ids" sidecar.
EmbeddingSet load_embeddings(const std::string& path) {
  const Tensor<float> t = mfn::io::read_tensor(path);
  const mfn::Shape4& s = t.shape();
  if (s.h != 1 || s.w != 1 || s.n < 1) {
    throw mfn::ShapeError(path + ": embeddings must be (n, d, 1, 1), got " + s.str());
  }
  EmbeddingSet es;
  const std::string ids_path = path + ".ids";
  const std::string text = mfn::io::read_text_file(ids_path);
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      if (!cur.empty()) es.ids.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  if (!cur.empty()) es.ids.push_back(cur);
  if (static_cast<int64_t>(es.ids.size()) != s.n) {
    throw mfn::IoError(ids_path + ": " + std::to_string(es.ids.size()) + " ids for " +
                       std::to_string(s.n) + " embedding rows");
  }
  es.rows.resize(static_cast<size_t>(s.n));
  for (int64_t i = 0; i < s.n; ++i) {
    auto& row = es.rows[static_cast<size_t>(i)];
    row.resize(static_cast<size_t>(s.c));
    for (int64_t j = 0; j < s.c; ++j) {
      row[static_cast<size_t>(j)] = static_cast<double>(t.data()[i * s.c + j]);
    }
  }
  return es;
}

// id -> embedding; duplicate ids must carry identical vectors.
std::map<std::string, std::vector<double>> embedding_map(const EmbeddingSet& es,
                                                         const std::string& path) {
  std::map<std::string, std::vector<double>> m;
  for (size_t i = 0; i < es.ids.size(); ++i) {
    const auto [it, inserted] = m.emplace(es.ids[i], es.rows[i]);
    if (!inserted && it->second != es.rows[i]) {
      throw ConfigError(path + ": id '" + es.ids[i] + "' appears with different embeddings");
    }
  }
  return m;
}

// ---- describe ----

struct DescribeOpts {
  std::string arch;
  std::vector<int64_t> input_size;
  std::string csv;
  std::vector<std::string> args;
};

int run_describe(const DescribeOpts& o) {
  NetworkConfig cfg = arch_config(o.arch);
  if (!o.input_size.empty()) {
    cfg.input_h = o.input_size[0];
    cfg.input_w = o.input_size[1];
  }
  const mfn::CostReport rep = mfn::cost_report(cfg);
  std::fputs(mfn::render_table(rep).c_str(), stdout);
  if (!o.csv.empty()) {
    mfn::io::write_text_file(o.csv, mfn::render_csv(rep));
    mfn::io::RunManifest m = base_manifest("describe", o.args);
    m.arch = cfg.name;
    if (std::filesystem::exists(o.arch)) add_input(m, o.arch);
    m.outputs = {o.csv};
    mfn::io::write_manifest(o.csv + ".manifest.json", m);
  }
  return 0;
}

// ---- embed ----

struct EmbedOpts {
  std::string arch;
  std::string weights;
  std::vector<std::string> inputs;
  std::string out;
  uint64_t seed = 0;
  bool has_seed = false;
  std::vector<std::string> args;
};

int run_embed(const EmbedOpts& o) {
  const mfn::Network<float> net = build_network(o.arch, o.weights, o.seed);
  const NetworkConfig& cfg = net.config();
  const int64_t n = static_cast<int64_t>(o.inputs.size());

  std::vector<Tensor<float>> images;
  images.reserve(o.inputs.size());
  for (const std::string& path : o.inputs) {
    images.push_back(load_image(path, cfg.input_h, cfg.input_w));
  }

  Tensor<float> out(mfn::Shape4{n, cfg.embed_dim, 1, 1});
  mfn::parallel_for(n, [&](int64_t i) {
    const Tensor<float> e = net.embed(images[static_cast<size_t>(i)]);
    for (int64_t j = 0; j < cfg.embed_dim; ++j) {
      out.data()[i * cfg.embed_dim + j] = e.data()[j];
    }
  });

  mfn::io::write_tensor(o.out, out);
  std::string ids;
  for (const std::string& path : o.inputs) ids += basename_id(path) + "\n";
  mfn::io::write_text_file(o.out + ".ids", ids);

  mfn::io::RunManifest m = base_manifest("embed", o.args);
  m.arch = cfg.name;
  m.seed = o.seed;
  m.has_seed = o.has_seed;
  if (!o.weights.empty()) add_input(m, o.weights);
  if (std::filesystem::exists(o.arch)) add_input(m, o.arch);
  for (const std::string& path : o.inputs) add_input(m, path);
  m.outputs = {o.out, o.out + ".ids"};
  mfn::io::write_manifest(o.out + ".manifest.json", m);

  std::printf("embedded %" PRId64 " images -> %s (%" PRId64 "-d)\n", n, o.out.c_str(),
              cfg.embed_dim);
  return 0;
}

// ---- verify ----

struct VerifyOpts {
  std::string pairs;
  std::string embeddings;
  std::string scores_in;
  std::string scores_out;
  std::string metric = "euclidean";
  std::string protocol = "kfold";
  double far = 1e-4;
  int64_t k = 10;
  std::vector<std::string> args;
};

void report_tarfar(const std::vector<double>& genuine, const std::vector<double>& impostor,
                   double far_target) {
  const mfn::TarFarResult r = mfn::tar_at_far(genuine, impostor, far_target);
  std::printf("tar=%.6f far=%.6f far_target=%g threshold=%.17g genuine=%zu impostor=%zu\n",
              r.tar, r.far, far_target, r.threshold, genuine.size(), impostor.size());
}

void report_kfold(const std::vector<double>& scores, const std::vector<int>& labels,
                  const std::vector<int>& folds, int64_t k) {
  const mfn::KfoldResult r = mfn::kfold_accuracy(scores, labels, folds, k);
  for (size_t f = 0; f < r.fold_accuracy.size(); ++f) {
    std::printf("fold=%zu accuracy=%.6f threshold=%.17g\n", f, r.fold_accuracy[f],
                r.fold_threshold[f]);
  }
  std::printf("kfold accuracy mean=%.6f std=%.6f folds=%zu\n", r.mean_accuracy,
              r.std_accuracy, r.fold_accuracy.size());
}

int run_verify(const VerifyOpts& o) {
  if (o.protocol != "kfold" && o.protocol != "tarfar" && o.protocol != "rank1") {
    throw ConfigError("unknown protocol '" + o.protocol + "' (choose kfold, tarfar, rank1)");
  }
  if (o.protocol == "tarfar" && (!(o.far > 0.0) || !(o.far < 1.0))) {
    throw ConfigError("--far must lie in (0, 1)");
  }
  const mfn::Metric metric = mfn::parse_metric(o.metric);

  if (!o.scores_in.empty()) {
    const std::vector<mfn::io::ScoreRow> rows = mfn::io::read_scores_csv(o.scores_in);
    std::vector<double> scores, genuine, impostor;
    std::vector<int> labels;
    for (const auto& r : rows) {
      scores.push_back(r.score);
      labels.push_back(r.label);
      (r.label == 1 ? genuine : impostor).push_back(r.score);
    }
    if (o.protocol == "tarfar") {
      report_tarfar(genuine, impostor, o.far);
    } else if (o.protocol == "kfold") {
      report_kfold(scores, labels, {}, o.k);
    } else {
      throw ConfigError("rank1 needs --embeddings, not --scores-in");
    }
    return 0;
  }

  if (o.embeddings.empty()) throw ConfigError("need --embeddings (or --scores-in)");
  const EmbeddingSet es = load_embeddings(o.embeddings);

  if (o.protocol == "rank1") {
    std::vector<std::string> identities;
    identities.reserve(es.ids.size());
    for (const std::string& id : es.ids) identities.push_back(identity_of(id));
    const mfn::Rank1Result r = mfn::rank1_identification(es.rows, identities, es.rows,
                                                         identities, metric,
                                                         /*exclude_same_index=*/true);
    std::printf("rank1 rate=%.6f hits=%" PRId64 " probes=%" PRId64 "\n", r.rate, r.hits,
                r.probes);
    return 0;
  }

  if (o.pairs.empty()) throw ConfigError("need --pairs for protocol " + o.protocol);
  const std::vector<mfn::io::PairRow> pairs = mfn::io::read_pairs(o.pairs);
  const auto emap = embedding_map(es, o.embeddings);
  const mfn::ScoredPairs scored = mfn::score_pairs(pairs, emap, metric);

  if (!o.scores_out.empty()) {
    mfn::io::write_scores_csv(o.scores_out, scored.rows);
    mfn::io::RunManifest m = base_manifest("verify", o.args);
    add_input(m, o.pairs);
    add_input(m, o.embeddings);
    add_input(m, o.embeddings + ".ids");
    m.outputs = {o.scores_out};
    mfn::io::write_manifest(o.scores_out + ".manifest.json", m);
  }

  if (o.protocol == "tarfar") {
    report_tarfar(scored.genuine, scored.impostor, o.far);
  } else {
    std::vector<double> scores;
    std::vector<int> labels, folds;
    bool has_folds = false;
    for (const auto& r : scored.rows) {
      scores.push_back(r.score);
      labels.push_back(r.label);
    }
    for (const auto& p : pairs) {
      if (p.fold >= 0) has_folds = true;
    }
    if (has_folds) {
      for (const auto& p : pairs) folds.push_back(p.fold);
    }
    report_kfold(scores, labels, folds, o.k);
  }
  return 0;
}

// ---- gradcheck ----

struct GradcheckOpts {
  uint64_t seed = 0;
  bool float32 = false;
  std::vector<std::string> args;
};

template <typename T>
bool print_suite(const char* label, uint64_t seed) {
  const std::vector<mfn::CheckResult> checks = mfn::run_gradient_checks<T>(seed);
  for (const auto& c : checks) {
    std::printf("[%s] %s %s max_rel=%.3e (tol %.0e)\n", c.pass ? " ok " : "FAIL", label,
                c.name.c_str(), c.max_rel_error, mfn::FdDefaults<T>::kTolerance);
  }
  return mfn::all_pass(checks);
}

int run_gradcheck(const GradcheckOpts& o) {
  bool ok = print_suite<double>("f64", o.seed);
  if (o.float32) ok = print_suite<float>("f32", o.seed) && ok;
  std::printf("gradcheck %s\n", ok ? "passed" : "FAILED");
  return ok ? 0 : 1;
}

// ---- train-toy ----

struct TrainToyOpts {
  std::string config = "nano";
  int64_t steps = 2000;
  uint64_t seed = 0;
  double lr = 0.1;
  std::string out = "train_toy_out";
  std::vector<std::string> args;
};

int run_train_toy(const TrainToyOpts& o) {
  if (o.steps < 1) throw ConfigError("--steps must be positive");

  NetworkConfig cfg = arch_config(o.config);
  mfn::Network<float> net(cfg, o.seed);
  mfn::ToyTrainOptions topt;
  topt.steps = o.steps;
  topt.seed = o.seed;
  topt.lr = static_cast<float>(o.lr);
  const mfn::ToyTrainResult r = mfn::toy_train(net, topt);

  std::string curve = "step,loss,accuracy\n";
  char line[128];
  for (const mfn::ToyTrainStepStat& st : r.curve) {
    std::snprintf(line, sizeof(line), "%" PRId64 ",%.17g,%.17g\n", st.step, st.loss,
                  st.accuracy);
    curve += line;
  }

  std::filesystem::create_directories(o.out);
  const std::string curve_path = o.out + "/curve.csv";
  const std::string ckpt_path = o.out + "/checkpoint.mfnw";
  mfn::io::write_text_file(curve_path, curve);
  mfn::save_checkpoint(net, ckpt_path);

  mfn::io::RunManifest m = base_manifest("train-toy", o.args);
  m.arch = cfg.name;
  m.seed = o.seed;
  m.has_seed = true;
  if (std::filesystem::exists(o.config)) add_input(m, o.config);
  m.outputs = {curve_path, ckpt_path};
  mfn::io::write_manifest(o.out + "/manifest.json", m);

  std::printf("final accuracy=%.4f steps=%" PRId64 " loss_curve=%s\n", r.final_accuracy,
              r.steps_run, curve_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MixFaceNet engine: describe, embed, verify, gradcheck, train-toy"};
  app.require_subcommand(1);

  std::vector<std::string> raw_args(argv + 1, argv + argc);

  DescribeOpts d;
  CLI::App* describe = app.add_subcommand("describe", "Per-layer MACs/FLOPs/params table");
  describe->add_option("--arch", d.arch, "Preset name or config file")->required();
  describe->add_option("--input-size", d.input_size, "Override input H W")->expected(2);
  describe->add_option("--csv", d.csv, "Also write the table as CSV");

  EmbedOpts e;
  CLI::App* embed = app.add_subcommand("embed", "Compute embeddings for images");
  embed->add_option("--arch", e.arch, "Preset name or config file");
  embed->add_option("--weights", e.weights, "Checkpoint to load");
  embed->add_option("--input", e.inputs, "Input images (.ppm or .mftn)")->required();
  embed->add_option("--out", e.out, "Output embedding tensor file")->required();
  CLI::Option* embed_seed = embed->add_option("--seed", e.seed, "Init seed when no weights");

  VerifyOpts v;
  CLI::App* verify = app.add_subcommand("verify", "Verification/identification metrics");
  verify->add_option("--pairs", v.pairs, "Pair list file");
  verify->add_option("--embeddings", v.embeddings, "Embedding tensor (with .ids sidecar)");
  verify->add_option("--scores-in", v.scores_in, "Precomputed scores CSV (skips embeddings)");
  verify->add_option("--scores-out", v.scores_out, "Dump per-pair scores CSV");
  verify->add_option("--metric", v.metric, "euclidean|euclidean_normalized|cosine");
  verify->add_option("--protocol", v.protocol, "kfold|tarfar|rank1");
  verify->add_option("--far", v.far, "FAR target for tarfar");
  verify->add_option("--k", v.k, "Folds when the pair file has none");

  GradcheckOpts g;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gradcheck->add_option("--seed", g.seed, "Seed for generated values");
  gradcheck->add_flag("--float32", g.float32, "Also run the 32-bit suite");

  TrainToyOpts t;
  CLI::App* train = app.add_subcommand("train-toy", "Overfit synthetic classes");
  train->add_option("--config", t.config, "Preset name or config file");
  train->add_option("--steps", t.steps, "Step cap");
  train->add_option("--seed", t.seed, "Data/init seed");
  train->add_option("--lr", t.lr, "Learning rate");
  train->add_option("--out", t.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? 0 : 2;
  }

  d.args = e.args = v.args = g.args = t.args = raw_args;
  e.has_seed = embed_seed->count() > 0;

  try {
    if (*describe) return run_describe(d);
    if (*embed) return run_embed(e);
    if (*verify) return run_verify(v);
    if (*gradcheck) return run_gradcheck(g);
    if (*train) return run_train_toy(t);
  } catch (const ConfigError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 2;
}
