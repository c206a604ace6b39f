// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// tadvit: corpus generation, the three training stages, scoring, evaluation
// and benchmarking. Exit codes: 0 success, 1 runtime failure, 2 usage error.
// TADVIT_THREADS sets the worker thread count.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tadvit/checkpoint.hpp"
#include "tadvit/inference.hpp"
#include "tadvit/metrics.hpp"
#include "tadvit/synthdata.hpp"
#include "tadvit/training.hpp"
#include "tadvit/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tadvit;

namespace {

/// Collects what a command did and writes it as one JSON file at the end.
class RunManifest {
 public:
  RunManifest(std::string command, std::string path)
      : command_(std::move(command)), path_(std::move(path)), start_(std::chrono::steady_clock::now()) {}

  json& config() { return config_; }
  void input(const std::string& p) { inputs_.push_back(p); }
  void output(const std::string& p) { outputs_.push_back(p); }
  void seed(std::uint64_t s) { seed_ = s; }

  void write() const {
    json doc;
    doc["command"] = command_;
    doc["tool_version"] = kVersion;
    doc["config"] = config_;
    doc["inputs"] = inputs_;
    doc["outputs"] = outputs_;
    doc["seed"] = seed_ ? json(*seed_) : json(nullptr);
    doc["threads"] = worker_threads();
    doc["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw Error("cannot write run manifest " + path_);
    out << doc.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::string path_;
  std::chrono::steady_clock::time_point start_;
  json config_ = json::object();
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::optional<std::uint64_t> seed_;
};

json to_json(const KeyValueText& text) {
  json out = json::object();
  for (const auto& [k, v] : text.entries()) out[k] = v;
  return out;
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

/// "DIR" or "NAME=DIR"; the default name is the corpus domain.
struct CorpusArg {
  std::string name;
  std::string dir;
};

CorpusArg parse_corpus_arg(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos) return {arg.substr(0, eq), arg.substr(eq + 1)};
  return {"", arg};
}

struct LoadedCorpora {
  std::map<std::string, Corpus> owned;
  CorpusSet view;
};

LoadedCorpora load_corpora(const std::vector<std::string>& args, RunManifest& manifest) {
  LoadedCorpora out;
  for (const auto& a : args) {
    auto [name, dir] = parse_corpus_arg(a);
    Corpus c = load_corpus(dir);
    if (name.empty()) name = c.domain;
    if (out.owned.count(name)) throw ConfigError("two corpora named '" + name + "'; use NAME=DIR");
    manifest.input(dir);
    out.owned.emplace(name, std::move(c));
  }
  for (auto& [name, c] : out.owned) out.view.emplace(name, &c);
  return out;
}

// ---- gen ---------------------------------------------------------------------

struct GenArgs {
  std::string domain;
  int count = 64;
  std::uint64_t seed = 0;
  double ratio = 0.5;
  int frames = 48;
  int height = 64;
  int width = 64;
  std::string out;
};

void add_gen(CLI::App& app, GenArgs& a) {
  auto* cmd = app.add_subcommand("gen", "Generate a synthetic clip corpus");
  cmd->add_option("--domain", a.domain, "generic | driving-normal | driving-anomalous")->required();
  cmd->add_option("--n", a.count, "Number of clips")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Corpus seed");
  cmd->add_option("--anomaly-ratio", a.ratio, "Fraction of anomalous clips (driving-anomalous)")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--frames", a.frames, "Frames per clip")->check(CLI::PositiveNumber);
  cmd->add_option("--height", a.height, "Frame height")->check(CLI::PositiveNumber);
  cmd->add_option("--width", a.width, "Frame width")->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "Output directory")->required();
}

int run_gen(const GenArgs& a) {
  CorpusOptions o;
  o.domain = parse_domain(a.domain);
  o.count = a.count;
  o.seed = a.seed;
  o.anomaly_ratio = a.ratio;
  o.frames = a.frames;
  o.height = a.height;
  o.width = a.width;
  fs::create_directories(a.out);
  RunManifest manifest("gen", (fs::path(a.out) / "run_manifest.json").string());
  manifest.seed(a.seed);
  manifest.config() = {{"domain", a.domain}, {"n", a.count},     {"anomaly_ratio", a.ratio},
                       {"frames", a.frames}, {"height", a.height}, {"width", a.width}};
  const auto rows = build_corpus(o, a.out);
  manifest.output(a.out);
  manifest.write();
  int anomalous = 0;
  for (const auto& r : rows) anomalous += r.anomalous_frames > 0;
  std::printf("wrote %zu clips (%d anomalous) to %s\n", rows.size(), anomalous, a.out.c_str());
  return 0;
}

// ---- training stages -----------------------------------------------------------

struct StageArgs {
  StageKind kind = StageKind::kGenericPretrain;
  std::string config;
  std::string init;
  std::string model = "desk";
  std::string model_config;
  std::uint64_t init_seed = 0;
  std::vector<std::string> corpora;
  std::string out;
  std::string trace;
  std::optional<std::int64_t> steps, epochs, epoch_samples;
  std::optional<int> batch;
  std::optional<double> lr, warmup, wd;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mixture;
};

void add_stage(CLI::App& app, StageArgs& a, StageKind kind, const std::string& name,
               const std::string& help) {
  a.kind = kind;
  auto* cmd = app.add_subcommand(name, help);
  cmd->add_option("--config", a.config, "Stage config file (key = value)");
  auto* init = cmd->add_option("--init", a.init, "Starting checkpoint");
  if (kind == StageKind::kDapt) init->required();
  if (kind != StageKind::kDapt) {
    cmd->add_option("--model", a.model, "Model preset when starting from random weights");
    cmd->add_option("--model-config", a.model_config, "Model config file for random weights");
    cmd->add_option("--init-seed", a.init_seed, "Seed for random weights");
  }
  cmd->add_option("--corpus", a.corpora, "Corpus directory, optionally NAME=DIR")->required();
  cmd->add_option("--out", a.out, "Output checkpoint path")->required();
  cmd->add_option("--trace", a.trace, "Loss trace CSV (default: <out>.loss.csv)");
  cmd->add_option("--steps", a.steps, "Optimizer steps (overrides epochs)");
  cmd->add_option("--epochs", a.epochs, "Epochs");
  cmd->add_option("--epoch-samples", a.epoch_samples, "Windows per epoch");
  cmd->add_option("--batch", a.batch, "Batch size");
  cmd->add_option("--lr", a.lr, "Peak learning rate");
  cmd->add_option("--warmup", a.warmup, "Warmup fraction");
  cmd->add_option("--wd", a.wd, "Weight decay");
  cmd->add_option("--seed", a.seed, "Stage seed");
  cmd->add_option("--mixture", a.mixture, "Corpus mixture, e.g. driving-normal:1.0");
}

int run_training(const StageArgs& a) {
  StageConfig cfg = a.config.empty() ? StageConfig::defaults(a.kind) : StageConfig::load(a.config);
  if (cfg.stage != a.kind)
    throw ConfigError("config file describes a " + to_string(cfg.stage) + " stage, command is " +
                      to_string(a.kind));
  if (a.steps) cfg.steps = *a.steps;
  if (a.epochs) {
    cfg.epochs = *a.epochs;
    if (!a.steps) cfg.steps = 0;
  }
  if (a.epoch_samples) cfg.epoch_samples = *a.epoch_samples;
  if (a.batch) cfg.batch = *a.batch;
  if (a.lr) cfg.lr = *a.lr;
  if (a.warmup) cfg.warmup = *a.warmup;
  if (a.wd) cfg.wd = *a.wd;
  if (a.seed) cfg.seed = *a.seed;
  if (a.mixture) cfg.mixture = parse_mixture(*a.mixture);
  cfg.validate();

  ensure_parent(a.out);
  RunManifest manifest(to_string(a.kind), a.out + ".manifest.json");
  manifest.seed(cfg.seed);
  manifest.config()["stage"] = to_json(cfg.to_text());

  Checkpoint init;
  if (!a.init.empty()) {
    init = load_checkpoint(a.init);
    manifest.input(a.init);
  } else {
    ModelConfig model = a.model_config.empty() ? ModelConfig::preset(a.model)
                                               : ModelConfig::from_text(KeyValueText::load(a.model_config));
    if (!a.model_config.empty()) manifest.input(a.model_config);
    if (a.kind == StageKind::kGenericPretrain) model.head = HeadType::kMaeDecoder;
    init = random_checkpoint(model, a.init_seed);
    manifest.config()["init_seed"] = a.init_seed;
  }
  manifest.config()["model"] = to_json(init.config.to_text());
  manifest.config()["init_stage"] = to_string(init.stage);

  auto corpora = load_corpora(a.corpora, manifest);
  const StageResult result = run_stage(cfg, init, corpora.view);

  const std::string trace = a.trace.empty() ? a.out + ".loss.csv" : a.trace;
  ensure_parent(trace);
  save_checkpoint(result.checkpoint, a.out);
  write_loss_trace(trace, result.trace);
  manifest.output(a.out);
  manifest.output(trace);
  json draws = json::object();
  for (const auto& [name, n] : result.draws) draws[name] = n;
  manifest.config()["draws"] = draws;
  manifest.config()["skipped_steps"] = result.skipped_steps;
  manifest.write();

  for (const auto& m : result.skip_messages) std::fprintf(stderr, "skipped %s\n", m.c_str());
  const double first = result.trace.empty() ? 0.0 : result.trace.front().loss;
  const double last = result.trace.empty() ? 0.0 : result.trace.back().loss;
  std::printf("%s: %lld steps, loss %.5f -> %.5f, wrote %s (stage %s)\n", to_string(a.kind).c_str(),
              static_cast<long long>(result.trace.size()), first, last, a.out.c_str(),
              to_string(result.checkpoint.stage).c_str());
  return 0;
}

// ---- score -----------------------------------------------------------------------

struct ScoreArgs {
  std::string ckpt;
  std::string clip;
  std::string corpus;
  int stride = 1;
  int window = 0;
  std::string out;
};

void add_score(CLI::App& app, ScoreArgs& a) {
  auto* cmd = app.add_subcommand("score", "Per-frame anomaly scores for a clip or corpus");
  cmd->add_option("--ckpt", a.ckpt, "Fine-tuned checkpoint")->required();
  auto* clip = cmd->add_option("--clip", a.clip, "Single CLP1 clip");
  auto* corpus = cmd->add_option("--corpus", a.corpus, "Corpus directory");
  clip->excludes(corpus);
  cmd->add_option("--stride", a.stride, "Frames between window evaluations")->check(CLI::PositiveNumber);
  cmd->add_option("--window", a.window, "Window length (must equal the model's frames)");
  cmd->add_option("--out", a.out, "Output directory")->required();
}

int run_score(const ScoreArgs& a) {
  if (a.clip.empty() == a.corpus.empty()) throw CLI::ValidationError("score", "give exactly one of --clip or --corpus");
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const Scorer scorer(ckpt);
  const int tau = a.window > 0 ? a.window : ckpt.config.frames;
  fs::create_directories(a.out);
  RunManifest manifest("score", (fs::path(a.out) / "run_manifest.json").string());
  manifest.input(a.ckpt);
  manifest.config() = {{"window", tau}, {"stride", a.stride}};

  Corpus corpus;
  if (!a.clip.empty()) {
    LabeledClip c = read_clip(a.clip);
    corpus.clips.push_back(std::move(c));
    manifest.input(a.clip);
  } else {
    corpus = load_corpus(a.corpus);
    manifest.input(a.corpus);
  }
  const auto series = score_corpus(scorer, corpus, tau, a.stride);
  std::size_t rows = 0;
  for (const auto& s : series) {
    const std::string path = (fs::path(a.out) / (s.clip_id + ".scores.csv")).string();
    write_scores(path, s);
    manifest.output(path);
    rows += s.records.size();
  }
  manifest.write();
  std::printf("scored %zu clips, %zu frames, into %s\n", series.size(), rows, a.out.c_str());
  return 0;
}

// ---- eval --------------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> models;
  std::vector<std::string> tests;
  int stride = 1;
  std::string out;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* cmd = app.add_subcommand("eval", "Metric reports for every (train, test) domain pair");
  cmd->add_option("--model", a.models, "TRAIN_DOMAIN=CHECKPOINT (repeatable)")->required();
  cmd->add_option("--test", a.tests, "TEST_DOMAIN=CORPUS_DIR (repeatable, labelled)")->required();
  cmd->add_option("--stride", a.stride, "Frames between window evaluations")->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "Output directory")->required();
}

std::pair<std::string, std::string> split_pair(const std::string& arg, const char* flag) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
    throw CLI::ValidationError(flag, "expected NAME=PATH, got '" + arg + "'");
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

int run_eval(const EvalArgs& a) {
  fs::create_directories(a.out);
  RunManifest manifest("eval", (fs::path(a.out) / "run_manifest.json").string());
  manifest.config()["stride"] = a.stride;
  std::vector<std::pair<std::string, std::string>> models, tests;
  for (const auto& m : a.models) models.push_back(split_pair(m, "--model"));
  for (const auto& t : a.tests) tests.push_back(split_pair(t, "--test"));

  std::vector<std::pair<std::string, Corpus>> corpora;
  for (const auto& [name, dir] : tests) {
    Corpus c = load_corpus(dir);
    for (const auto& clip : c.clips)
      if (!clip.labeled()) throw ConfigError("eval needs labelled clips; " + clip.id + " in " + dir + " has none");
    manifest.input(dir);
    corpora.emplace_back(name, std::move(c));
  }
  std::vector<EvalSet> sets;
  for (const auto& [train, path] : models) {
    const Checkpoint ckpt = load_checkpoint(path);
    manifest.input(path);
    const Scorer scorer(ckpt);
    for (const auto& [test, corpus] : corpora)
      sets.push_back({train, test, score_corpus(scorer, corpus, ckpt.config.frames, a.stride)});
  }
  const auto reports = assemble_report(sets);
  const std::string summary_path = (fs::path(a.out) / "summary.csv").string();
  std::ofstream summary(summary_path, std::ios::trunc);
  summary << "train,test,mcc_at_0.5,auc_mcc,auc_roc\n";
  for (const auto& r : reports) {
    const std::string stem = "report_" + r.train_domain + "_to_" + r.test_domain;
    const std::string report_path = (fs::path(a.out) / (stem + ".txt")).string();
    const std::string curve_path = (fs::path(a.out) / (stem + ".curve.csv")).string();
    r.to_text().save(report_path);
    write_curve(curve_path, r.curve);
    manifest.output(report_path);
    manifest.output(curve_path);
    summary << r.train_domain << ',' << r.test_domain << ',' << format_double(r.mcc_at_05) << ','
            << format_double(r.auc_mcc) << ',' << format_double(r.auc_roc) << '\n';
    std::printf("%s -> %s: MCC@0.5 %.2f  AUC_MCC %.2f  AUC_ROC %.2f\n", r.train_domain.c_str(),
                r.test_domain.c_str(), r.mcc_at_05, r.auc_mcc, r.auc_roc);
  }
  if (!summary) throw Error("write failed for " + summary_path);
  manifest.output(summary_path);
  manifest.write();
  return 0;
}

// ---- bench -------------------------------------------------------------------------

struct BenchArgs {
  std::string ckpt;
  std::string model = "desk";
  int frames = 0;
  int stride = 1;
  int warmup = 1;
  int runs = 3;
  std::string out;
};

void add_bench(CLI::App& app, BenchArgs& a) {
  auto* cmd = app.add_subcommand("bench", "Parameter count, peak memory and scoring throughput");
  auto* ckpt = cmd->add_option("--ckpt", a.ckpt, "Checkpoint to benchmark");
  cmd->add_option("--model", a.model, "Preset with random weights: desk, vit-s, vit-b, vit-l")->excludes(ckpt);
  cmd->add_option("--frames", a.frames, "Clip length (default: one window)");
  cmd->add_option("--stride", a.stride, "Frames between window evaluations")->check(CLI::PositiveNumber);
  cmd->add_option("--warmup", a.warmup, "Untimed runs")->check(CLI::NonNegativeNumber);
  cmd->add_option("--runs", a.runs, "Timed runs (>= 3)")->check(CLI::Range(3, 1000));
  cmd->add_option("--out", a.out, "Report path (key = value)")->required();
}

int run_bench(const BenchArgs& a) {
  ensure_parent(a.out);
  RunManifest manifest("bench", a.out + ".manifest.json");
  Checkpoint ckpt;
  if (!a.ckpt.empty()) {
    ckpt = with_classifier_head(load_checkpoint(a.ckpt));
    manifest.input(a.ckpt);
  } else {
    ModelConfig cfg = ModelConfig::preset(a.model);
    cfg.head = HeadType::kLinearClassifier;
    ckpt = random_checkpoint(cfg, 0);
    manifest.config()["preset"] = a.model;
  }
  manifest.config()["model"] = to_json(ckpt.config.to_text());
  manifest.config()["frames"] = a.frames;
  manifest.config()["stride"] = a.stride;
  manifest.config()["warmup"] = a.warmup;
  manifest.config()["runs"] = a.runs;
  const BenchReport report = benchmark(ckpt, {a.frames, a.stride, a.warmup, a.runs});
  report.to_text().save(a.out);
  manifest.output(a.out);
  manifest.write();
  std::printf("params %lld (%.2f M)  fps %.2f  peak %.2f MiB (analytic %.2f MiB)\n",
              static_cast<long long>(report.params), static_cast<double>(report.params) / 1e6, report.fps,
              static_cast<double>(report.measured_peak_bytes) / (1 << 20),
              static_cast<double>(report.analytic_peak_bytes) / (1 << 20));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masked video pre-training and frame-level traffic anomaly scoring"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenArgs gen;
  StageArgs pretrain, dapt, finetune;
  ScoreArgs score;
  EvalArgs eval;
  BenchArgs bench;
  add_gen(app, gen);
  add_stage(app, pretrain, StageKind::kGenericPretrain, "pretrain", "Generic masked-autoencoder pre-training");
  add_stage(app, dapt, StageKind::kDapt, "dapt", "Domain-adaptive masked-autoencoder pre-training");
  add_stage(app, finetune, StageKind::kFinetune, "finetune", "Supervised fine-tuning with a linear head");
  add_score(app, score);
  add_eval(app, eval);
  add_bench(app, bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "gen") return run_gen(gen);
    if (name == "pretrain") return run_training(pretrain);
    if (name == "dapt") return run_training(dapt);
    if (name == "finetune") return run_training(finetune);
    if (name == "score") return run_score(score);
    if (name == "eval") return run_eval(eval);
    if (name == "bench") return run_bench(bench);
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
