// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include "tadvit/training.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tadvit/memory.hpp"
#include "tadvit/random.hpp"

namespace tadvit {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool is_mae_stage(StageKind kind) { return kind != StageKind::kFinetune; }

struct Draw {
  std::size_t source = 0;
  std::size_t clip = 0;
  int start = 0;
  int label = 0;
  std::uint64_t mask_seed = 0;
};

struct Source {
  std::string name;
  const Corpus* corpus = nullptr;
  double cumulative = 0.0;
};

}  // namespace

std::string to_string(StageKind kind) {
  switch (kind) {
    case StageKind::kGenericPretrain: return "generic-pretrain";
    case StageKind::kDapt: return "dapt";
    case StageKind::kFinetune: return "finetune";
  }
  return "generic-pretrain";
}

StageKind parse_stage_kind(std::string_view text) {
  if (text == "generic-pretrain") return StageKind::kGenericPretrain;
  if (text == "dapt") return StageKind::kDapt;
  if (text == "finetune") return StageKind::kFinetune;
  throw ConfigError("unknown stage '" + std::string(text) +
                    "' (expected generic-pretrain, dapt or finetune)");
}

std::vector<MixtureEntry> parse_mixture(std::string_view text) {
  std::vector<MixtureEntry> out;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    MixtureEntry e;
    const auto colon = item.rfind(':');
    if (colon == std::string::npos) {
      e.corpus = item;
    } else {
      e.corpus = trim(std::string_view(item).substr(0, colon));
      const std::string ratio = trim(std::string_view(item).substr(colon + 1));
      char* end = nullptr;
      e.ratio = std::strtod(ratio.c_str(), &end);
      if (ratio.empty() || *end != '\0') throw ConfigError("bad mixture ratio '" + ratio + "'");
    }
    if (e.corpus.empty()) throw ConfigError("empty corpus name in mixture '" + std::string(text) + "'");
    out.push_back(std::move(e));
  }
  return out;
}

std::string format_mixture(const std::vector<MixtureEntry>& mixture) {
  std::string out;
  for (const auto& e : mixture) {
    if (!out.empty()) out += ',';
    out += e.corpus + ':' + format_double(e.ratio);
  }
  return out;
}

StageConfig StageConfig::defaults(StageKind kind) {
  StageConfig c;
  c.stage = kind;
  switch (kind) {
    case StageKind::kGenericPretrain:
      c.steps = 3000;
      c.lr = 1e-3;
      break;
    case StageKind::kDapt:
      c.steps = 1000;
      c.lr = 5e-4;
      break;
    case StageKind::kFinetune:
      c.epochs = 20;
      c.warmup = 0.1;
      c.lr = 1e-3;
      c.beta2 = 0.999;
      break;
  }
  return c;
}

std::int64_t StageConfig::total_steps() const {
  if (steps > 0) return steps;
  return epochs * ((epoch_samples + batch - 1) / batch);
}

void StageConfig::validate() const {
  if (steps < 0 || epochs < 0) throw ConfigError("steps and epochs must be non-negative");
  if (epoch_samples < 1) throw ConfigError("epoch_samples must be at least 1");
  if (batch < 1) throw ConfigError("batch size must be at least 1, got " + std::to_string(batch));
  if (!(warmup >= 0.0 && warmup < 1.0))
    throw ConfigError("warmup fraction must lie in [0, 1), got " + format_double(warmup));
  if (!(lr >= 0.0) || !(min_lr >= 0.0)) throw ConfigError("learning rates must be non-negative");
  if (!(wd >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("betas must lie in [0, 1)");
  if (!mixture.empty()) {
    double total = 0.0;
    for (const auto& e : mixture) {
      if (!(e.ratio > 0.0)) throw ConfigError("mixture ratio for '" + e.corpus + "' must be positive");
      total += e.ratio;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ConfigError("mixture ratios sum to " + format_double(total) + ", expected 1");
    for (std::size_t i = 0; i < mixture.size(); ++i)
      for (std::size_t j = i + 1; j < mixture.size(); ++j)
        if (mixture[i].corpus == mixture[j].corpus)
          throw ConfigError("corpus '" + mixture[i].corpus + "' listed twice in mixture");
  }
}

KeyValueText StageConfig::to_text() const {
  KeyValueText t;
  t.set("stage", to_string(stage));
  t.set("steps", steps);
  t.set("epochs", epochs);
  t.set("epoch_samples", epoch_samples);
  t.set("batch", batch);
  t.set("lr", lr);
  t.set("min_lr", min_lr);
  t.set("warmup", warmup);
  t.set("wd", wd);
  t.set("beta1", beta1);
  t.set("beta2", beta2);
  t.set("seed", std::to_string(seed));
  t.set("mixture", format_mixture(mixture));
  return t;
}

StageConfig StageConfig::from_text(const KeyValueText& text) {
  StageConfig c = defaults(parse_stage_kind(text.at("stage")));
  c.steps = text.get_int("steps", c.steps);
  c.epochs = text.get_int("epochs", c.epochs);
  c.epoch_samples = text.get_int("epoch_samples", c.epoch_samples);
  c.batch = static_cast<int>(text.get_int("batch", c.batch));
  c.lr = text.get_double("lr", c.lr);
  c.min_lr = text.get_double("min_lr", c.min_lr);
  c.warmup = text.get_double("warmup", c.warmup);
  c.wd = text.get_double("wd", c.wd);
  c.beta1 = text.get_double("beta1", c.beta1);
  c.beta2 = text.get_double("beta2", c.beta2);
  if (auto seed = text.find("seed")) {
    try {
      std::size_t used = 0;
      if (seed->find('-') != std::string::npos) throw std::invalid_argument("sign");
      c.seed = std::stoull(*seed, &used);
      if (used != seed->size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw ConfigError("seed must be an unsigned integer, got '" + *seed + "'");
    }
  }
  if (auto mix = text.find("mixture")) c.mixture = parse_mixture(*mix);
  c.validate();
  return c;
}

StageConfig StageConfig::load(const std::string& path) { return from_text(KeyValueText::load(path)); }

// ---- losses ------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> mae_loss(const BoundParameters<Scalar>& params, const Var<Scalar>& input,
                     const Var<Scalar>& target, const TubeMask& mask, const ModelConfig& cfg) {
  if (cfg.head != HeadType::kMaeDecoder || !params.contains("decoder.embed.weight"))
    throw StageError("masked reconstruction needs a model with an MAE decoder head");
  auto prediction = mae_reconstruct(params, input, mask, cfg);
  return masked_mse(prediction, target, std::span<const std::uint8_t>(mask.masked));
}

template <typename Scalar>
Var<Scalar> mae_loss(const BoundParameters<Scalar>& params, const VideoClip& clip, int first_frame,
                     const TubeMask& mask, const ModelConfig& cfg) {
  auto tubelets = constant(extract_tubelets<Scalar>(clip, first_frame, cfg));
  return mae_loss(params, tubelets, tubelets, mask, cfg);
}

template <typename Scalar>
Var<Scalar> window_tokens(const BoundParameters<Scalar>& params, const VideoClip& clip,
                          int first_frame, const ModelConfig& cfg) {
  auto tubelets = constant(extract_tubelets<Scalar>(clip, first_frame, cfg));
  std::vector<Index> ids(static_cast<std::size_t>(cfg.tokens()));
  std::iota(ids.begin(), ids.end(), Index{0});
  return embed_tubelets(params, tubelets, std::span<const Index>(ids), cfg);
}

template <typename Scalar>
Var<Scalar> classification_loss(const BoundParameters<Scalar>& params, const VideoClip& clip,
                                int first_frame, int label, const ModelConfig& cfg) {
  if (label != 0 && label != 1)
    throw ConfigError("classification label must be 0 or 1, got " + std::to_string(label));
  auto encoded = encode(params, window_tokens(params, clip, first_frame, cfg), cfg);
  return softmax_cross_entropy(classifier_logits(params, encoded, cfg), static_cast<Index>(label));
}

#define TADVIT_INSTANTIATE_LOSSES(S)                                                            \
  template Var<S> mae_loss(const BoundParameters<S>&, const Var<S>&, const Var<S>&,            \
                           const TubeMask&, const ModelConfig&);                               \
  template Var<S> mae_loss(const BoundParameters<S>&, const VideoClip&, int, const TubeMask&,  \
                           const ModelConfig&);                                                \
  template Var<S> window_tokens(const BoundParameters<S>&, const VideoClip&, int,              \
                                const ModelConfig&);                                           \
  template Var<S> classification_loss(const BoundParameters<S>&, const VideoClip&, int, int,   \
                                      const ModelConfig&);

TADVIT_INSTANTIATE_LOSSES(float)
TADVIT_INSTANTIATE_LOSSES(double)

// ---- optimisation ------------------------------------------------------------

OptimizerState OptimizerState::zeros_like(const ParameterSet<float>& params) {
  OptimizerState s;
  for (const auto& e : params.entries()) {
    s.m.emplace_back(e.value.shape());
    s.v.emplace_back(e.value.shape());
  }
  return s;
}

StepOutcome optimizer_step(ParameterSet<float>& params, const std::vector<Tensor<float>>& grads,
                           OptimizerState& state, double lr, const AdamW& hyper) {
  auto& entries = params.entries();
  if (grads.size() != entries.size() || state.m.size() != entries.size() ||
      state.v.size() != entries.size())
    throw ShapeError("optimizer_step: " + std::to_string(entries.size()) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " + std::to_string(state.m.size()) +
                     " moment slots");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (grads[i].shape() != entries[i].value.shape() || state.m[i].shape() != entries[i].value.shape() ||
        state.v[i].shape() != entries[i].value.shape())
      throw ShapeError("optimizer_step: shape mismatch for '" + entries[i].name + "'");
    if (!grads[i].array().isFinite().all())
      return {false, "non-finite gradient in '" + entries[i].name + "'"};
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  const float b1 = static_cast<float>(hyper.beta1), b2 = static_cast<float>(hyper.beta2);
  const float step_size = static_cast<float>(lr / c1);
  const float inv_c2 = static_cast<float>(1.0 / c2);
  const float eps = static_cast<float>(hyper.eps);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto p = entries[i].value.array();
    const auto g = grads[i].array();
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g.square();
    if (entries[i].value.rank() > 1 && hyper.weight_decay > 0.0)
      p *= static_cast<float>(1.0 - lr * hyper.weight_decay);
    p -= step_size * m / ((v * inv_c2).sqrt() + eps);
  }
  return {};
}

double learning_rate(const StageConfig& cfg, std::int64_t step, std::int64_t total) {
  if (total <= 0) return cfg.lr;
  const auto warm = static_cast<std::int64_t>(std::floor(cfg.warmup * static_cast<double>(total)));
  if (step < warm) return cfg.lr * static_cast<double>(step) / static_cast<double>(warm);
  const double span = static_cast<double>(std::max<std::int64_t>(total - warm, 1));
  const double progress = std::clamp(static_cast<double>(step - warm) / span, 0.0, 1.0);
  return cfg.min_lr + (cfg.lr - cfg.min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

// ---- stages ------------------------------------------------------------------

std::vector<StageTag> accepted_init_tags(StageKind kind) {
  switch (kind) {
    case StageKind::kGenericPretrain: return {StageTag::kInit};
    case StageKind::kDapt: return {StageTag::kGeneric, StageTag::kDapt};
    case StageKind::kFinetune: return {StageTag::kGeneric, StageTag::kDapt, StageTag::kInit};
  }
  return {};
}

StageTag produced_tag(StageKind kind) {
  switch (kind) {
    case StageKind::kGenericPretrain: return StageTag::kGeneric;
    case StageKind::kDapt: return StageTag::kDapt;
    case StageKind::kFinetune: return StageTag::kFinetuned;
  }
  return StageTag::kInit;
}

void check_stage_chain(StageKind kind, StageTag tag) {
  const auto ok = accepted_init_tags(kind);
  if (std::find(ok.begin(), ok.end(), tag) != ok.end()) return;
  std::string expected;
  for (std::size_t i = 0; i < ok.size(); ++i) expected += (i ? " or " : "") + to_string(ok[i]);
  throw StageError(to_string(kind) + " stage needs a checkpoint tagged " + expected + ", got " +
                   to_string(tag));
}

int worker_threads() {
  if (const char* env = std::getenv("TADVIT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

StageResult run_stage(const StageConfig& cfg, const Checkpoint& init, const CorpusSet& corpora) {
  cfg.validate();
  memory::tune_heap();
  check_stage_chain(cfg.stage, init.stage);
  validate_checkpoint(init);

  StageResult result;
  result.checkpoint = cfg.stage == StageKind::kFinetune ? with_classifier_head(init) : init;
  const ModelConfig& model = result.checkpoint.config;
  if (is_mae_stage(cfg.stage) && model.head != HeadType::kMaeDecoder)
    throw StageError(to_string(cfg.stage) + " stage needs a checkpoint with an MAE decoder head");

  std::vector<Source> sources;
  if (cfg.mixture.empty()) {
    for (const auto& [name, corpus] : corpora) sources.push_back({name, corpus, 0.0});
    for (std::size_t i = 0; i < sources.size(); ++i)
      sources[i].cumulative = static_cast<double>(i + 1) / static_cast<double>(sources.size());
  } else {
    double acc = 0.0;
    for (const auto& e : cfg.mixture) {
      const auto it = corpora.find(e.corpus);
      if (it == corpora.end()) throw ConfigError("mixture names corpus '" + e.corpus + "' which was not provided");
      acc += e.ratio;
      sources.push_back({e.corpus, it->second, acc});
    }
  }
  if (sources.empty()) throw ConfigError(to_string(cfg.stage) + " stage was given no corpus");
  sources.back().cumulative = 1.0;
  for (const auto& s : sources) {
    if (s.corpus == nullptr || s.corpus->clips.empty()) throw ConfigError("corpus '" + s.name + "' is empty");
    for (const auto& c : s.corpus->clips) {
      if (c.clip.frames < model.frames)
        throw ConfigError("clip " + c.id + " in '" + s.name + "' has " + std::to_string(c.clip.frames) +
                          " frames, the model window needs " + std::to_string(model.frames));
      if (cfg.stage == StageKind::kFinetune && !c.labeled())
        throw ConfigError("fine-tuning needs labelled clips; " + c.id + " in '" + s.name + "' has none");
    }
    result.draws[s.name] = 0;
  }

  const std::int64_t total = cfg.total_steps();
  const AdamW hyper{cfg.beta1, cfg.beta2, 1e-8, cfg.wd};
  OptimizerState state = OptimizerState::zeros_like(result.checkpoint.params);
  rnd::Engine rng(cfg.seed);
  const int threads = worker_threads();
  const auto batch = static_cast<std::size_t>(cfg.batch);
  std::vector<Draw> draws(batch);
  std::vector<std::vector<Tensor<float>>> sample_grads(batch);
  std::vector<double> sample_loss(batch);

  for (std::int64_t step = 0; step < total; ++step) {
    for (auto& d : draws) {
      const double u = rnd::uniform01(rng);
      d.source = 0;
      while (sources[d.source].cumulative <= u && d.source + 1 < sources.size()) ++d.source;
      const Corpus& corpus = *sources[d.source].corpus;
      d.clip = rnd::below(rng, corpus.clips.size());
      const LabeledClip& lc = corpus.clips[d.clip];
      d.start = static_cast<int>(rnd::below(rng, static_cast<std::uint64_t>(lc.clip.frames - model.frames + 1)));
      d.mask_seed = rng();
      d.label = lc.labeled() ? lc.labels[static_cast<std::size_t>(d.start + model.frames - 1)] : 0;
      ++result.draws[sources[d.source].name];
    }

    const ParameterSet<float>& params = result.checkpoint.params;
    std::exception_ptr failure;
#pragma omp parallel for num_threads(threads) schedule(dynamic)
    for (std::size_t i = 0; i < batch; ++i) {
      try {
        const Draw& d = draws[i];
        const VideoClip& clip = sources[d.source].corpus->clips[d.clip].clip;
        Tape<float> tape;
        auto bound = BoundParameters<float>::track(tape, params);
        Var<float> loss;
        if (is_mae_stage(cfg.stage)) {
          const TubeMask mask = generate_tube_mask(model.grid(), model.mask_ratio, d.mask_seed);
          loss = mae_loss(bound, clip, d.start, mask, model);
        } else {
          loss = classification_loss(bound, clip, d.start, d.label, model);
        }
        tape.backward(loss);
        sample_loss[i] = loss.value()[0];
        sample_grads[i] = bound.gradients();
      } catch (...) {
#pragma omp critical(tadvit_stage_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<Tensor<float>> grads = std::move(sample_grads[0]);
    double loss = sample_loss[0];
    for (std::size_t i = 1; i < batch; ++i) {
      for (std::size_t k = 0; k < grads.size(); ++k) grads[k].array() += sample_grads[i][k].array();
      loss += sample_loss[i];
    }
    const float inv = 1.0f / static_cast<float>(batch);
    for (auto& g : grads) g.array() *= inv;
    loss /= static_cast<double>(batch);

    const StepOutcome outcome =
        optimizer_step(result.checkpoint.params, grads, state, learning_rate(cfg, step, total), hyper);
    if (!outcome.applied) {
      ++result.skipped_steps;
      result.skip_messages.push_back("step " + std::to_string(step) + ": " + outcome.message);
    }
    result.trace.push_back({step, loss});
  }
  result.checkpoint.stage = produced_tag(cfg.stage);
  return result;
}

void write_loss_trace(const std::string& path, const std::vector<LossRecord>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << "step,loss\n";
  for (const auto& r : trace) out << r.step << ',' << format_double(r.loss) << '\n';
  if (!out) throw Error("write failed for " + path);
}

std::vector<LossRecord> read_loss_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "step,loss") throw FormatError(path + ": expected header 'step,loss'");
  std::vector<LossRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(path + ": bad row '" + line + "'");
    out.push_back({std::stoll(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
  }
  return out;
}

}  // namespace tadvit
