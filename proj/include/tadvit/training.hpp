// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Losses, AdamW, and the generic-pretrain -> dapt -> finetune stage runner.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tadvit/checkpoint.hpp"
#include "tadvit/config_text.hpp"
#include "tadvit/model.hpp"
#include "tadvit/synthdata.hpp"

namespace tadvit {

enum class StageKind { kGenericPretrain, kDapt, kFinetune };

std::string to_string(StageKind kind);
StageKind parse_stage_kind(std::string_view text);

struct MixtureEntry {
  std::string corpus;
  double ratio = 1.0;
  bool operator==(const MixtureEntry&) const = default;
};

/// "name:ratio,name:ratio"; a bare name means ratio 1.
std::vector<MixtureEntry> parse_mixture(std::string_view text);
std::string format_mixture(const std::vector<MixtureEntry>& mixture);

/// Stage file keys: stage, steps, epochs, epoch_samples, batch, lr, min_lr,
/// warmup, wd, beta1, beta2, seed, mixture. A positive `steps` wins over
/// epochs; otherwise steps = epochs * ceil(epoch_samples / batch).
struct StageConfig {
  StageKind stage = StageKind::kGenericPretrain;
  std::int64_t steps = 0;
  std::int64_t epochs = 0;
  std::int64_t epoch_samples = 256;
  int batch = 16;
  double lr = 1e-3;
  double min_lr = 1e-6;
  double warmup = 0.05;  // fraction of total steps
  double wd = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.95;
  std::uint64_t seed = 0;
  std::vector<MixtureEntry> mixture;  // empty: every corpus given, equal ratios

  /// Desk-scale recipe for a stage kind.
  static StageConfig defaults(StageKind kind);

  std::int64_t total_steps() const;
  void validate() const;
  KeyValueText to_text() const;
  /// Missing keys fall back to defaults(stage).
  static StageConfig from_text(const KeyValueText& text);
  static StageConfig load(const std::string& path);

  bool operator==(const StageConfig&) const = default;
};

// ---- losses ------------------------------------------------------------------

/// Masked reconstruction loss: MSE between decode(encode(visible input)) and
/// target over the masked tubelets only, normalised by the masked element
/// count; 0 when nothing is masked. `input` and `target` are [N x P]
/// normalised tubelets.
template <typename Scalar>
Var<Scalar> mae_loss(const BoundParameters<Scalar>& params, const Var<Scalar>& input,
                     const Var<Scalar>& target, const TubeMask& mask, const ModelConfig& cfg);

/// Convenience form on the window of `clip` starting at first_frame.
template <typename Scalar>
Var<Scalar> mae_loss(const BoundParameters<Scalar>& params, const VideoClip& clip, int first_frame,
                     const TubeMask& mask, const ModelConfig& cfg);

/// Two-class cross-entropy of the classifier logits. Labels outside {0, 1}
/// throw ConfigError.
template <typename Scalar>
Var<Scalar> classification_loss(const BoundParameters<Scalar>& params, const VideoClip& clip,
                                int first_frame, int label, const ModelConfig& cfg);

/// All tokens of the window [first_frame, first_frame + cfg.frames).
template <typename Scalar>
Var<Scalar> window_tokens(const BoundParameters<Scalar>& params, const VideoClip& clip,
                          int first_frame, const ModelConfig& cfg);

// ---- optimisation ------------------------------------------------------------

struct AdamW {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;  // not applied to rank-1 tensors (biases, gains, tokens)
};

struct OptimizerState {
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
  std::int64_t step = 0;

  static OptimizerState zeros_like(const ParameterSet<float>& params);
};

struct StepOutcome {
  bool applied = true;
  std::string message;  // why the step was skipped
};

/// One decoupled-weight-decay Adam update at learning rate lr. A non-finite
/// gradient aborts the step and leaves params and state untouched.
StepOutcome optimizer_step(ParameterSet<float>& params, const std::vector<Tensor<float>>& grads,
                           OptimizerState& state, double lr, const AdamW& hyper);

/// Linear warmup from 0 over floor(warmup * total) steps, then cosine decay
/// from lr to min_lr.
double learning_rate(const StageConfig& cfg, std::int64_t step, std::int64_t total);

// ---- stages ------------------------------------------------------------------

struct LossRecord {
  std::int64_t step = 0;
  double loss = 0.0;
};

struct StageResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> trace;
  std::map<std::string, std::int64_t> draws;  // samples drawn per corpus
  std::int64_t skipped_steps = 0;
  std::vector<std::string> skip_messages;
};

using CorpusSet = std::map<std::string, const Corpus*>;

/// Tags a stage accepts as its starting point, and the tag it produces.
std::vector<StageTag> accepted_init_tags(StageKind kind);
StageTag produced_tag(StageKind kind);

/// Throws StageError naming the expected tags when `tag` may not start
/// a stage of `kind`.
void check_stage_chain(StageKind kind, StageTag tag);

/// Runs one stage. Samples a corpus by mixture ratio, then a clip and a
/// window uniformly; fine-tuning labels a window by its last frame.
/// Deterministic per cfg.seed at a fixed thread count.
StageResult run_stage(const StageConfig& cfg, const Checkpoint& init, const CorpusSet& corpora);

void write_loss_trace(const std::string& path, const std::vector<LossRecord>& trace);
std::vector<LossRecord> read_loss_trace(const std::string& path);

/// Worker threads for batch-parallel work: TADVIT_THREADS if set, else the
/// OpenMP default.
int worker_threads();

}  // namespace tadvit
