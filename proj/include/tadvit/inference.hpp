// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sliding-window frame scoring and the throughput / memory benchmark.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tadvit/checkpoint.hpp"
#include "tadvit/config_text.hpp"
#include "tadvit/synthdata.hpp"

namespace tadvit {

struct FrameScore {
  int frame = 0;
  double score = 0.0;
  int label = -1;  // -1 when unknown
  bool operator==(const FrameScore&) const = default;
};

struct FrameScoreSeries {
  std::string clip_id;
  int window = 0;
  std::vector<FrameScore> records;  // one per clip frame, in order
  std::int64_t windows_evaluated = 0;

  bool labeled() const;
  bool operator==(const FrameScoreSeries&) const = default;
};

/// Read-only scoring view of a classifier checkpoint. Safe to share across
/// threads.
class Scorer {
 public:
  explicit Scorer(const Checkpoint& ckpt);

  const ModelConfig& config() const { return cfg_; }
  /// Anomaly probability of the window [first, first + frames).
  double window_score(const VideoClip& clip, int first) const;

 private:
  ModelConfig cfg_;
  BoundParameters<float> params_;
};

/// Scores every frame: windows end at t = tau-1, tau-1+stride, ...; frames
/// before the first window take its score and frames between evaluations
/// hold the latest one. A clip shorter than tau is scored once, on a window
/// left-padded by repeating frame 0. `labels` may be empty.
FrameScoreSeries score_clip(const Scorer& scorer, const VideoClip& clip, int tau, int stride,
                            std::span<const std::uint8_t> labels = {}, std::string clip_id = {});

FrameScoreSeries score_clip(const Checkpoint& ckpt, const LabeledClip& clip, int tau, int stride);

/// Clips are scored concurrently; output order follows the corpus.
std::vector<FrameScoreSeries> score_corpus(const Scorer& scorer, const Corpus& corpus, int tau,
                                           int stride);

/// "frame,score,label"
void write_scores(const std::string& path, const FrameScoreSeries& series);
FrameScoreSeries read_scores(const std::string& path);

struct BenchOptions {
  int clip_frames = 0;  // 0: one window of the model's length
  int stride = 1;
  int warmup_runs = 1;
  int timed_runs = 3;
};

struct BenchReport {
  std::int64_t params = 0;
  std::int64_t weight_bytes = 0;
  std::int64_t analytic_peak_bytes = 0;
  std::int64_t measured_peak_bytes = 0;
  double fps = 0.0;  // median over timed runs
  std::int64_t frames_per_run = 0;
  std::int64_t windows_per_run = 0;
  std::int64_t timed_runs = 0;

  KeyValueText to_text() const;
  static BenchReport from_text(const KeyValueText& text);
  bool operator==(const BenchReport&) const = default;
};

/// Weights plus the largest single-block working set of one forward pass.
std::int64_t analytic_peak_bytes(const ModelConfig& cfg);

/// Scores a synthetic driving clip repeatedly. The measured peak is the
/// tensor allocator high-water mark above the level at entry, so it covers
/// the scorer's weight copy and every activation.
BenchReport benchmark(const Checkpoint& ckpt, const BenchOptions& options);

}  // namespace tadvit
