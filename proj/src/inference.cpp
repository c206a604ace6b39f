// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include "tadvit/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>

#include "tadvit/memory.hpp"
#include "tadvit/training.hpp"

namespace tadvit {

bool FrameScoreSeries::labeled() const {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(), [](const FrameScore& r) { return r.label >= 0; });
}

Scorer::Scorer(const Checkpoint& ckpt) : cfg_(ckpt.config) {
  if (cfg_.head != HeadType::kLinearClassifier)
    throw StageError("scoring needs a classifier checkpoint; this one has an " + to_string(cfg_.head) +
                     " head");
  validate_checkpoint(ckpt);
  memory::tune_heap();
  params_ = BoundParameters<float>::freeze(ckpt.params);
}

double Scorer::window_score(const VideoClip& clip, int first) const {
  auto encoded = encode(params_, window_tokens(params_, clip, first, cfg_), cfg_);
  return static_cast<double>(classify(params_, encoded, cfg_));
}

FrameScoreSeries score_clip(const Scorer& scorer, const VideoClip& clip, int tau, int stride,
                            std::span<const std::uint8_t> labels, std::string clip_id) {
  if (tau != scorer.config().frames)
    throw ConfigError("window length " + std::to_string(tau) + " does not match the model's " +
                      std::to_string(scorer.config().frames) + " frames");
  if (stride < 1) throw ConfigError("stride must be at least 1, got " + std::to_string(stride));
  if (!labels.empty() && static_cast<int>(labels.size()) != clip.frames)
    throw ConfigError("clip has " + std::to_string(clip.frames) + " frames but " +
                      std::to_string(labels.size()) + " labels");

  FrameScoreSeries series;
  series.clip_id = std::move(clip_id);
  series.window = tau;
  series.records.resize(static_cast<std::size_t>(clip.frames));
  for (int t = 0; t < clip.frames; ++t) {
    series.records[static_cast<std::size_t>(t)].frame = t;
    series.records[static_cast<std::size_t>(t)].label = labels.empty() ? -1 : labels[static_cast<std::size_t>(t)];
  }

  if (clip.frames < tau) {
    VideoClip padded(tau, clip.height, clip.width, clip.channels, clip.fps);
    const int pad = tau - clip.frames;
    for (int t = 0; t < tau; ++t)
      std::copy(clip.frame(std::max(0, t - pad)), clip.frame(std::max(0, t - pad)) + clip.frame_bytes(),
                padded.frame(t));
    const double s = scorer.window_score(padded, 0);
    for (auto& r : series.records) r.score = s;
    series.windows_evaluated = 1;
    return series;
  }

  double latest = 0.0;
  for (int t = tau - 1; t < clip.frames; ++t) {
    if ((t - (tau - 1)) % stride == 0) {
      latest = scorer.window_score(clip, t - tau + 1);
      ++series.windows_evaluated;
      if (t == tau - 1)
        for (int b = 0; b < tau - 1; ++b) series.records[static_cast<std::size_t>(b)].score = latest;
    }
    series.records[static_cast<std::size_t>(t)].score = latest;
  }
  return series;
}

FrameScoreSeries score_clip(const Checkpoint& ckpt, const LabeledClip& clip, int tau, int stride) {
  return score_clip(Scorer(ckpt), clip.clip, tau, stride, clip.labels, clip.id);
}

std::vector<FrameScoreSeries> score_corpus(const Scorer& scorer, const Corpus& corpus, int tau,
                                           int stride) {
  std::vector<FrameScoreSeries> out(corpus.clips.size());
  std::exception_ptr failure;
  const int n = static_cast<int>(corpus.clips.size());
#pragma omp parallel for num_threads(worker_threads()) schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const auto& c = corpus.clips[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] = score_clip(scorer, c.clip, tau, stride, c.labels, c.id);
    } catch (...) {
#pragma omp critical(tadvit_score_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void write_scores(const std::string& path, const FrameScoreSeries& series) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << "frame,score,label\n";
  for (const auto& r : series.records) out << r.frame << ',' << format_double(r.score) << ',' << r.label << '\n';
  if (!out) throw Error("write failed for " + path);
}

FrameScoreSeries read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "frame,score,label") throw FormatError(path + ": expected header 'frame,score,label'");
  FrameScoreSeries series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto a = line.find(','), b = line.rfind(',');
    if (a == std::string::npos || a == b) throw FormatError(path + ": bad row '" + line + "'");
    FrameScore r;
    r.frame = std::stoi(line.substr(0, a));
    r.score = std::stod(line.substr(a + 1, b - a - 1));
    r.label = std::stoi(line.substr(b + 1));
    if (r.frame != static_cast<int>(series.records.size()))
      throw FormatError(path + ": frame " + std::to_string(r.frame) + " out of order");
    series.records.push_back(r);
  }
  return series;
}

KeyValueText BenchReport::to_text() const {
  KeyValueText t;
  t.set("params", params);
  t.set("weight_bytes", weight_bytes);
  t.set("analytic_peak_bytes", analytic_peak_bytes);
  t.set("measured_peak_bytes", measured_peak_bytes);
  t.set("fps", fps);
  t.set("frames_per_run", frames_per_run);
  t.set("windows_per_run", windows_per_run);
  t.set("timed_runs", timed_runs);
  return t;
}

BenchReport BenchReport::from_text(const KeyValueText& text) {
  BenchReport r;
  r.params = text.get_int("params");
  r.weight_bytes = text.get_int("weight_bytes");
  r.analytic_peak_bytes = text.get_int("analytic_peak_bytes");
  r.measured_peak_bytes = text.get_int("measured_peak_bytes");
  r.fps = text.get_double("fps");
  r.frames_per_run = text.get_int("frames_per_run");
  r.windows_per_run = text.get_int("windows_per_run");
  r.timed_runs = text.get_int("timed_runs");
  return r;
}

std::int64_t analytic_peak_bytes(const ModelConfig& cfg) {
  const std::int64_t n = cfg.tokens(), d = cfg.dim, hidden = cfg.hidden_dim();
  const std::int64_t weights = count_params(cfg) * 4;
  // Input tubelets and embeddings, then inside a block: LN output, qkv,
  // one head's score matrix and softmax, concatenated heads, MLP hidden.
  const std::int64_t activations = n * cfg.tubelet_values() + n * d * 6 + n * 3 * d + 2 * n * n + 2 * n * hidden;
  return weights + activations * 4;
}

BenchReport benchmark(const Checkpoint& ckpt, const BenchOptions& options) {
  if (options.timed_runs < 3) throw ConfigError("benchmark needs at least 3 timed runs");
  if (options.warmup_runs < 0) throw ConfigError("warmup runs must be non-negative");
  const ModelConfig& cfg = ckpt.config;
  const int frames = options.clip_frames > 0 ? options.clip_frames : cfg.frames;
  SceneSpec spec = SceneSpec::sample(Domain::kDrivingNormal, 1, frames, cfg.height, cfg.width);
  spec.channels = cfg.channels;
  const VideoClip clip = generate_clip(spec).clip;

  BenchReport report;
  report.params = count_params(cfg);
  report.weight_bytes = report.params * static_cast<std::int64_t>(sizeof(float));
  report.analytic_peak_bytes = analytic_peak_bytes(cfg);
  report.frames_per_run = frames;
  report.timed_runs = options.timed_runs;

  const std::size_t baseline = memory::current_bytes();
  memory::reset_peak();
  {
    const Scorer scorer(ckpt);
    for (int i = 0; i < options.warmup_runs; ++i) score_clip(scorer, clip, cfg.frames, options.stride);
    std::vector<double> fps;
    for (int i = 0; i < options.timed_runs; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto series = score_clip(scorer, clip, cfg.frames, options.stride);
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      report.windows_per_run = series.windows_evaluated;
      fps.push_back(static_cast<double>(frames) / std::max(dt.count(), 1e-9));
    }
    std::nth_element(fps.begin(), fps.begin() + static_cast<std::ptrdiff_t>(fps.size() / 2), fps.end());
    report.fps = fps[fps.size() / 2];
  }
  report.measured_peak_bytes = static_cast<std::int64_t>(memory::peak_bytes() - std::min(baseline, memory::peak_bytes()));
  return report;
}

}  // namespace tadvit
