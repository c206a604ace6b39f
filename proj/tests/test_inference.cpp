// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include "tadvit/inference.hpp"

#include <cmath>
#include <set>

#include "doctest.h"
#include "gradient_cases.hpp"

using namespace tadvit;
using tadvit::testing::micro_config;
using tadvit::testing::ScratchDir;

namespace {

/// Micro classifier with every weight random, so each input pixel reaches
/// the score.
Checkpoint random_classifier(std::uint64_t seed) {
  Checkpoint ckpt;
  ckpt.config = micro_config(HeadType::kLinearClassifier);
  ckpt.stage = StageTag::kFinetuned;
  rnd::Engine rng(seed);
  ckpt.params = tadvit::testing::probe_parameters(ckpt.config, rng);
  return ckpt;
}

VideoClip driving_clip(int frames, std::uint64_t seed) {
  return generate_clip(SceneSpec::sample(Domain::kDrivingAnomalous, seed, frames, 16, 16)).clip;
}

std::set<double> distinct_scores(const FrameScoreSeries& s) {
  std::set<double> out;
  for (const auto& r : s.records) out.insert(r.score);
  return out;
}

}  // namespace

TEST_CASE("a clip of exactly one window gets one score") {
  const Scorer scorer(random_classifier(1));
  const auto s = score_clip(scorer, driving_clip(4, 1), 4, 1);
  CHECK(s.records.size() == 4);
  CHECK(s.windows_evaluated == 1);
  CHECK(distinct_scores(s).size() == 1);
  CHECK(s.window == 4);
  CHECK_FALSE(s.labeled());
}

TEST_CASE("window count and warmup backfill") {
  const Scorer scorer(random_classifier(2));
  const auto clip = driving_clip(6, 2);
  const auto s = score_clip(scorer, clip, 4, 1);
  REQUIRE(s.records.size() == 6);
  CHECK(s.windows_evaluated == 3);
  for (int t = 0; t < 6; ++t) CHECK(s.records[static_cast<std::size_t>(t)].frame == t);
  const double first = scorer.window_score(clip, 0);
  for (int t = 0; t < 4; ++t) CHECK(s.records[static_cast<std::size_t>(t)].score == first);
  CHECK(s.records[4].score == scorer.window_score(clip, 1));
  CHECK(s.records[5].score == scorer.window_score(clip, 2));
  CHECK(distinct_scores(s).size() == 3);
}

TEST_CASE("a constant clip scores every frame the same") {
  const Scorer scorer(random_classifier(3));
  VideoClip clip(20, 16, 16, 3);
  for (std::size_t i = 0; i < clip.frame_bytes(); ++i) clip.pixels[i] = static_cast<std::uint8_t>(i % 251);
  for (int t = 1; t < 20; ++t) std::copy(clip.frame(0), clip.frame(0) + clip.frame_bytes(), clip.frame(t));
  const auto s = score_clip(scorer, clip, 4, 1);
  CHECK(s.windows_evaluated == 17);
  CHECK(distinct_scores(s).size() == 1);
}

TEST_CASE("stride holds the latest score and saves evaluations") {
  const Scorer scorer(random_classifier(4));
  const auto clip = driving_clip(48, 4);
  const auto one = score_clip(scorer, clip, 4, 1);
  const auto two = score_clip(scorer, clip, 4, 2);
  CHECK(one.windows_evaluated == 45);
  CHECK(two.windows_evaluated == 23);
  CHECK(static_cast<double>(one.windows_evaluated) / two.windows_evaluated >= 1.8);
  for (int t = 3; t < 48; ++t) {
    const int last = 3 + ((t - 3) / 2) * 2;
    CHECK(two.records[static_cast<std::size_t>(t)].score == one.records[static_cast<std::size_t>(last)].score);
  }
  for (int stride : {1, 2, 3, 5, 7, 16, 45, 100}) {
    const auto s = score_clip(scorer, clip, 4, stride);
    CHECK(s.records.size() == 48);
    CHECK(s.windows_evaluated == 1 + 44 / stride);
    for (const auto& r : s.records) {
      CHECK(std::isfinite(r.score));
      CHECK(r.score >= 0.0);
      CHECK(r.score <= 1.0);
    }
  }
}

TEST_CASE("clips shorter than the window are padded with their first frame") {
  const Scorer scorer(random_classifier(5));
  for (int frames : {1, 2, 3}) {
    const auto clip = driving_clip(frames, 5);
    const auto s = score_clip(scorer, clip, 4, 1);
    REQUIRE(s.records.size() == static_cast<std::size_t>(frames));
    CHECK(s.windows_evaluated == 1);
    VideoClip padded(4, 16, 16, 3);
    for (int t = 0; t < 4; ++t) {
      const int src = std::max(0, t - (4 - frames));
      std::copy(clip.frame(src), clip.frame(src) + clip.frame_bytes(), padded.frame(t));
    }
    for (const auto& r : s.records) CHECK(r.score == scorer.window_score(padded, 0));
  }
}

TEST_CASE("scores depend only on the current window") {
  const Scorer scorer(random_classifier(6));
  const auto clip = driving_clip(16, 6);
  const auto base = score_clip(scorer, clip, 4, 1);
  for (int changed : {0, 5, 9, 15}) {
    auto perturbed = clip;
    for (std::size_t i = 0; i < perturbed.frame_bytes(); ++i)
      perturbed.frame(changed)[i] = static_cast<std::uint8_t>(255 - perturbed.frame(changed)[i]);
    const auto s = score_clip(scorer, perturbed, 4, 1);
    for (int t = 3; t < 16; ++t) {
      const bool inside = changed >= t - 3 && changed <= t;
      INFO("frame " << changed << " changed, score at " << t);
      if (inside)
        CHECK(s.records[static_cast<std::size_t>(t)].score != base.records[static_cast<std::size_t>(t)].score);
      else
        CHECK(s.records[static_cast<std::size_t>(t)].score == base.records[static_cast<std::size_t>(t)].score);
    }
  }
}

TEST_CASE("corpus scoring is reproducible") {
  CorpusOptions o;
  o.domain = Domain::kDrivingAnomalous;
  o.count = 10;
  o.seed = 7;
  o.frames = 12;
  o.height = o.width = 16;
  const auto corpus = generate_corpus(o);
  const auto ckpt = random_classifier(7);
  const Scorer scorer(ckpt);
  const auto a = score_corpus(scorer, corpus, 4, 1);
  const auto b = score_corpus(Scorer(ckpt), corpus, 4, 1);
  CHECK(a == b);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].clip_id == corpus.clips[i].id);
    CHECK(a[i].labeled());
    CHECK(a[i] == score_clip(ckpt, corpus.clips[i], 4, 1));
  }
}

TEST_CASE("scoring preconditions") {
  const auto ckpt = random_classifier(8);
  const Scorer scorer(ckpt);
  const auto clip = driving_clip(8, 8);
  CHECK_THROWS_AS(score_clip(scorer, clip, 5, 1), ConfigError);
  CHECK_THROWS_AS(score_clip(scorer, clip, 4, 0), ConfigError);
  const std::vector<std::uint8_t> labels(3, 0);
  CHECK_THROWS_AS(score_clip(scorer, clip, 4, 1, labels), ConfigError);
  CHECK_THROWS_AS(Scorer(random_checkpoint(micro_config(HeadType::kMaeDecoder), 1)), StageError);
}

TEST_CASE("score csv round-trip") {
  ScratchDir dir("scores");
  const auto lc = generate_clip(SceneSpec::sample(Domain::kDrivingAnomalous, 9, 10, 16, 16));
  const auto s = score_clip(random_classifier(9), lc, 4, 1);
  write_scores(dir.file("s.csv"), s);
  const auto back = read_scores(dir.file("s.csv"));
  CHECK(back.records == s.records);
  auto unlabeled = s;
  for (auto& r : unlabeled.records) r.label = -1;
  write_scores(dir.file("u.csv"), unlabeled);
  CHECK(read_scores(dir.file("u.csv")).records == unlabeled.records);
}

TEST_CASE("benchmark report") {
  const auto ckpt = random_classifier(10);
  BenchOptions options;
  options.clip_frames = 12;
  const auto report = benchmark(ckpt, options);
  CHECK(report.params == count_params(ckpt.config));
  CHECK(report.weight_bytes == 4 * report.params);
  CHECK(report.fps > 0.0);
  CHECK(report.measured_peak_bytes >= report.weight_bytes);
  CHECK(report.analytic_peak_bytes > report.weight_bytes);
  CHECK(report.windows_per_run == 9);
  CHECK(report.frames_per_run == 12);
  CHECK(BenchReport::from_text(KeyValueText::parse(report.to_text().to_string())) == report);

  options.timed_runs = 2;
  CHECK_THROWS_AS(benchmark(ckpt, options), ConfigError);
}
