// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include <omp.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "tadvit/checkpoint.hpp"
#include "tadvit/synthdata.hpp"

using namespace tadvit;
using tadvit::testing::ScratchDir;

namespace {

// tests/fixtures/fixture.clp (+ .labels.csv), written by make_fixtures: the clip of
// generate_corpus({driving-anomalous, count 1, seed 5, ratio 1, 8 frames, 32x32}).
const std::string kClipFixture = std::string(TADVIT_FIXTURES) + "/fixture.clp";

constexpr int kFeatures = 7;
using Features = std::array<double, kFeatures>;

/// Per-channel mean and spread, plus mean absolute frame-to-frame change.
Features pixel_statistics(const VideoClip& clip) {
  Features f{};
  std::array<double, 3> sum{}, sq{};
  const double n = static_cast<double>(clip.frames) * clip.height * clip.width;
  for (int t = 0; t < clip.frames; ++t)
    for (int y = 0; y < clip.height; ++y)
      for (int x = 0; x < clip.width; ++x)
        for (int c = 0; c < 3; ++c) {
          const double v = clip.at(t, y, x, c);
          sum[c] += v;
          sq[c] += v * v;
        }
  for (int c = 0; c < 3; ++c) {
    f[c] = sum[c] / n;
    f[3 + c] = std::sqrt(std::max(0.0, sq[c] / n - f[c] * f[c]));
  }
  double motion = 0;
  for (int t = 1; t < clip.frames; ++t)
    for (std::size_t i = 0; i < clip.frame_bytes(); ++i)
      motion += std::abs(static_cast<double>(clip.frame(t)[i]) - clip.frame(t - 1)[i]);
  f[6] = motion / (static_cast<double>(clip.frames - 1) * clip.frame_bytes());
  return f;
}

std::vector<Features> features_of(const Corpus& corpus) {
  std::vector<Features> out;
  for (const auto& c : corpus.clips) out.push_back(pixel_statistics(c.clip));
  return out;
}

}  // namespace

TEST_CASE("domain names parse and print") {
  for (auto d : {Domain::kGeneric, Domain::kDrivingNormal, Domain::kDrivingAnomalous})
    CHECK(parse_domain(to_string(d)) == d);
  CHECK_THROWS_AS(parse_domain("urban"), ConfigError);
}

TEST_CASE("labels follow the scene spec") {
  const auto normal = generate_clip(SceneSpec::sample(Domain::kDrivingNormal, 3));
  CHECK(normal.labels.size() == 48);
  CHECK(normal.anomalous_frames() == 0);

  auto spec = SceneSpec::sample(Domain::kDrivingAnomalous, 3);
  spec.onset = 20;
  const auto anomalous = generate_clip(spec);
  for (int t = 0; t < 48; ++t) CHECK(anomalous.labels[static_cast<std::size_t>(t)] == (t >= 20 ? 1 : 0));

  const auto generic = generate_clip(SceneSpec::sample(Domain::kGeneric, 3));
  CHECK(generic.anomalous_frames() == 0);
}

TEST_CASE("sampled scenes respect their domain") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto g = SceneSpec::sample(Domain::kGeneric, seed);
    CHECK(g.texture != TextureFamily::kAsphalt);
    CHECK(g.anomaly == AnomalyType::kNone);
    const auto a = SceneSpec::sample(Domain::kDrivingAnomalous, seed);
    CHECK(a.texture == TextureFamily::kAsphalt);
    CHECK(a.anomaly != AnomalyType::kNone);
    CHECK(a.onset >= 16);
    CHECK(a.onset <= 32);
    CHECK_NOTHROW(a.validate());
  }
}

TEST_CASE("inconsistent scene specs are rejected") {
  auto spec = SceneSpec::sample(Domain::kDrivingAnomalous, 1);
  spec.onset = 48;
  CHECK_THROWS_AS(generate_clip(spec), ConfigError);
  spec = SceneSpec::sample(Domain::kDrivingNormal, 1);
  spec.anomaly = AnomalyType::kSuddenStop;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = SceneSpec::sample(Domain::kGeneric, 1);
  spec.texture = TextureFamily::kAsphalt;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("generation is deterministic per seed") {
  for (auto d : {Domain::kGeneric, Domain::kDrivingNormal, Domain::kDrivingAnomalous}) {
    const auto a = generate_clip(SceneSpec::sample(d, 11));
    const auto b = generate_clip(SceneSpec::sample(d, 11));
    const auto c = generate_clip(SceneSpec::sample(d, 12));
    CHECK(a.clip == b.clip);
    CHECK(a.labels == b.labels);
    CHECK_FALSE(a.clip == c.clip);
  }
}

TEST_CASE("anomalies leave frames before the onset untouched") {
  for (auto type : {AnomalyType::kSuddenStop, AnomalyType::kCollisionCourse, AnomalyType::kErraticSwerve}) {
    auto early = SceneSpec::sample(Domain::kDrivingAnomalous, 21);
    early.anomaly = type;
    early.onset = 24;
    auto late = early;
    late.onset = 40;
    const auto a = generate_clip(early), b = generate_clip(late);
    INFO(to_string(type));
    for (int t = 0; t < 24; ++t)
      CHECK(std::equal(a.clip.frame(t), a.clip.frame(t) + a.clip.frame_bytes(), b.clip.frame(t)));
    CHECK_FALSE(std::equal(a.clip.frame(39), a.clip.frame(39) + a.clip.frame_bytes(), b.clip.frame(39)));
  }
}

TEST_CASE("CLP1 round-trip and header layout") {
  ScratchDir dir("clp");
  const auto clip = generate_clip(SceneSpec::sample(Domain::kDrivingAnomalous, 9, 12, 16, 24));
  const auto path = dir.file("c.clp");
  write_clip(path, clip);
  const auto bytes = read_file_bytes(path);
  REQUIRE(bytes.size() == 20 + 12 * 16 * 24 * 3);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CLP1");
  CHECK(bytes[4] == 12);
  CHECK(bytes[8] == 16);
  CHECK(bytes[12] == 24);
  CHECK(bytes[16] == 3);
  const auto back = read_clip(path);
  CHECK(back.clip == clip.clip);
  CHECK(back.labels == clip.labels);
  CHECK(back.id == "c");

  std::ifstream labels(labels_path_for(path));
  std::string header;
  std::getline(labels, header);
  CHECK(header == "frame,label");

  write_clip(dir.file("d.clp"), back);
  CHECK(read_file_bytes(dir.file("d.clp")) == bytes);
}

TEST_CASE("malformed clip files") {
  ScratchDir dir("clpbad");
  const auto clip = generate_clip(SceneSpec::sample(Domain::kDrivingNormal, 4, 4, 8, 8));
  const auto path = dir.file("c.clp");
  write_clip(path, clip);
  const auto good = read_file_bytes(path);

  auto truncated = good;
  truncated.resize(truncated.size() - 10);
  write_file_bytes(path, truncated);
  try {
    read_clip(path);
    FAIL("truncated clip accepted");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("expected 768 bytes") != std::string::npos);
    CHECK(msg.find("got 758") != std::string::npos);
  }

  auto oversized = good;
  oversized.push_back(7);
  write_file_bytes(path, oversized);
  CHECK_THROWS_AS(read_clip(path), FormatError);

  auto wrong_magic = good;
  wrong_magic[3] = '2';
  write_file_bytes(path, wrong_magic);
  CHECK_THROWS_AS(read_clip(path), FormatError);
  CHECK(read_file_bytes(path) == wrong_magic);

  write_file_bytes(path, std::vector<std::uint8_t>{'C', 'L', 'P', '1', 1, 0});
  CHECK_THROWS_AS(read_clip(path), FormatError);

  write_file_bytes(path, good);
  {
    std::ofstream bad(labels_path_for(path));
    bad << "frame,label\n0,1\n1,2\n";
  }
  CHECK_THROWS_AS(read_clip(path), FormatError);
  {
    std::ofstream partial(labels_path_for(path));
    partial << "frame,label\n0,1\n";
  }
  CHECK_THROWS_AS(read_clip(path), FormatError);
}

TEST_CASE("corpus composition") {
  CorpusOptions normal;
  normal.domain = Domain::kDrivingNormal;
  normal.count = 64;
  normal.seed = 7;
  normal.frames = 8;
  normal.height = normal.width = 32;
  const auto rows = manifest_of(generate_corpus(normal));
  CHECK(rows.size() == 64);
  int anomalous_frames = 0;
  for (const auto& r : rows) anomalous_frames += r.anomalous_frames;
  CHECK(anomalous_frames == 0);

  CorpusOptions mixed = normal;
  mixed.domain = Domain::kDrivingAnomalous;
  mixed.anomaly_ratio = 0.5;
  const auto corpus = generate_corpus(mixed);
  int anomalous_clips = 0;
  for (const auto& c : corpus.clips) anomalous_clips += c.anomalous_frames() > 0;
  CHECK(anomalous_clips == 32);
  CHECK(manifest_of(generate_corpus(mixed)) == manifest_of(corpus));

  mixed.count = 0;
  CHECK_THROWS_AS(generate_corpus(mixed), ConfigError);
}

TEST_CASE("corpus generation does not depend on the thread count") {
  CorpusOptions o;
  o.domain = Domain::kDrivingAnomalous;
  o.count = 12;
  o.seed = 3;
  o.frames = 8;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto serial = generate_corpus(o);
  omp_set_num_threads(4);
  const auto parallel = generate_corpus(o);
  omp_set_num_threads(saved);
  REQUIRE(serial.clips.size() == parallel.clips.size());
  for (std::size_t i = 0; i < serial.clips.size(); ++i) CHECK(serial.clips[i].clip == parallel.clips[i].clip);
}

TEST_CASE("build and load a corpus directory") {
  ScratchDir dir("corpus");
  CorpusOptions o;
  o.domain = Domain::kDrivingAnomalous;
  o.count = 6;
  o.seed = 17;
  o.frames = 10;
  o.height = o.width = 16;
  const auto rows = build_corpus(o, dir.str());
  CHECK(read_manifest(dir.file("manifest.csv")) == rows);
  const auto loaded = load_corpus(dir.str());
  const auto fresh = generate_corpus(o);
  CHECK(loaded.domain == "driving-anomalous");
  REQUIRE(loaded.clips.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(loaded.clips[i].id == fresh.clips[i].id);
    CHECK(loaded.clips[i].clip == fresh.clips[i].clip);
    CHECK(loaded.clips[i].labels == fresh.clips[i].labels);
  }

  ScratchDir again("corpus2");
  build_corpus(o, again.str());
  for (const auto& r : rows)
    CHECK(read_file_bytes(again.file(r.id + ".clp")) == read_file_bytes(dir.file(r.id + ".clp")));
  CHECK(read_file_bytes(again.file("manifest.csv")) == read_file_bytes(dir.file("manifest.csv")));
}

TEST_CASE("pixel statistics separate generic from driving clips") {
  auto corpus = [](Domain d, std::uint64_t seed) {
    CorpusOptions o;
    o.domain = d;
    o.count = 32;
    o.seed = seed;
    o.frames = 16;
    return generate_corpus(o);
  };
  const auto train_g = features_of(corpus(Domain::kGeneric, 1));
  const auto train_d = features_of(corpus(Domain::kDrivingAnomalous, 2));
  const auto test_g = features_of(corpus(Domain::kGeneric, 3));
  const auto test_d = features_of(corpus(Domain::kDrivingNormal, 4));

  // Nearest centroid on standardised features.
  Features mean{}, sd{}, cg{}, cd{};
  std::vector<Features> all(train_g);
  all.insert(all.end(), train_d.begin(), train_d.end());
  for (const auto& f : all)
    for (int k = 0; k < kFeatures; ++k) mean[k] += f[k] / all.size();
  for (const auto& f : all)
    for (int k = 0; k < kFeatures; ++k) sd[k] += (f[k] - mean[k]) * (f[k] - mean[k]) / all.size();
  for (auto& s : sd) s = std::sqrt(s) + 1e-9;
  auto z = [&](const Features& f) {
    Features out;
    for (int k = 0; k < kFeatures; ++k) out[k] = (f[k] - mean[k]) / sd[k];
    return out;
  };
  for (const auto& f : train_g)
    for (int k = 0; k < kFeatures; ++k) cg[k] += z(f)[k] / train_g.size();
  for (const auto& f : train_d)
    for (int k = 0; k < kFeatures; ++k) cd[k] += z(f)[k] / train_d.size();
  auto is_generic = [&](const Features& f) {
    double dg = 0, dd = 0;
    const auto v = z(f);
    for (int k = 0; k < kFeatures; ++k) {
      dg += (v[k] - cg[k]) * (v[k] - cg[k]);
      dd += (v[k] - cd[k]) * (v[k] - cd[k]);
    }
    return dg < dd;
  };
  int correct = 0;
  for (const auto& f : test_g) correct += is_generic(f);
  for (const auto& f : test_d) correct += !is_generic(f);
  const double accuracy = correct / static_cast<double>(test_g.size() + test_d.size());
  INFO("accuracy " << accuracy);
  CHECK(accuracy > 0.9);
}

TEST_CASE("committed clip fixture round-trips bitwise") {
  REQUIRE(std::filesystem::exists(kClipFixture));
  const auto clip = read_clip(kClipFixture);
  CHECK(clip.clip.frames == 8);
  CHECK(clip.clip.height == 32);
  CHECK(clip.labeled());
  CHECK(clip.anomalous_frames() > 0);
  ScratchDir dir("fixture");
  write_clip(dir.file("fixture.clp"), clip);
  CHECK(read_file_bytes(dir.file("fixture.clp")) == read_file_bytes(kClipFixture));
  CHECK(read_file_bytes(dir.file("fixture.labels.csv")) ==
        read_file_bytes(labels_path_for(kClipFixture)));
}
