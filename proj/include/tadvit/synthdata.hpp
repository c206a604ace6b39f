// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural ego-view video corpora with frame-level anomaly labels.
//
// Driving domains render a perspective ground plane (road, lane markings,
// verge) scrolling with ego speed, plus box-shaped vehicles. The generic
// domain renders textured backgrounds with bouncing shapes and no road
// geometry. The background texture family is the domain-shift knob.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tadvit/video.hpp"

namespace tadvit {

enum class Domain { kGeneric, kDrivingNormal, kDrivingAnomalous };
enum class AnomalyType { kNone, kSuddenStop, kCollisionCourse, kErraticSwerve };
enum class TextureFamily { kAsphalt, kStripes, kChecker, kNoise };

std::string to_string(Domain domain);
Domain parse_domain(std::string_view text);
std::string to_string(AnomalyType type);

struct SceneSpec {
  Domain domain = Domain::kDrivingNormal;
  int frames = 48;
  int height = 64;
  int width = 64;
  int channels = 3;
  double fps = 10.0;
  double ego_speed = 0.4;  // ground units per frame
  int agent_count = 2;
  TextureFamily texture = TextureFamily::kAsphalt;
  AnomalyType anomaly = AnomalyType::kNone;
  int onset = -1;  // first anomalous frame, -1 for normal clips
  std::uint64_t seed = 0;

  /// Draws scene parameters for a domain from the seed. Anomalous scenes get
  /// an onset in the middle third of the clip and a random anomaly type.
  static SceneSpec sample(Domain domain, std::uint64_t seed, int frames = 48, int height = 64,
                          int width = 64);
  void validate() const;
};

struct LabeledClip {
  std::string id;
  VideoClip clip;
  std::vector<std::uint8_t> labels;  // one per frame; empty when unknown
  std::optional<SceneSpec> spec;

  bool labeled() const { return !labels.empty(); }
  int anomalous_frames() const;
};

/// Deterministic per spec.seed. Frames >= onset of an anomalous scene are
/// labelled 1, everything else 0.
LabeledClip generate_clip(const SceneSpec& spec);

// ---- CLP1 clip files -------------------------------------------------------
// "CLP1" | u32 T | u32 H | u32 W | u32 C | T*H*W*C bytes (little-endian u32).
// Labels live in a sibling "<stem>.labels.csv" with header "frame,label".

void write_clip(const std::string& path, const LabeledClip& clip);
LabeledClip read_clip(const std::string& path);
std::string labels_path_for(const std::string& clip_path);

// ---- corpora ---------------------------------------------------------------

struct CorpusOptions {
  Domain domain = Domain::kDrivingNormal;
  int count = 64;
  std::uint64_t seed = 0;
  double anomaly_ratio = 0.5;  // only used by kDrivingAnomalous
  int frames = 48;
  int height = 64;
  int width = 64;
};

struct ManifestRow {
  std::string id;
  std::string domain;
  int frames = 0;
  int anomalous_frames = 0;
  std::uint64_t seed = 0;
  bool operator==(const ManifestRow&) const = default;
};

struct Corpus {
  std::string domain;
  std::vector<LabeledClip> clips;
};

/// Seed of clip `index` in a corpus seeded with `corpus_seed`.
std::uint64_t derive_seed(std::uint64_t corpus_seed, std::uint64_t index);

/// In-memory corpus: exactly round(count * anomaly_ratio) anomalous clips for
/// the anomalous domain, the rest normal driving.
Corpus generate_corpus(const CorpusOptions& options);
std::vector<ManifestRow> manifest_of(const Corpus& corpus);

/// Writes clips, label files, manifest.csv and corpus.cfg under dir.
std::vector<ManifestRow> build_corpus(const CorpusOptions& options, const std::string& dir);
Corpus load_corpus(const std::string& dir);

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::string& path);

}  // namespace tadvit
