// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// MVTC checkpoint files:
//   "MVTC" | u32 version (=1) | u32 config length | config text (UTF-8)
//   | u32 tensor count | per tensor: u16 name length, name, u8 rank,
//   u32 dims[rank], f32 payload
// All integers and floats little-endian. The config text is the model
// config in key = value form plus a "stage" line.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tadvit/model.hpp"

namespace tadvit {

/// Where a set of weights sits in the generic -> dapt -> finetuned chain.
/// kInit marks freshly initialised weights.
enum class StageTag { kInit, kGeneric, kDapt, kFinetuned };

std::string to_string(StageTag tag);
StageTag parse_stage_tag(std::string_view text);

struct Checkpoint {
  ModelConfig config;
  StageTag stage = StageTag::kInit;
  ParameterSet<float> params;

  bool operator==(const Checkpoint&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Fresh weights for cfg, tagged kInit.
Checkpoint random_checkpoint(const ModelConfig& cfg, std::uint64_t seed);

/// Throws FormatError unless every registry parameter appears exactly once
/// with its registry shape.
void validate_checkpoint(const Checkpoint& ckpt);

/// Same encoder weights with the MAE decoder dropped and a zero-initialised
/// linear classifier attached. Classifier checkpoints are returned unchanged.
Checkpoint with_classifier_head(const Checkpoint& ckpt);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace tadvit
