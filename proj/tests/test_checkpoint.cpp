// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "gradient_cases.hpp"
#include "tadvit/checkpoint.hpp"

using namespace tadvit;
using tadvit::testing::ScratchDir;

namespace {

// tests/fixtures/micro.mvtc, written by make_fixtures, holds
// random_checkpoint(micro_config(kMaeDecoder), 2026).
const std::string kFixture = std::string(TADVIT_FIXTURES) + "/micro.mvtc";

Checkpoint sample_checkpoint() {
  auto ckpt = random_checkpoint(tadvit::testing::micro_config(HeadType::kMaeDecoder), 31);
  ckpt.stage = StageTag::kDapt;
  // Payload values that a lossy text or float path would disturb.
  auto& bias = ckpt.params.at("patch_embed.bias");
  bias[0] = -0.0f;
  bias[1] = std::numeric_limits<float>::denorm_min();
  bias[2] = std::numeric_limits<float>::max();
  bias[3] = std::nextafter(1.0f, 2.0f);
  return ckpt;
}

}  // namespace

TEST_CASE("stage tags parse and print") {
  for (auto tag : {StageTag::kInit, StageTag::kGeneric, StageTag::kDapt, StageTag::kFinetuned})
    CHECK(parse_stage_tag(to_string(tag)) == tag);
  CHECK_THROWS_AS(parse_stage_tag("pretrained"), FormatError);
}

TEST_CASE("checkpoint bytes round-trip bitwise") {
  const auto ckpt = sample_checkpoint();
  const auto bytes = encode_checkpoint(ckpt);
  const auto back = decode_checkpoint(bytes);
  CHECK(back == ckpt);
  CHECK(std::signbit(back.params.at("patch_embed.bias")[0]));
  CHECK(encode_checkpoint(back) == bytes);

  ScratchDir dir("ckpt");
  save_checkpoint(ckpt, dir.file("a.mvtc"));
  CHECK(read_file_bytes(dir.file("a.mvtc")) == bytes);
  CHECK(load_checkpoint(dir.file("a.mvtc")) == ckpt);
}

TEST_CASE("header layout is little-endian") {
  const auto bytes = encode_checkpoint(sample_checkpoint());
  REQUIRE(bytes.size() > 12);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MVTC");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  const std::uint32_t text_len = bytes[8] | bytes[9] << 8 | bytes[10] << 16 | bytes[11] << 24;
  const std::string text(bytes.begin() + 12, bytes.begin() + 12 + text_len);
  CHECK(text.find("stage = dapt") != std::string::npos);
  CHECK(text.find("dim = 32") != std::string::npos);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto bytes = encode_checkpoint(sample_checkpoint());

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK_THROWS_AS(decode_checkpoint(bad_version), FormatError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), FormatError);

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{7}, std::size_t{20},
                          bytes.size() / 2, bytes.size() - 1}) {
    INFO("truncated to " << cut);
    CHECK_THROWS_AS(decode_checkpoint(std::span(bytes.data(), cut)), FormatError);
  }
  try {
    decode_checkpoint(std::span(bytes.data(), bytes.size() - 1));
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(std::to_string(bytes.size())) != std::string::npos);
  }
}

TEST_CASE("validation catches missing and misshapen tensors") {
  auto ckpt = sample_checkpoint();
  CHECK_NOTHROW(validate_checkpoint(ckpt));

  Checkpoint missing = ckpt;
  missing.params = {};
  for (const auto& e : ckpt.params.entries())
    if (e.name != "norm.gain") missing.params.add(e.name, e.value);
  CHECK_THROWS_AS(validate_checkpoint(missing), FormatError);

  Checkpoint misshapen = ckpt;
  misshapen.params.at("norm.gain") = Tensor<float>({ckpt.config.dim + 1});
  CHECK_THROWS_AS(encode_checkpoint(misshapen), FormatError);
}

TEST_CASE("classifier head swap keeps the encoder") {
  const auto mae = sample_checkpoint();
  const auto cls = with_classifier_head(mae);
  CHECK(cls.config.head == HeadType::kLinearClassifier);
  CHECK(cls.stage == mae.stage);
  CHECK_NOTHROW(validate_checkpoint(cls));
  for (const auto& e : cls.params.entries()) {
    if (e.name.starts_with("head.")) {
      CHECK(e.value.array().isZero(0.0f));
    } else {
      CHECK(e.value == mae.params.at(e.name));
    }
    CHECK_FALSE(e.name.starts_with("decoder."));
  }
  CHECK(with_classifier_head(cls) == cls);
}

TEST_CASE("committed fixture round-trips bitwise") {
  REQUIRE(std::filesystem::exists(kFixture));
  const auto bytes = read_file_bytes(kFixture);
  const auto ckpt = decode_checkpoint(bytes);
  CHECK(encode_checkpoint(ckpt) == bytes);
  // Initialisation is seeded, so the fixture also pins the weights.
  CHECK(ckpt == random_checkpoint(tadvit::testing::micro_config(HeadType::kMaeDecoder), 2026));
}
