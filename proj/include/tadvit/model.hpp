// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Plain video ViT: tubelet embedding with fixed 3D sin-cos positions,
// pre-norm transformer blocks, and either a linear classification head on
// mean-pooled tokens or a lightweight MAE decoder.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tadvit/autodiff.hpp"
#include "tadvit/config_text.hpp"
#include "tadvit/masking.hpp"
#include "tadvit/video.hpp"

namespace tadvit {

enum class HeadType { kMaeDecoder, kLinearClassifier };

std::string to_string(HeadType head);
HeadType parse_head_type(std::string_view text);

struct ModelConfig {
  int frames = 16;
  int height = 64;
  int width = 64;
  int channels = 3;
  int tubelet_t = 2;
  int tubelet_h = 16;
  int tubelet_w = 16;
  int dim = 64;
  int depth = 4;
  int heads = 4;
  double mlp_ratio = 4.0;
  int decoder_dim = 32;
  int decoder_depth = 1;
  int decoder_heads = 2;
  HeadType head = HeadType::kMaeDecoder;
  double mask_ratio = 0.75;

  /// Throws ConfigError on any violated divisibility or range constraint.
  void validate() const;

  TokenGrid grid() const { return {frames / tubelet_t, height / tubelet_h, width / tubelet_w}; }
  Index tokens() const { return grid().size(); }
  /// Values per tubelet, t_t * t_h * t_w * C.
  Index tubelet_values() const {
    return static_cast<Index>(tubelet_t) * tubelet_h * tubelet_w * channels;
  }
  Index hidden_dim() const;
  Index decoder_hidden_dim() const;

  KeyValueText to_text() const;
  static ModelConfig from_text(const KeyValueText& text);

  /// 64x64x16, tubelet 2x16x16, d=64; the configuration used for training runs.
  static ModelConfig desk();
  /// 224x224x16 with tubelet 2x16x16 and the ViT-S/B/L encoder widths.
  static ModelConfig vit_small();
  static ModelConfig vit_base();
  static ModelConfig vit_large();
  /// Looks up "desk", "vit-s", "vit-b", "vit-l".
  static ModelConfig preset(std::string_view name);

  bool operator==(const ModelConfig&) const = default;
};

enum class InitKind { kTruncatedNormal, kZeros, kOnes };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitKind init;
};

/// Every trainable tensor of the model described by cfg, in a fixed order.
std::vector<ParamSpec> parameter_registry(const ModelConfig& cfg);

/// Trainable scalar count from the closed-form layer sizes.
std::int64_t count_params(const ModelConfig& cfg);

/// Named tensors in registry order.
template <typename Scalar>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor<Scalar> value;
    bool operator==(const Entry&) const = default;
  };

  void add(std::string name, Tensor<Scalar> value);
  bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }
  const Tensor<Scalar>& at(std::string_view name) const;
  Tensor<Scalar>& at(std::string_view name);
  std::size_t size() const { return entries_.size(); }
  Index scalar_count() const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  template <typename Other>
  ParameterSet<Other> cast() const {
    ParameterSet<Other> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<Other>());
    return out;
  }

  bool operator==(const ParameterSet& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Truncated-normal(0.02) weights, zero biases and classifier head, unit gains.
ParameterSet<float> init_parameters(const ModelConfig& cfg, std::uint64_t seed);

/// Parameters exposed as Vars: either gradient-tracking leaves on a tape
/// (training) or constants (inference; reusable across forward passes).
template <typename Scalar>
class BoundParameters {
 public:
  static BoundParameters track(Tape<Scalar>& tape, const ParameterSet<Scalar>& params);
  static BoundParameters freeze(const ParameterSet<Scalar>& params);

  const Var<Scalar>& operator[](std::string_view name) const;
  bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }
  /// Accumulated gradients in registry order.
  std::vector<Tensor<Scalar>> gradients() const;

 private:
  std::vector<Var<Scalar>> vars_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Fixed 3D sin-cos positional encoding, one row per token in raster order.
/// The feature dimension is split into temporal, row and column parts.
template <typename Scalar>
const Tensor<Scalar>& positional_encoding(const TokenGrid& grid, Index dim);

/// Pixel normalisation applied before embedding: (x / 255 - 0.5) / 0.5.
inline constexpr double kPixelMean = 0.5;
inline constexpr double kPixelStd = 0.5;

/// Flattened, normalised tubelets of frames [first_frame, first_frame + T)
/// -> [N x t_t*t_h*t_w*C]; within a tubelet values are ordered (t, y, x, c).
template <typename Scalar>
Tensor<Scalar> extract_tubelets(const VideoClip& clip, int first_frame, const ModelConfig& cfg);

/// Linear tubelet projection plus positional encoding for the tokens listed
/// in token_ids (rows of `tubelets` correspond to token_ids one-to-one).
template <typename Scalar>
Var<Scalar> embed_tubelets(const BoundParameters<Scalar>& params, const Var<Scalar>& tubelets,
                           std::span<const Index> token_ids, const ModelConfig& cfg);

/// All N tokens of a clip whose dimensions match cfg exactly.
template <typename Scalar>
Var<Scalar> tubelet_embed(const BoundParameters<Scalar>& params, const VideoClip& clip,
                          const ModelConfig& cfg);

/// One pre-norm block: x + MHSA(LN(x)), then + MLP(LN(.)). `prefix` selects
/// the parameter group ("blocks.3." or "decoder.blocks.0.").
template <typename Scalar>
Var<Scalar> transformer_block(const BoundParameters<Scalar>& params, const std::string& prefix,
                              const Var<Scalar>& x, int heads);

/// The L encoder blocks; shape preserving. Depth 0 is the identity.
template <typename Scalar>
Var<Scalar> encode(const BoundParameters<Scalar>& params, const Var<Scalar>& tokens,
                   const ModelConfig& cfg);

/// Final encoder norm, mean pool, linear map to [1 x 2] logits.
template <typename Scalar>
Var<Scalar> classifier_logits(const BoundParameters<Scalar>& params, const Var<Scalar>& encoded,
                              const ModelConfig& cfg);

/// Probability of the anomalous class (index 1) under a two-way softmax.
template <typename Scalar>
Scalar anomaly_probability(const Tensor<Scalar>& logits);

template <typename Scalar>
Scalar classify(const BoundParameters<Scalar>& params, const Var<Scalar>& encoded,
                const ModelConfig& cfg);

/// MAE decoder over the normalised visible encoder output: project to d',
/// place visible rows at their sites with the shared mask token elsewhere,
/// add positions, run the decoder blocks, predict [N x tubelet_values].
template <typename Scalar>
Var<Scalar> decode_mae(const BoundParameters<Scalar>& params, const Var<Scalar>& visible_encoded,
                       const TubeMask& mask, const ModelConfig& cfg);

/// Full masked-autoencoder pass from flattened tubelets [N x P]: embed only
/// the visible tubelets, encode, normalise, decode.
template <typename Scalar>
Var<Scalar> mae_reconstruct(const BoundParameters<Scalar>& params, const Var<Scalar>& tubelets,
                            const TubeMask& mask, const ModelConfig& cfg);

inline constexpr double kLayerNormEps = 1e-6;

}  // namespace tadvit
