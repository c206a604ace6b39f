// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include "tadvit/model.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "tadvit/random.hpp"

namespace tadvit {

std::string to_string(HeadType head) {
  return head == HeadType::kMaeDecoder ? "mae-decoder" : "linear-classifier";
}

HeadType parse_head_type(std::string_view text) {
  if (text == "mae-decoder") return HeadType::kMaeDecoder;
  if (text == "linear-classifier") return HeadType::kLinearClassifier;
  throw ConfigError("unknown head type '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  if (frames <= 0 || height <= 0 || width <= 0 || channels <= 0) fail("clip dimensions must be positive");
  if (tubelet_t <= 0 || tubelet_h <= 0 || tubelet_w <= 0) fail("tubelet dimensions must be positive");
  if (frames % tubelet_t) fail("frames " + std::to_string(frames) + " not divisible by tubelet " + std::to_string(tubelet_t));
  if (height % tubelet_h) fail("height " + std::to_string(height) + " not divisible by tubelet " + std::to_string(tubelet_h));
  if (width % tubelet_w) fail("width " + std::to_string(width) + " not divisible by tubelet " + std::to_string(tubelet_w));
  if (dim <= 0 || heads <= 0 || dim % heads) fail("dim must be a positive multiple of heads");
  if (dim % 2) fail("dim must be even for sin-cos positions");
  if (depth < 0 || decoder_depth < 0) fail("depth must be non-negative");
  if (!(mlp_ratio > 0)) fail("mlp_ratio must be positive");
  if (head == HeadType::kMaeDecoder) {
    if (decoder_dim <= 0 || decoder_heads <= 0 || decoder_dim % decoder_heads)
      fail("decoder_dim must be a positive multiple of decoder_heads");
    if (decoder_dim % 2) fail("decoder_dim must be even for sin-cos positions");
  }
  if (!(mask_ratio >= 0 && mask_ratio < 1)) fail("mask_ratio must lie in [0, 1)");
}

Index ModelConfig::hidden_dim() const { return std::llround(dim * mlp_ratio); }
Index ModelConfig::decoder_hidden_dim() const { return std::llround(decoder_dim * mlp_ratio); }

KeyValueText ModelConfig::to_text() const {
  KeyValueText kv;
  kv.set("frames", frames);
  kv.set("height", height);
  kv.set("width", width);
  kv.set("channels", channels);
  kv.set("tubelet_t", tubelet_t);
  kv.set("tubelet_h", tubelet_h);
  kv.set("tubelet_w", tubelet_w);
  kv.set("dim", dim);
  kv.set("depth", depth);
  kv.set("heads", heads);
  kv.set("mlp_ratio", mlp_ratio);
  kv.set("decoder_dim", decoder_dim);
  kv.set("decoder_depth", decoder_depth);
  kv.set("decoder_heads", decoder_heads);
  kv.set("head", to_string(head));
  kv.set("mask_ratio", mask_ratio);
  return kv;
}

ModelConfig ModelConfig::from_text(const KeyValueText& kv) {
  ModelConfig c;
  auto i = [&](const char* key) { return static_cast<int>(kv.get_int(key)); };
  c.frames = i("frames");
  c.height = i("height");
  c.width = i("width");
  c.channels = i("channels");
  c.tubelet_t = i("tubelet_t");
  c.tubelet_h = i("tubelet_h");
  c.tubelet_w = i("tubelet_w");
  c.dim = i("dim");
  c.depth = i("depth");
  c.heads = i("heads");
  c.mlp_ratio = kv.get_double("mlp_ratio");
  c.decoder_dim = i("decoder_dim");
  c.decoder_depth = i("decoder_depth");
  c.decoder_heads = i("decoder_heads");
  c.head = parse_head_type(kv.at("head"));
  c.mask_ratio = kv.get_double("mask_ratio");
  c.validate();
  return c;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

namespace {

ModelConfig vit_video(int dim, int depth, int heads, int decoder_dim, int decoder_heads) {
  ModelConfig c;
  c.frames = 16;
  c.height = 224;
  c.width = 224;
  c.tubelet_t = 2;
  c.tubelet_h = 16;
  c.tubelet_w = 16;
  c.dim = dim;
  c.depth = depth;
  c.heads = heads;
  c.decoder_dim = decoder_dim;
  c.decoder_depth = 4;
  c.decoder_heads = decoder_heads;
  c.head = HeadType::kLinearClassifier;
  return c;
}

}  // namespace

ModelConfig ModelConfig::vit_small() { return vit_video(384, 12, 6, 192, 3); }
ModelConfig ModelConfig::vit_base() { return vit_video(768, 12, 12, 384, 6); }
ModelConfig ModelConfig::vit_large() { return vit_video(1024, 24, 16, 512, 8); }

ModelConfig ModelConfig::preset(std::string_view name) {
  if (name == "desk") return desk();
  if (name == "vit-s") return vit_small();
  if (name == "vit-b") return vit_base();
  if (name == "vit-l") return vit_large();
  throw ConfigError("unknown model preset '" + std::string(name) + "'");
}

namespace {

void add_block_specs(std::vector<ParamSpec>& out, const std::string& prefix, Index d, Index hidden) {
  out.push_back({prefix + "norm1.gain", {d}, InitKind::kOnes});
  out.push_back({prefix + "norm1.bias", {d}, InitKind::kZeros});
  out.push_back({prefix + "attn.qkv.weight", {d, 3 * d}, InitKind::kTruncatedNormal});
  // No key bias: a per-column shift of every key cancels in the softmax.
  out.push_back({prefix + "attn.q_bias", {d}, InitKind::kZeros});
  out.push_back({prefix + "attn.v_bias", {d}, InitKind::kZeros});
  out.push_back({prefix + "attn.proj.weight", {d, d}, InitKind::kTruncatedNormal});
  out.push_back({prefix + "attn.proj.bias", {d}, InitKind::kZeros});
  out.push_back({prefix + "norm2.gain", {d}, InitKind::kOnes});
  out.push_back({prefix + "norm2.bias", {d}, InitKind::kZeros});
  out.push_back({prefix + "mlp.fc1.weight", {d, hidden}, InitKind::kTruncatedNormal});
  out.push_back({prefix + "mlp.fc1.bias", {hidden}, InitKind::kZeros});
  out.push_back({prefix + "mlp.fc2.weight", {hidden, d}, InitKind::kTruncatedNormal});
  out.push_back({prefix + "mlp.fc2.bias", {d}, InitKind::kZeros});
}

}  // namespace

std::vector<ParamSpec> parameter_registry(const ModelConfig& cfg) {
  cfg.validate();
  const Index d = cfg.dim;
  const Index p = cfg.tubelet_values();
  std::vector<ParamSpec> out;
  out.push_back({"patch_embed.weight", {p, d}, InitKind::kTruncatedNormal});
  out.push_back({"patch_embed.bias", {d}, InitKind::kZeros});
  for (int i = 0; i < cfg.depth; ++i)
    add_block_specs(out, "blocks." + std::to_string(i) + ".", d, cfg.hidden_dim());
  out.push_back({"norm.gain", {d}, InitKind::kOnes});
  out.push_back({"norm.bias", {d}, InitKind::kZeros});
  if (cfg.head == HeadType::kLinearClassifier) {
    out.push_back({"head.weight", {d, 2}, InitKind::kZeros});
    out.push_back({"head.bias", {2}, InitKind::kZeros});
  } else {
    const Index dd = cfg.decoder_dim;
    out.push_back({"decoder.embed.weight", {d, dd}, InitKind::kTruncatedNormal});
    out.push_back({"decoder.embed.bias", {dd}, InitKind::kZeros});
    out.push_back({"decoder.mask_token", {dd}, InitKind::kTruncatedNormal});
    for (int i = 0; i < cfg.decoder_depth; ++i)
      add_block_specs(out, "decoder.blocks." + std::to_string(i) + ".", dd, cfg.decoder_hidden_dim());
    out.push_back({"decoder.norm.gain", {dd}, InitKind::kOnes});
    out.push_back({"decoder.norm.bias", {dd}, InitKind::kZeros});
    out.push_back({"decoder.head.weight", {dd, p}, InitKind::kTruncatedNormal});
    out.push_back({"decoder.head.bias", {p}, InitKind::kZeros});
  }
  return out;
}

std::int64_t count_params(const ModelConfig& cfg) {
  cfg.validate();
  auto block = [](std::int64_t d, std::int64_t hidden) {
    const std::int64_t norms = 4 * d;
    const std::int64_t attention = d * 3 * d + 2 * d + d * d + d;
    const std::int64_t mlp = d * hidden + hidden + hidden * d + d;
    return norms + attention + mlp;
  };
  const std::int64_t d = cfg.dim;
  const std::int64_t p = cfg.tubelet_values();
  std::int64_t total = p * d + d + cfg.depth * block(d, cfg.hidden_dim()) + 2 * d;
  if (cfg.head == HeadType::kLinearClassifier) {
    total += d * 2 + 2;
  } else {
    const std::int64_t dd = cfg.decoder_dim;
    total += d * dd + dd + dd + cfg.decoder_depth * block(dd, cfg.decoder_hidden_dim()) + 2 * dd +
             dd * p + p;
  }
  return total;
}

template <typename Scalar>
void ParameterSet<Scalar>::add(std::string name, Tensor<Scalar> value) {
  if (contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(value)});
}

template <typename Scalar>
const Tensor<Scalar>& ParameterSet<Scalar>::at(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ConfigError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].value;
}

template <typename Scalar>
Tensor<Scalar>& ParameterSet<Scalar>::at(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ConfigError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].value;
}

template <typename Scalar>
Index ParameterSet<Scalar>::scalar_count() const {
  Index n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

ParameterSet<float> init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  rnd::Engine rng(seed);
  constexpr double kStd = 0.02;
  ParameterSet<float> params;
  for (auto& spec : parameter_registry(cfg)) {
    Tensor<float> t(spec.shape);
    switch (spec.init) {
      case InitKind::kZeros:
        break;
      case InitKind::kOnes:
        t.array().setOnes();
        break;
      case InitKind::kTruncatedNormal:
        for (Index i = 0; i < t.size(); ++i) {
          double z;
          do {
            z = rnd::standard_normal(rng);
          } while (std::abs(z) > 2.0);
          t[i] = static_cast<float>(kStd * z);
        }
        break;
    }
    params.add(spec.name, std::move(t));
  }
  return params;
}

template <typename Scalar>
BoundParameters<Scalar> BoundParameters<Scalar>::track(Tape<Scalar>& tape,
                                                       const ParameterSet<Scalar>& params) {
  BoundParameters out;
  out.vars_.reserve(params.size());
  for (const auto& e : params.entries()) {
    out.index_.emplace(e.name, out.vars_.size());
    out.vars_.push_back(tape.leaf(e.value));
  }
  return out;
}

template <typename Scalar>
BoundParameters<Scalar> BoundParameters<Scalar>::freeze(const ParameterSet<Scalar>& params) {
  BoundParameters out;
  out.vars_.reserve(params.size());
  for (const auto& e : params.entries()) {
    out.index_.emplace(e.name, out.vars_.size());
    out.vars_.push_back(constant(e.value));
  }
  return out;
}

template <typename Scalar>
const Var<Scalar>& BoundParameters<Scalar>::operator[](std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw StageError("model has no parameter '" + std::string(name) + "'");
  return vars_[it->second];
}

template <typename Scalar>
std::vector<Tensor<Scalar>> BoundParameters<Scalar>::gradients() const {
  std::vector<Tensor<Scalar>> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) out.push_back(v.grad());
  return out;
}

namespace {

void sincos_part(double* row, Index width, double position) {
  const Index half = width / 2;
  for (Index i = 0; i < half; ++i) {
    const double omega = 1.0 / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(half));
    row[i] = std::sin(position * omega);
    row[half + i] = std::cos(position * omega);
  }
}

}  // namespace

template <typename Scalar>
const Tensor<Scalar>& positional_encoding(const TokenGrid& grid, Index dim) {
  if (dim <= 0 || dim % 2) throw ConfigError("positional encoding needs an even positive dim");
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int, Index>, Tensor<Scalar>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_tuple(grid.t, grid.h, grid.w, dim);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const Index spatial_part = 2 * (dim / 6);
  const Index time_part = dim - 2 * spatial_part;
  Tensor<Scalar> table({grid.size(), dim});
  std::vector<double> row(static_cast<std::size_t>(dim));
  for (int t = 0; t < grid.t; ++t)
    for (int y = 0; y < grid.h; ++y)
      for (int x = 0; x < grid.w; ++x) {
        std::fill(row.begin(), row.end(), 0.0);
        sincos_part(row.data(), time_part, t);
        sincos_part(row.data() + time_part, spatial_part, y);
        sincos_part(row.data() + time_part + spatial_part, spatial_part, x);
        const Index token = grid.token(t, y, x);
        for (Index c = 0; c < dim; ++c) table(token, c) = static_cast<Scalar>(row[static_cast<std::size_t>(c)]);
      }
  return cache.emplace(key, std::move(table)).first->second;
}

template <typename Scalar>
Tensor<Scalar> extract_tubelets(const VideoClip& clip, int first_frame, const ModelConfig& cfg) {
  if (clip.height != cfg.height || clip.width != cfg.width || clip.channels != cfg.channels)
    throw ShapeError("clip " + std::to_string(clip.height) + "x" + std::to_string(clip.width) + "x" +
                     std::to_string(clip.channels) + " does not match model " +
                     std::to_string(cfg.height) + "x" + std::to_string(cfg.width) + "x" +
                     std::to_string(cfg.channels));
  if (first_frame < 0 || first_frame + cfg.frames > clip.frames)
    throw ShapeError("window of " + std::to_string(cfg.frames) + " frames from frame " +
                     std::to_string(first_frame) + " exceeds clip of " + std::to_string(clip.frames));
  const TokenGrid grid = cfg.grid();
  Tensor<Scalar> out({grid.size(), cfg.tubelet_values()});
  const Scalar inv = static_cast<Scalar>(1.0 / (255.0 * kPixelStd));
  const Scalar shift = static_cast<Scalar>(kPixelMean / kPixelStd);
  const std::size_t row_bytes = static_cast<std::size_t>(cfg.tubelet_w) * cfg.channels;
  for (int gt = 0; gt < grid.t; ++gt)
    for (int gy = 0; gy < grid.h; ++gy)
      for (int gx = 0; gx < grid.w; ++gx) {
        Scalar* dst = &out(grid.token(gt, gy, gx), 0);
        for (int dt = 0; dt < cfg.tubelet_t; ++dt)
          for (int dy = 0; dy < cfg.tubelet_h; ++dy) {
            const std::uint8_t* src =
                clip.frame(first_frame + gt * cfg.tubelet_t + dt) +
                (static_cast<std::size_t>(gy * cfg.tubelet_h + dy) * clip.width + gx * cfg.tubelet_w) *
                    clip.channels;
            for (std::size_t k = 0; k < row_bytes; ++k) *dst++ = static_cast<Scalar>(src[k]) * inv - shift;
          }
      }
  return out;
}

template <typename Scalar>
Var<Scalar> embed_tubelets(const BoundParameters<Scalar>& params, const Var<Scalar>& tubelets,
                           std::span<const Index> token_ids, const ModelConfig& cfg) {
  if (tubelets.rows() != static_cast<Index>(token_ids.size()) || tubelets.cols() != cfg.tubelet_values())
    throw ShapeError("embed_tubelets: " + to_string(tubelets.shape()) + " for " +
                     std::to_string(token_ids.size()) + " tokens of " +
                     std::to_string(cfg.tubelet_values()) + " values");
  const Tensor<Scalar>& pos = positional_encoding<Scalar>(cfg.grid(), cfg.dim);
  Tensor<Scalar> rows({static_cast<Index>(token_ids.size()), cfg.dim});
  for (std::size_t i = 0; i < token_ids.size(); ++i)
    rows.matrix().row(static_cast<Index>(i)) = pos.matrix().row(token_ids[i]);
  auto x = linear(tubelets, params["patch_embed.weight"], params["patch_embed.bias"]);
  return add(x, constant(std::move(rows)));
}

template <typename Scalar>
Var<Scalar> tubelet_embed(const BoundParameters<Scalar>& params, const VideoClip& clip,
                          const ModelConfig& cfg) {
  if (clip.frames != cfg.frames)
    throw ShapeError("tubelet_embed: clip has " + std::to_string(clip.frames) +
                     " frames, model expects " + std::to_string(cfg.frames));
  auto patches = constant(extract_tubelets<Scalar>(clip, 0, cfg));
  std::vector<Index> ids(static_cast<std::size_t>(cfg.tokens()));
  std::iota(ids.begin(), ids.end(), Index{0});
  return embed_tubelets(params, patches, std::span<const Index>(ids), cfg);
}

template <typename Scalar>
Var<Scalar> transformer_block(const BoundParameters<Scalar>& p, const std::string& prefix,
                              const Var<Scalar>& x, int heads) {
  const Scalar eps = static_cast<Scalar>(kLayerNormEps);

  auto h = layer_norm(x, p[prefix + "norm1.gain"], p[prefix + "norm1.bias"], eps);
  const auto& q_bias = p[prefix + "attn.q_bias"];
  const Var<Scalar> qkv_bias[] = {q_bias, constant(Tensor<Scalar>(q_bias.shape())),
                                  p[prefix + "attn.v_bias"]};
  auto qkv = linear(h, p[prefix + "attn.qkv.weight"],
                    concat_cols(std::span<const Var<Scalar>>(qkv_bias)));
  auto mixed = attention(qkv, heads);
  auto y = x + linear(mixed, p[prefix + "attn.proj.weight"], p[prefix + "attn.proj.bias"]);

  auto h2 = layer_norm(y, p[prefix + "norm2.gain"], p[prefix + "norm2.bias"], eps);
  auto m = linear(gelu(linear(h2, p[prefix + "mlp.fc1.weight"], p[prefix + "mlp.fc1.bias"])),
                  p[prefix + "mlp.fc2.weight"], p[prefix + "mlp.fc2.bias"]);
  return y + m;
}

template <typename Scalar>
Var<Scalar> encode(const BoundParameters<Scalar>& params, const Var<Scalar>& tokens,
                   const ModelConfig& cfg) {
  if (tokens.value().rank() != 2 || tokens.cols() != cfg.dim || tokens.rows() < 1)
    throw ShapeError("encode: expected [N x " + std::to_string(cfg.dim) + "] tokens, got " +
                     to_string(tokens.shape()));
  Var<Scalar> x = tokens;
  for (int i = 0; i < cfg.depth; ++i)
    x = transformer_block(params, "blocks." + std::to_string(i) + ".", x, cfg.heads);
  return x;
}

template <typename Scalar>
Var<Scalar> classifier_logits(const BoundParameters<Scalar>& params, const Var<Scalar>& encoded,
                              const ModelConfig& cfg) {
  if (!params.contains("head.weight"))
    throw StageError("model has no classification head (checkpoint is not fine-tuned)");
  if (encoded.cols() != cfg.dim) throw ShapeError("classify: bad token width " + to_string(encoded.shape()));
  auto normed = layer_norm(encoded, params["norm.gain"], params["norm.bias"],
                           static_cast<Scalar>(kLayerNormEps));
  return linear(mean_rows(normed), params["head.weight"], params["head.bias"]);
}

template <typename Scalar>
Scalar anomaly_probability(const Tensor<Scalar>& logits) {
  if (logits.size() != 2) throw ShapeError("anomaly_probability: expected 2 logits, got " + to_string(logits.shape()));
  // softmax[1] = 1 / (1 + exp(z0 - z1))
  return Scalar(1) / (Scalar(1) + std::exp(logits[0] - logits[1]));
}

template <typename Scalar>
Scalar classify(const BoundParameters<Scalar>& params, const Var<Scalar>& encoded,
                const ModelConfig& cfg) {
  return anomaly_probability(classifier_logits(params, encoded, cfg).value());
}

template <typename Scalar>
Var<Scalar> decode_mae(const BoundParameters<Scalar>& params, const Var<Scalar>& visible_encoded,
                       const TubeMask& mask, const ModelConfig& cfg) {
  if (!params.contains("decoder.embed.weight"))
    throw StageError("model has no MAE decoder (checkpoint is fine-tuned)");
  if (!(mask.grid == cfg.grid()))
    throw ShapeError("decode_mae: mask grid does not match the model token grid");
  if (visible_encoded.rows() != mask.visible_count())
    throw ShapeError("decode_mae: " + std::to_string(visible_encoded.rows()) +
                     " visible tokens but mask leaves " + std::to_string(mask.visible_count()));
  const Scalar eps = static_cast<Scalar>(kLayerNormEps);
  auto y = linear(visible_encoded, params["decoder.embed.weight"], params["decoder.embed.bias"]);
  auto full = scatter_tokens(y, mask, params["decoder.mask_token"]);
  full = add(full, constant(positional_encoding<Scalar>(cfg.grid(), cfg.decoder_dim)));
  for (int i = 0; i < cfg.decoder_depth; ++i)
    full = transformer_block(params, "decoder.blocks." + std::to_string(i) + ".", full,
                             cfg.decoder_heads);
  full = layer_norm(full, params["decoder.norm.gain"], params["decoder.norm.bias"], eps);
  return linear(full, params["decoder.head.weight"], params["decoder.head.bias"]);
}

template <typename Scalar>
Var<Scalar> mae_reconstruct(const BoundParameters<Scalar>& params, const Var<Scalar>& tubelets,
                            const TubeMask& mask, const ModelConfig& cfg) {
  auto split = split_tokens(tubelets, mask);
  auto tokens = embed_tubelets(params, split.visible, std::span<const Index>(split.index_map), cfg);
  auto encoded = encode(params, tokens, cfg);
  auto normed = layer_norm(encoded, params["norm.gain"], params["norm.bias"],
                           static_cast<Scalar>(kLayerNormEps));
  return decode_mae(params, normed, mask, cfg);
}

#define TADVIT_INSTANTIATE_MODEL(S)                                                              \
  template class ParameterSet<S>;                                                                \
  template class BoundParameters<S>;                                                             \
  template const Tensor<S>& positional_encoding<S>(const TokenGrid&, Index);                     \
  template Tensor<S> extract_tubelets<S>(const VideoClip&, int, const ModelConfig&);             \
  template Var<S> embed_tubelets(const BoundParameters<S>&, const Var<S>&, std::span<const Index>, \
                                 const ModelConfig&);                                            \
  template Var<S> tubelet_embed(const BoundParameters<S>&, const VideoClip&, const ModelConfig&); \
  template Var<S> transformer_block(const BoundParameters<S>&, const std::string&, const Var<S>&, \
                                    int);                                                        \
  template Var<S> encode(const BoundParameters<S>&, const Var<S>&, const ModelConfig&);          \
  template Var<S> classifier_logits(const BoundParameters<S>&, const Var<S>&, const ModelConfig&); \
  template S anomaly_probability(const Tensor<S>&);                                              \
  template S classify(const BoundParameters<S>&, const Var<S>&, const ModelConfig&);             \
  template Var<S> decode_mae(const BoundParameters<S>&, const Var<S>&, const TubeMask&,          \
                             const ModelConfig&);                                                \
  template Var<S> mae_reconstruct(const BoundParameters<S>&, const Var<S>&, const TubeMask&,     \
                                  const ModelConfig&);

TADVIT_INSTANTIATE_MODEL(float)
TADVIT_INSTANTIATE_MODEL(double)

}  // namespace tadvit
