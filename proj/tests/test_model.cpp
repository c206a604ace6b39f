// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gradient_cases.hpp"
#include "tadvit/checkpoint.hpp"

using namespace tadvit;
using tadvit::testing::micro_config;
using tadvit::testing::probe_parameters;
using tadvit::testing::random_clip;
using tadvit::testing::random_tensor;

namespace {

std::int64_t registry_total(const ModelConfig& cfg) {
  std::int64_t total = 0;
  for (const auto& spec : parameter_registry(cfg)) total += shape_size(spec.shape);
  return total;
}

ParameterSet<double> wide_params(const ModelConfig& cfg, std::uint64_t seed) {
  rnd::Engine rng(seed);
  return probe_parameters(cfg, rng).cast<double>();
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  return (a.array() - b.array()).abs().maxCoeff();
}

}  // namespace

TEST_CASE("token counts follow the tubelet grid") {
  auto big = ModelConfig::vit_small();
  CHECK(big.tokens() == 8 * 14 * 14);
  CHECK(big.tokens() == 1568);

  ModelConfig small;
  small.tubelet_h = small.tubelet_w = 8;
  CHECK(small.tokens() == 512);
  CHECK(small.tubelet_values() == 384);
  CHECK(ModelConfig::desk().tokens() == 128);
}

TEST_CASE("config validation rejects inconsistent shapes") {
  auto bad = [](auto edit) {
    ModelConfig c;
    edit(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad([](ModelConfig& c) { c.frames = 15; });
  bad([](ModelConfig& c) { c.height = 60; });
  bad([](ModelConfig& c) { c.heads = 5; });
  bad([](ModelConfig& c) { c.dim = 0; });
  bad([](ModelConfig& c) { c.depth = -1; });
  bad([](ModelConfig& c) { c.mask_ratio = 1.0; });
  bad([](ModelConfig& c) { c.decoder_dim = 30; c.decoder_heads = 4; });
  CHECK_THROWS_AS(ModelConfig::preset("vit-xl"), ConfigError);
}

TEST_CASE("config text round-trip") {
  for (const char* name : {"desk", "vit-s", "vit-b", "vit-l"}) {
    const auto cfg = ModelConfig::preset(name);
    CHECK(ModelConfig::from_text(KeyValueText::parse(cfg.to_text().to_string())) == cfg);
  }
}

TEST_CASE("analytic parameter count equals the registry sum") {
  std::vector<ModelConfig> configs{ModelConfig::desk(), ModelConfig::vit_small(),
                                   ModelConfig::vit_base(), ModelConfig::vit_large(),
                                   micro_config(HeadType::kMaeDecoder),
                                   micro_config(HeadType::kLinearClassifier)};
  rnd::Engine rng(4);
  for (int i = 0; i < 30; ++i) {
    ModelConfig c;
    c.heads = 1 + static_cast<int>(rnd::below(rng, 4));
    c.dim = 2 * c.heads * (1 + static_cast<int>(rnd::below(rng, 12)));
    c.depth = static_cast<int>(rnd::below(rng, 4));
    c.mlp_ratio = 1.0 + 0.5 * static_cast<double>(rnd::below(rng, 6));
    c.decoder_heads = 1 + static_cast<int>(rnd::below(rng, 3));
    c.decoder_dim = 2 * c.decoder_heads * (1 + static_cast<int>(rnd::below(rng, 8)));
    c.decoder_depth = static_cast<int>(rnd::below(rng, 3));
    c.head = rnd::below(rng, 2) ? HeadType::kMaeDecoder : HeadType::kLinearClassifier;
    configs.push_back(c);
  }
  for (const auto& c : configs) {
    CHECK(count_params(c) == registry_total(c));
    CHECK(count_params(c) == init_parameters(c, 1).scalar_count());
  }
}

TEST_CASE("video ViT parameter counts sit at 22M / 86M / 304M") {
  const std::pair<ModelConfig, double> rows[] = {{ModelConfig::vit_small(), 22e6},
                                                 {ModelConfig::vit_base(), 86e6},
                                                 {ModelConfig::vit_large(), 304e6}};
  for (const auto& [cfg, target] : rows) {
    const double n = static_cast<double>(count_params(cfg));
    INFO("dim " << cfg.dim << " count " << n);
    CHECK(std::abs(n - target) / target <= 0.05);
  }
}

TEST_CASE("zero tubelets embed to bias plus position") {
  auto cfg = micro_config(HeadType::kLinearClassifier);
  const auto params = wide_params(cfg, 2);
  const auto bound = BoundParameters<double>::freeze(params);
  std::vector<Index> ids(static_cast<std::size_t>(cfg.tokens()));
  std::iota(ids.begin(), ids.end(), Index{0});
  const auto zero = constant(Tensor<double>({cfg.tokens(), cfg.tubelet_values()}));
  const auto tokens = embed_tubelets(bound, zero, std::span<const Index>(ids), cfg).value();
  const auto& pos = positional_encoding<double>(cfg.grid(), cfg.dim);
  const auto& bias = params.at("patch_embed.bias");
  for (Index i = 0; i < cfg.tokens(); ++i)
    for (Index k = 0; k < cfg.dim; ++k) CHECK(tokens(i, k) == bias[k] + pos(i, k));
}

TEST_CASE("positional encoding rows are distinct and bounded") {
  const TokenGrid grid{8, 4, 4};
  const auto& pos = positional_encoding<double>(grid, 64);
  CHECK(pos.shape() == Shape{128, 64});
  CHECK(pos.array().abs().maxCoeff() <= 1.0);
  for (Index a = 0; a < pos.rows(); ++a)
    for (Index b = a + 1; b < pos.rows(); ++b)
      CHECK((pos.matrix().row(a) - pos.matrix().row(b)).norm() > 1e-3);
  CHECK_THROWS_AS(positional_encoding<double>(grid, 63), ConfigError);
}

TEST_CASE("tubelets are flattened in (t, y, x, c) order") {
  auto cfg = micro_config(HeadType::kMaeDecoder);
  rnd::Engine rng(6);
  auto clip = random_clip(cfg.frames + 2, cfg.height, cfg.width, rng);
  const auto tub = extract_tubelets<double>(clip, 1, cfg);
  CHECK(tub.shape() == Shape{cfg.tokens(), cfg.tubelet_values()});
  const auto grid = cfg.grid();
  Index col = 0;
  const int gt = 1, gy = 0, gx = 1;
  for (int dt = 0; dt < cfg.tubelet_t; ++dt)
    for (int dy = 0; dy < cfg.tubelet_h; ++dy)
      for (int dx = 0; dx < cfg.tubelet_w; ++dx)
        for (int c = 0; c < 3; ++c, ++col) {
          const int v = clip.at(1 + gt * cfg.tubelet_t + dt, gy * cfg.tubelet_h + dy,
                                gx * cfg.tubelet_w + dx, c);
          CHECK(tub(grid.token(gt, gy, gx), col) == doctest::Approx((v / 255.0 - 0.5) / 0.5));
        }
  CHECK_THROWS_AS(extract_tubelets<double>(clip, 3, cfg), ShapeError);
}

TEST_CASE("encode with depth 0 is the identity") {
  auto cfg = micro_config(HeadType::kLinearClassifier);
  cfg.depth = 0;
  const auto bound = BoundParameters<float>::freeze(init_parameters(cfg, 3));
  rnd::Engine rng(8);
  const auto x = constant(random_tensor({5, cfg.dim}, rng));
  CHECK(encode(bound, x, cfg).value() == x.value());
  CHECK_THROWS_AS(encode(bound, constant(Tensor<float>({5, cfg.dim + 2})), cfg), ShapeError);
}

TEST_CASE("encode with all-zero block weights keeps the residual stream") {
  auto cfg = micro_config(HeadType::kLinearClassifier);
  auto params = init_parameters(cfg, 3);
  for (auto& e : params.entries())
    if (e.name.starts_with("blocks.")) e.value.set_zero();
  const auto bound = BoundParameters<float>::freeze(params);
  rnd::Engine rng(10);
  const auto x = constant(random_tensor({6, cfg.dim}, rng));
  CHECK(encode(bound, x, cfg).value() == x.value());
}

TEST_CASE("encode is permutation equivariant") {
  auto cfg = micro_config(HeadType::kLinearClassifier);
  const auto bound = BoundParameters<double>::freeze(wide_params(cfg, 12));
  rnd::Engine rng(13);
  const auto x = random_tensor({7, cfg.dim}, rng).cast<double>();
  std::vector<Index> perm(7);
  std::iota(perm.begin(), perm.end(), Index{0});
  rnd::shuffle(perm.begin(), perm.end(), rng);
  const auto out = encode(bound, constant(x), cfg).value();
  const auto permuted_in = gather_rows(constant(x), std::span<const Index>(perm));
  const auto out_of_permuted = encode(bound, permuted_in, cfg).value();
  const auto permuted_out = gather_rows(constant(out), std::span<const Index>(perm)).value();
  CHECK(max_abs_diff(out_of_permuted, permuted_out) < 1e-12);
}

TEST_CASE("a single token block reduces to value, projection and MLP") {
  auto cfg = micro_config(HeadType::kLinearClassifier);
  const auto params = wide_params(cfg, 14);
  const auto bound = BoundParameters<double>::freeze(params);
  rnd::Engine rng(15);
  const auto x = constant(random_tensor({1, cfg.dim}, rng).cast<double>());
  const auto out = transformer_block(bound, "blocks.0.", x, cfg.heads).value();

  auto p = [&](const char* n) { return constant(params.at(std::string("blocks.0.") + n)); };
  const Index d = cfg.dim;
  const auto h = layer_norm(x, p("norm1.gain"), p("norm1.bias"), kLayerNormEps);
  const auto wv = constant(Tensor<double>::from_matrix(
      params.at("blocks.0.attn.qkv.weight").matrix().middleCols(2 * d, d)));
  const auto v = linear(h, wv, p("attn.v_bias"));
  const auto y = x + linear(v, p("attn.proj.weight"), p("attn.proj.bias"));
  const auto h2 = layer_norm(y, p("norm2.gain"), p("norm2.bias"), kLayerNormEps);
  const auto expected = y + linear(gelu(linear(h2, p("mlp.fc1.weight"), p("mlp.fc1.bias"))),
                                   p("mlp.fc2.weight"), p("mlp.fc2.bias"));
  CHECK(max_abs_diff(out, expected.value()) < 1e-12);
}

TEST_CASE("classifier scores") {
  auto cfg = micro_config(HeadType::kLinearClassifier);
  const auto zero_head = BoundParameters<float>::freeze(init_parameters(cfg, 1));
  rnd::Engine rng(16);
  const auto tokens = constant(random_tensor({8, cfg.dim}, rng));
  CHECK(classify(zero_head, tokens, cfg) == 0.5f);

  CHECK(anomaly_probability(Tensor<double>({1, 2}, {0.0, std::log(3.0)})) ==
        doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(anomaly_probability(Tensor<double>({3}, {0.0, 1.0, 2.0})), ShapeError);

  const auto bound = BoundParameters<float>::freeze(probe_parameters(cfg, rng));
  for (int i = 0; i < 20; ++i) {
    const auto t = constant(random_tensor({8, cfg.dim}, rng, -5.0f, 5.0f));
    const float s = classify(bound, t, cfg);
    CHECK(s > 0.0f);
    CHECK(s < 1.0f);
  }

  const auto mae = BoundParameters<float>::freeze(init_parameters(micro_config(HeadType::kMaeDecoder), 1));
  CHECK_THROWS_AS(classify(mae, tokens, cfg), StageError);
}

TEST_CASE("classify is exactly invariant to token order") {
  auto cfg = micro_config(HeadType::kLinearClassifier);
  rnd::Engine rng(17);
  const auto bound = BoundParameters<float>::freeze(probe_parameters(cfg, rng));
  const auto x = random_tensor({32, cfg.dim}, rng, -3.0f, 3.0f);
  std::vector<Index> perm(32);
  std::iota(perm.begin(), perm.end(), Index{0});
  for (int trial = 0; trial < 10; ++trial) {
    rnd::shuffle(perm.begin(), perm.end(), rng);
    const auto shuffled = gather_rows(constant(x), std::span<const Index>(perm));
    CHECK(classifier_logits(bound, shuffled, cfg).value() ==
          classifier_logits(bound, constant(x), cfg).value());
  }
}

TEST_CASE("decoder output shapes") {
  ModelConfig cfg;
  cfg.tubelet_h = cfg.tubelet_w = 8;
  cfg.depth = 1;
  const auto bound = BoundParameters<float>::freeze(init_parameters(cfg, 1));
  rnd::Engine rng(18);
  const auto clip = random_clip(16, 64, 64, rng);
  const auto tub = constant(extract_tubelets<float>(clip, 0, cfg));

  const auto m75 = generate_tube_mask(cfg.grid(), 0.75, 3);
  CHECK(m75.visible_count() == 128);
  CHECK(m75.masked_count() == 384);
  CHECK(mae_reconstruct(bound, tub, m75, cfg).shape() == Shape{512, 384});

  const auto m0 = generate_tube_mask(cfg.grid(), 0.0, 3);
  CHECK(m0.masked_count() == 0);
  CHECK(mae_reconstruct(bound, tub, m0, cfg).shape() == Shape{512, 384});

  CHECK_THROWS_AS(decode_mae(bound, constant(Tensor<float>({100, cfg.dim})), m75, cfg), ShapeError);
}

TEST_CASE("reconstruction ignores masked tubelet content") {
  auto cfg = micro_config(HeadType::kMaeDecoder);
  rnd::Engine rng(19);
  const auto bound = BoundParameters<float>::freeze(probe_parameters(cfg, rng));
  auto tub = random_tensor({cfg.tokens(), cfg.tubelet_values()}, rng);
  const auto mask = generate_tube_mask(cfg.grid(), 0.5, 21);
  const auto before = mae_reconstruct(bound, constant(tub), mask, cfg).value();
  for (Index token : mask.masked_indices())
    for (Index k = 0; k < tub.cols(); ++k) tub(token, k) = 10.0f * rnd::uniform01f(rng) - 5.0f;
  CHECK(mae_reconstruct(bound, constant(tub), mask, cfg).value() == before);
}

TEST_CASE("initialisation is seeded and follows the registry") {
  const auto cfg = ModelConfig::desk();
  const auto a = init_parameters(cfg, 5), b = init_parameters(cfg, 5), c = init_parameters(cfg, 6);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  const auto registry = parameter_registry(cfg);
  REQUIRE(a.size() == registry.size());
  for (std::size_t i = 0; i < registry.size(); ++i) {
    const auto& t = a.entries()[i].value;
    CHECK(a.entries()[i].name == registry[i].name);
    CHECK(t.shape() == registry[i].shape);
    switch (registry[i].init) {
      case InitKind::kZeros: CHECK(t.array().isZero(0.0f)); break;
      case InitKind::kOnes: CHECK((t.array() == 1.0f).all()); break;
      case InitKind::kTruncatedNormal: CHECK(t.array().abs().maxCoeff() <= 0.04f); break;
    }
  }
  const auto& w = a.at("blocks.0.mlp.fc1.weight");
  const double sd = std::sqrt(w.array().square().mean());
  CHECK(sd == doctest::Approx(0.0176).epsilon(0.08));
}
