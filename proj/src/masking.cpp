// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include "tadvit/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tadvit/random.hpp"

namespace tadvit {

Index TubeMask::masked_count() const {
  return std::count(masked.begin(), masked.end(), std::uint8_t{1});
}

std::vector<Index> TubeMask::visible_indices() const {
  std::vector<Index> out;
  out.reserve(masked.size());
  for (std::size_t i = 0; i < masked.size(); ++i)
    if (!masked[i]) out.push_back(static_cast<Index>(i));
  return out;
}

std::vector<Index> TubeMask::masked_indices() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < masked.size(); ++i)
    if (masked[i]) out.push_back(static_cast<Index>(i));
  return out;
}

Index tube_mask_count(const TokenGrid& grid, double ratio) {
  return static_cast<Index>(std::llround(ratio * static_cast<double>(grid.spatial()))) * grid.t;
}

TubeMask generate_tube_mask(const TokenGrid& grid, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0))
    throw ConfigError("mask ratio must lie in [0, 1), got " + std::to_string(ratio));
  if (grid.size() <= 0) throw ConfigError("token grid must be non-empty");
  const Index sites = grid.spatial();
  const Index masked_sites = std::llround(ratio * static_cast<double>(sites));

  std::vector<Index> order(static_cast<std::size_t>(sites));
  std::iota(order.begin(), order.end(), Index{0});
  rnd::Engine rng(seed);
  rnd::shuffle(order.begin(), order.end(), rng);

  TubeMask mask{grid, std::vector<std::uint8_t>(static_cast<std::size_t>(grid.size()), 0), ratio,
                seed};
  for (Index k = 0; k < masked_sites; ++k) {
    const Index site = order[static_cast<std::size_t>(k)];
    for (int t = 0; t < grid.t; ++t)
      mask.masked[static_cast<std::size_t>(t * sites + site)] = 1;
  }
  return mask;
}

template <typename Scalar>
TokenSplit<Scalar> split_tokens(const Var<Scalar>& tokens, const TubeMask& mask) {
  if (tokens.rows() != mask.grid.size() || tokens.value().rank() != 2)
    throw ShapeError("split_tokens: " + to_string(tokens.shape()) + " tokens for a grid of " +
                     std::to_string(mask.grid.size()));
  TokenSplit<Scalar> out;
  out.index_map = mask.visible_indices();
  if (out.index_map.empty()) throw ShapeError("split_tokens: every token is masked");
  out.visible = gather_rows(tokens, std::span<const Index>(out.index_map));
  return out;
}

template <typename Scalar>
Var<Scalar> scatter_tokens(const Var<Scalar>& visible, const TubeMask& mask,
                           const Var<Scalar>& fill) {
  const auto index = mask.visible_indices();
  if (visible.rows() != static_cast<Index>(index.size()))
    throw ShapeError("scatter_tokens: " + std::to_string(visible.rows()) +
                     " visible rows but the mask leaves " + std::to_string(index.size()));
  return scatter_rows(visible, std::span<const Index>(index), fill, mask.grid.size());
}

template TokenSplit<float> split_tokens(const Var<float>&, const TubeMask&);
template TokenSplit<double> split_tokens(const Var<double>&, const TubeMask&);
template Var<float> scatter_tokens(const Var<float>&, const TubeMask&, const Var<float>&);
template Var<double> scatter_tokens(const Var<double>&, const TubeMask&, const Var<double>&);

}  // namespace tadvit
