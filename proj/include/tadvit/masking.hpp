// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tube masking: a spatial site of the token grid is either masked at every
// time step or at none.
#pragma once

#include <cstdint>
#include <vector>

#include "tadvit/autodiff.hpp"

namespace tadvit {

/// Token grid (n_t, n_h, n_w); tokens are numbered time-major, then rows,
/// then columns.
struct TokenGrid {
  int t = 0;
  int h = 0;
  int w = 0;

  Index size() const { return static_cast<Index>(t) * h * w; }
  Index spatial() const { return static_cast<Index>(h) * w; }
  Index token(int ti, int hi, int wi) const { return (static_cast<Index>(ti) * h + hi) * w + wi; }
  bool operator==(const TokenGrid&) const = default;
};

struct TubeMask {
  TokenGrid grid;
  std::vector<std::uint8_t> masked;  // one flag per token, 1 = masked
  double ratio = 0.0;
  std::uint64_t seed = 0;

  Index masked_count() const;
  Index visible_count() const { return grid.size() - masked_count(); }
  std::vector<Index> visible_indices() const;
  std::vector<Index> masked_indices() const;
  bool operator==(const TubeMask&) const = default;
};

/// round(ratio * spatial sites) * n_t.
Index tube_mask_count(const TokenGrid& grid, double ratio);

/// Masks round(ratio * n_h * n_w) spatial sites, chosen by a seeded shuffle,
/// across all time steps. Rejects ratio outside [0, 1).
TubeMask generate_tube_mask(const TokenGrid& grid, double ratio, std::uint64_t seed);

template <typename Scalar>
struct TokenSplit {
  Var<Scalar> visible;            // visible tokens in raster order
  std::vector<Index> index_map;   // index_map[i] = original token of visible row i
};

template <typename Scalar>
TokenSplit<Scalar> split_tokens(const Var<Scalar>& tokens, const TubeMask& mask);

/// Inverse of split_tokens: visible rows back to their sites, fill elsewhere.
template <typename Scalar>
Var<Scalar> scatter_tokens(const Var<Scalar>& visible, const TubeMask& mask,
                           const Var<Scalar>& fill);

}  // namespace tadvit
