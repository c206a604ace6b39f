// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "tadvit/autodiff.hpp"

using namespace tadvit;

TEST_CASE("tensor shape validation") {
  CHECK_THROWS_AS(Tensor<float>(Shape{}), ShapeError);
  CHECK_THROWS_AS(Tensor<float>(Shape{3, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor<float>(Shape{2, -1}), ShapeError);
  CHECK_THROWS_AS(Tensor<float>({2, 2}, {1.0f, 2.0f, 3.0f}), ShapeError);

  Tensor<float> t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.rows() == 6);
  CHECK(t.cols() == 4);
  CHECK(t.array().isZero());
}

TEST_CASE("reshape keeps payload and rejects size changes") {
  Tensor<double> t({2, 3}, {1, 2, 3, 4, 5, 6});
  const auto r = t.reshaped({3, 2});
  CHECK(r(2, 1) == 6.0);
  CHECK(r(1, 0) == 3.0);
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
}

TEST_CASE("cast and bitwise equality") {
  Tensor<float> a({2, 2}, {0.1f, -2.5f, 3.0f, 1e-7f});
  const auto b = a.cast<double>().cast<float>();
  CHECK(a == b);
  Tensor<float> c = a;
  c[3] = std::nextafter(c[3], 1.0f);
  CHECK_FALSE(a == c);
}

TEST_CASE("tracking allocator sees tensor payloads") {
  const auto before = memory::current_bytes();
  {
    Tensor<float> t({256, 256});
    CHECK(memory::current_bytes() >= before + 256 * 256 * sizeof(float));
  }
  CHECK(memory::current_bytes() == before);
  memory::reset_peak();
  { Tensor<double> t({1000}); }
  CHECK(memory::peak_bytes() >= memory::current_bytes() + 1000 * sizeof(double));
}
