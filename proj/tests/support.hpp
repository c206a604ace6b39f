// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test helpers: finite-difference gradient probes and scratch dirs.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tadvit/autodiff.hpp"
#include "tadvit/random.hpp"

namespace tadvit::testing {

/// Uniform [lo, hi) tensor from a seeded engine.
inline Tensor<float> random_tensor(const Shape& shape, rnd::Engine& rng, float lo = -1.0f,
                                   float hi = 1.0f) {
  Tensor<float> t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * rnd::uniform01f(rng);
  return t;
}

struct ProbeReport {
  double max_rel_error = 0.0;
  int probes = 0;
  std::string worst;  // "input i, element e: analytic a vs numeric n"
};

/// Compares the single-precision reverse-mode gradient of a scalar function
/// with a double-precision central difference at `probes` random
/// (input, element) coordinates. `build` is a generic callable
/// (std::vector<Var<S>>&) -> Var<S> evaluated for S = float and S = double;
/// inputs are float-representable, so both paths see the same point.
template <typename Build>
ProbeReport probe_gradients(Build&& build, const std::vector<Tensor<float>>& inputs, int probes,
                            std::uint64_t seed, double step = 1e-3) {
  Tape<float> tape;
  std::vector<Var<float>> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
  Var<float> loss = build(leaves);
  tape.backward(loss);

  std::vector<Tensor<double>> point;
  for (const auto& t : inputs) point.push_back(t.template cast<double>());
  auto eval64 = [&](const std::vector<Tensor<double>>& at) {
    std::vector<Var<double>> vars;
    for (const auto& t : at) vars.push_back(constant(t));
    return build(vars).value()[0];
  };

  ProbeReport report;
  rnd::Engine rng(seed);
  for (int p = 0; p < probes; ++p) {
    const auto which = static_cast<std::size_t>(rnd::below(rng, inputs.size()));
    const auto elem = static_cast<Index>(rnd::below(rng, static_cast<std::uint64_t>(inputs[which].size())));
    auto plus = point, minus = point;
    plus[which][elem] += step;
    minus[which][elem] -= step;
    const double numeric = (eval64(plus) - eval64(minus)) / (2.0 * step);
    const double analytic = leaves[which].grad()[elem];
    const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-8);
    if (rel >= report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst = "input " + std::to_string(which) + ", element " + std::to_string(elem) +
                     ": analytic " + std::to_string(analytic) + " vs numeric " +
                     std::to_string(numeric);
    }
    ++report.probes;
  }
  return report;
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() /
            ("tadvit_" + name + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace tadvit::testing
