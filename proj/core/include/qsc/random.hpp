// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "qsc/linalg.hpp"

namespace qsc {

/// Per-path generator: std::seed_seq{root_lo, root_hi, path_lo, path_hi} into mt19937_64.
/// Paths are independent of evaluation order, so ensembles can be split freely.
inline std::mt19937_64 path_rng(std::uint64_t root, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  return std::mt19937_64(seq);
}

/// n independent N(0, variance) samples.
inline RVec gaussian_vector(std::mt19937_64& rng, Eigen::Index n, double variance) {
  std::normal_distribution<double> g(0.0, std::sqrt(variance));
  RVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

}  // namespace qsc
