#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "learnsketch/count_sketch.hpp"
#include "learnsketch/dense_matrix.hpp"

namespace learnsketch {

using Rng = std::mt19937_64;

/// Independent child seed for a named purpose (e.g. one per instance).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0) {
  DenseMatrix g(rows, cols);
  std::normal_distribution<double> normal(0.0, stddev);
  for (double& x : g.data()) x = normal(rng);
  return g;
}

}  // namespace learnsketch
