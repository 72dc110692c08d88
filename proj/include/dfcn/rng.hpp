#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dfcn/matrix.hpp"

namespace dfcn {

using Rng = std::mt19937_64;

/// Independent child seed for stream `stream` of `master` (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

inline Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

/// Glorot-uniform weight of shape fan_in x fan_out.
inline Matrix xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_matrix(fan_in, fan_out, -bound, bound, rng);
}

}  // namespace dfcn
