#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dfcn/labels.hpp"
#include "dfcn/matrix.hpp"
#include "dfcn/rng.hpp"

namespace dfcn {

struct KMeansOptions {
  std::size_t restarts = 20;
  std::size_t max_iter = 300;
  /// Stop once the summed squared center shift drops below tol times the
  /// mean per-feature variance of the data.
  double tol = 1e-4;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Labels labels;
  Matrix centers;
  double inertia = 0.0;
  std::size_t iterations = 0;
  /// Inertia after each assignment step; never increases.
  std::vector<double> inertia_trace;
};

/// k-means++ seeding.
Matrix kmeans_plus_plus(const Matrix& z, std::size_t k, Rng& rng);

/// Lloyd iterations from the given centers. An emptied cluster is re-seeded at
/// the point farthest from its assigned center.
KMeansResult lloyd(const Matrix& z, Matrix centers, std::size_t max_iter, double tol);

/// Best-of-restarts k-means. Restart r uses seed derive_seed(opt.seed, r);
/// restarts run in parallel and ties keep the lowest restart index.
KMeansResult kmeans(const Matrix& z, std::size_t k, const KMeansOptions& opt = {});

struct Assignment {
  std::vector<int> row_to_col;
  double cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method, O(K^3)).
Assignment kuhn_munkres(const Matrix& cost);

}  // namespace dfcn
