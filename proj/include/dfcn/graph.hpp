#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "dfcn/labels.hpp"
#include "dfcn/matrix.hpp"

namespace dfcn {

/// How node degrees are taken when normalizing.
enum class DegreeMode {
  self_loop,  ///< degrees of A + I (default)
  literal,    ///< degrees of A; isolated nodes fall back to 1
};

/// Attributed graph with its propagation operator.
struct GraphData {
  Matrix x;                                  ///< N x d attributes
  CsrMatrix adjacency;                       ///< binary, symmetric, zero diagonal
  std::shared_ptr<const CsrMatrix> adj_norm; ///< normalized adjacency
  std::optional<Labels> labels;
  std::size_t k = 2;

  std::size_t n() const noexcept { return x.rows(); }
  std::size_t dim() const noexcept { return x.cols(); }

  /// Throws ValidationError on any broken invariant.
  void validate() const;
};

/// Throws ValidationError unless `a` is square, symmetric, binary, with zero diagonal.
void validate_adjacency(const CsrMatrix& a);

/// D^{-1/2} (A + I) D^{-1/2}.
CsrMatrix normalize_adjacency(const CsrMatrix& a, DegreeMode mode = DegreeMode::self_loop);

/// Symmetric binary adjacency from an undirected edge list. Duplicates collapse;
/// self loops and out-of-range endpoints are rejected.
CsrMatrix adjacency_from_edges(std::size_t n,
                               const std::vector<std::pair<std::size_t, std::size_t>>& edges);

/// Upper-triangle edge list (u < v) of a symmetric adjacency.
std::vector<std::pair<std::size_t, std::size_t>> edges_of(const CsrMatrix& a);

/// Mean squared distance over all ordered pairs i != j.
double mean_pairwise_sq_dist(const Matrix& x);

/// Directed k-nearest-neighbour graph weighted by exp(-||x_i - x_j||^2 / t).
/// Row i holds node i's k most similar other nodes; ties go to the smaller index.
/// `bandwidth` defaults to mean_pairwise_sq_dist(x).
CsrMatrix knn_heat_similarity(const Matrix& x, std::size_t k,
                              std::optional<double> bandwidth = std::nullopt);

/// Binary symmetric graph: edge when either endpoint selected the other.
CsrMatrix knn_heat_graph(const Matrix& x, std::size_t k,
                         std::optional<double> bandwidth = std::nullopt);

/// Sparse-dense product.
Matrix spmm(const CsrMatrix& a, const Matrix& h);

/// Assembles GraphData and computes the normalized adjacency.
GraphData make_graph(Matrix x, CsrMatrix adjacency, std::optional<Labels> labels, std::size_t k,
                     DegreeMode mode = DegreeMode::self_loop);

struct SbmSpec {
  std::size_t k = 3;
  std::vector<std::size_t> sizes{50, 50, 50};
  double p_in = 0.5;
  double p_out = 0.02;
  std::size_t attr_dim = 20;
  /// Distance between neighbouring attribute centers (unit-variance noise).
  double attr_sep = 8.0;
  std::uint64_t seed = 0;
};

/// Stochastic block model with Gaussian attributes.
/// Cluster c's attribute center is (attr_sep / sqrt 2) e_c, so every pair of
/// centers is attr_sep apart. Nodes are ordered block by block.
GraphData sbm_synthesize(const SbmSpec& spec);

}  // namespace dfcn
