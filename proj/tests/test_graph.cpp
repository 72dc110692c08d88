#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dfcn/cluster.hpp"
#include "dfcn/errors.hpp"
#include "dfcn/graph.hpp"
#include "dfcn/kernels.hpp"
#include "dfcn/metrics.hpp"
#include "support.hpp"

using namespace dfcn;

namespace {

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

CsrMatrix random_graph(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(p);
  EdgeList edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  return adjacency_from_edges(n, edges);
}

using EdgeSet = std::set<std::pair<std::size_t, std::size_t>>;

EdgeSet edge_set(const CsrMatrix& a) {
  const auto e = edges_of(a);
  return {e.begin(), e.end()};
}

/// Largest |eigenvalue| of a symmetric matrix by power iteration.
double spectral_radius(const Matrix& m) {
  Matrix v(m.rows(), 1, 1.0);
  v(0, 0) = 1.3;  // avoid starting orthogonal to the top eigenvector by symmetry
  double lambda = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Matrix w = kernels::matmul(m, v);
    const double norm = std::sqrt(frobenius_sq(w));
    if (norm == 0.0) return 0.0;
    lambda = norm / std::sqrt(frobenius_sq(v));
    for (double& x : w.data()) x /= norm;
    v = std::move(w);
  }
  return lambda;
}

}  // namespace

TEST_CASE("normalize_adjacency worked values") {
  CHECK(normalize_adjacency(adjacency_from_edges(1, {})).to_dense() == Matrix{{1.0}});
  CHECK(normalize_adjacency(adjacency_from_edges(2, {{0, 1}})).to_dense() == Matrix{{0.5, 0.5}, {0.5, 0.5}});
  const Matrix tri = normalize_adjacency(adjacency_from_edges(3, {{0, 1}, {1, 2}, {0, 2}})).to_dense();
  for (double v : tri.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  // An isolated node keeps its self loop.
  const Matrix iso = normalize_adjacency(adjacency_from_edges(3, {{0, 1}})).to_dense();
  CHECK(iso(2, 2) == 1.0);
  CHECK(iso(2, 0) == 0.0);
}

TEST_CASE("literal degree mode") {
  // Degrees from A alone: the 2-node path gives rows summing to 2.
  CHECK(normalize_adjacency(adjacency_from_edges(2, {{0, 1}}), DegreeMode::literal).to_dense() ==
        Matrix{{1.0, 1.0}, {1.0, 1.0}});
  // Isolated node falls back to degree 1.
  CHECK(normalize_adjacency(adjacency_from_edges(1, {}), DegreeMode::literal).to_dense() == Matrix{{1.0}});
}

TEST_CASE("normalize_adjacency rejects invalid input") {
  CsrMatrix asym = CsrMatrix::from_dense(Matrix{{0, 1}, {0, 0}});
  CHECK_THROWS_AS(normalize_adjacency(asym), ValidationError);
  CsrMatrix loop = CsrMatrix::from_dense(Matrix{{1, 1}, {1, 0}});
  CHECK_THROWS_AS(normalize_adjacency(loop), ValidationError);
}

TEST_CASE("normalized adjacency is symmetric with spectral radius at most one") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CsrMatrix a = normalize_adjacency(random_graph(4 + seed, 0.35, seed));
    CHECK(a.is_symmetric(0.0));
    CHECK(spectral_radius(a.to_dense()) <= 1.0 + 1e-9);
  }
  // On a regular graph the row sums are exactly one (up to rounding).
  const Matrix cycle =
      normalize_adjacency(adjacency_from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}})).to_dense();
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (double v : cycle.row(i)) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("adjacency_from_edges") {
  const CsrMatrix a = adjacency_from_edges(3, {{0, 1}, {1, 0}, {0, 1}, {2, 1}});
  CHECK(a.nnz() == 4);
  CHECK(edge_set(a) == EdgeSet{{0, 1}, {1, 2}});
  CHECK_THROWS_AS(adjacency_from_edges(3, {{1, 1}}), ValidationError);
  CHECK_THROWS_AS(adjacency_from_edges(3, {{0, 3}}), ValidationError);
}

TEST_CASE("knn_heat_graph worked values") {
  CHECK(edge_set(knn_heat_graph(Matrix{{0}, {1}, {10}}, 1)) == EdgeSet{{0, 1}, {1, 2}});
  CHECK(edge_set(knn_heat_graph(Matrix{{3, 3}, {3, 3}}, 1)) == EdgeSet{{0, 1}});
  CHECK_THROWS_AS(knn_heat_graph(Matrix{{0}, {1}, {2}}, 3), ParameterError);
  CHECK_THROWS_AS(knn_heat_graph(Matrix{{0}, {1}, {2}}, 0), ParameterError);

  const CsrMatrix w = knn_heat_similarity(Matrix{{0}, {1}, {10}}, 1, 2.0);
  CHECK(w.at(0, 1) == doctest::Approx(std::exp(-0.5)));
  CHECK(w.at(2, 1) == doctest::Approx(std::exp(-81.0 / 2.0)));
}

TEST_CASE("knn graph on two far blobs has no cross edge") {
  Rng rng(5);
  Matrix x = uniform_matrix(20, 2, -0.5, 0.5, rng);  // blob radius < 1
  for (std::size_t i = 10; i < 20; ++i) x(i, 0) += 10.0;
  for (const auto& [u, v] : edges_of(knn_heat_graph(x, 3))) CHECK((u < 10) == (v < 10));
}

TEST_CASE("every node selects k neighbours before symmetrization") {
  const Matrix x = test::random_matrix(100, 4, 8);
  const CsrMatrix s = knn_heat_similarity(x, 5);
  for (std::size_t i = 0; i < 100; ++i) CHECK(s.row_ptr[i + 1] - s.row_ptr[i] == 5);
  const CsrMatrix g = knn_heat_graph(x, 5);
  for (std::size_t i = 0; i < 100; ++i) CHECK(g.row_ptr[i + 1] - g.row_ptr[i] >= 5);
}

TEST_CASE("knn graph is permutation equivariant") {
  const Matrix x = test::random_matrix(30, 3, 12);
  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), Rng(4));
  Matrix xp(30, 3);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 3; ++j) xp(i, j) = x(perm[i], j);

  EdgeSet mapped;
  for (const auto& [u, v] : edges_of(knn_heat_graph(xp, 4)))
    mapped.insert(std::minmax(perm[u], perm[v]));
  CHECK(mapped == edge_set(knn_heat_graph(x, 4)));
}

TEST_CASE("mean_pairwise_sq_dist matches brute force") {
  const Matrix x = test::random_matrix(9, 4, 2);
  double s = 0.0;
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j)
      if (i != j)
        for (std::size_t c = 0; c < 4; ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
  CHECK(mean_pairwise_sq_dist(x) == doctest::Approx(s / 72.0).epsilon(1e-12));
}

TEST_CASE("spmm") {
  const Matrix h = test::random_matrix(4, 3, 1);
  CHECK(spmm(CsrMatrix::identity(4), h) == h);
  CHECK(spmm(normalize_adjacency(adjacency_from_edges(2, {{0, 1}})), Matrix{{2}, {4}}) == Matrix{{3}, {3}});
  CHECK_THROWS_AS(spmm(CsrMatrix::identity(3), h), ShapeError);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 2 + seed;
    const CsrMatrix a = normalize_adjacency(random_graph(n, 0.3, 100 + seed));
    const Matrix hh = test::random_matrix(n, 5, seed);
    CHECK(max_abs_diff(spmm(a, hh), kernels::matmul(a.to_dense(), hh)) < 1e-12);
  }
}

TEST_CASE("sbm_synthesize") {
  SbmSpec s;
  s.k = 2;
  s.sizes = {5, 7};
  s.p_in = 1.0;
  s.p_out = 0.0;
  s.attr_dim = 3;
  const GraphData g = sbm_synthesize(s);
  CHECK(g.n() == 12);
  CHECK(g.adjacency.nnz() == 5 * 4 + 7 * 6);  // two cliques
  for (const auto& [u, v] : edges_of(g.adjacency)) CHECK((*g.labels)[u] == (*g.labels)[v]);
  CHECK(std::count(g.labels->begin(), g.labels->end(), 0) == 5);
  CHECK(std::count(g.labels->begin(), g.labels->end(), 1) == 7);

  const GraphData h = sbm_synthesize(s);
  CHECK(test::bitwise_equal(g.x, h.x));
  CHECK(g.adjacency == h.adjacency);

  s.p_out = 1.0;
  CHECK_THROWS_AS(sbm_synthesize(s), ParameterError);
  s.p_out = -0.1;
  CHECK_THROWS_AS(sbm_synthesize(s), ParameterError);
}

TEST_CASE("sbm attributes alone are nearly separable") {
  SbmSpec s;
  s.p_out = 0.01;
  const GraphData g = sbm_synthesize(s);
  KMeansOptions km;
  km.seed = 1;
  CHECK(accuracy(*g.labels, kmeans(g.x, 3, km).labels, 3) >= 0.95);
}
