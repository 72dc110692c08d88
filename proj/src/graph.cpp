#include "dfcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "dfcn/errors.hpp"
#include "dfcn/kernels.hpp"
#include "dfcn/rng.hpp"

namespace dfcn {

void validate_adjacency(const CsrMatrix& a) {
  if (a.rows != a.cols) throw ValidationError("adjacency must be square");
  a.validate();
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      if (a.col_idx[p] == r) throw ValidationError("adjacency has a self loop at node " + std::to_string(r));
      if (a.values[p] != 1.0) throw ValidationError("adjacency must be binary");
    }
  }
  if (!a.is_symmetric()) throw ValidationError("adjacency is not symmetric");
}

void GraphData::validate() const {
  const std::size_t nodes = x.rows();
  if (adjacency.rows != nodes)
    throw ValidationError("adjacency has " + std::to_string(adjacency.rows) + " nodes, attributes " +
                          std::to_string(nodes));
  validate_adjacency(adjacency);
  if (!adj_norm) throw ValidationError("normalized adjacency missing");
  if (adj_norm->rows != nodes || adj_norm->cols != nodes)
    throw ValidationError("normalized adjacency has wrong shape");
  adj_norm->validate();
  if (!adj_norm->is_symmetric(1e-12)) throw ValidationError("normalized adjacency not symmetric");
  for (double v : adj_norm->values)
    if (v < 0.0) throw ValidationError("normalized adjacency has a negative entry");
  if (k < 2) throw ValidationError("cluster count must be at least 2");
  if (!x.all_finite()) throw ValidationError("attributes contain non-finite values");
  if (labels) {
    if (labels->size() != nodes)
      throw ValidationError("labels length " + std::to_string(labels->size()) + " != nodes " +
                            std::to_string(nodes));
    for (std::size_t i = 0; i < labels->size(); ++i) {
      const int l = (*labels)[i];
      if (l < 0 || static_cast<std::size_t>(l) >= k)
        throw ValidationError("label " + std::to_string(l) + " at node " + std::to_string(i) +
                              " outside [0, " + std::to_string(k) + ")");
    }
  }
}

CsrMatrix normalize_adjacency(const CsrMatrix& a, DegreeMode mode) {
  if (a.rows != a.cols) throw ValidationError("normalize_adjacency: adjacency must be square");
  if (!a.is_symmetric()) throw ValidationError("normalize_adjacency: adjacency is not symmetric");
  for (std::size_t r = 0; r < a.rows; ++r)
    if (a.at(r, r) != 0.0) throw ValidationError("normalize_adjacency: nonzero diagonal");

  const std::size_t n = a.rows;
  std::vector<double> degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) deg += a.values[p];
    if (mode == DegreeMode::self_loop) deg += 1.0;
    if (deg <= 0.0) deg = 1.0;
    degree[i] = deg;
  }

  CsrMatrix out;
  out.rows = out.cols = n;
  out.row_ptr.reserve(n + 1);
  out.col_idx.reserve(a.nnz() + n);
  out.values.reserve(a.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) {
    bool diag_done = false;
    auto emit_diag = [&] {
      out.col_idx.push_back(i);
      out.values.push_back(1.0 / degree[i]);
      diag_done = true;
    };
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const std::size_t j = a.col_idx[p];
      if (!diag_done && j > i) emit_diag();
      out.col_idx.push_back(j);
      // One sqrt of the product keeps exact cases exact (1/sqrt(4) = 0.5).
      out.values.push_back(a.values[p] / std::sqrt(degree[i] * degree[j]));
    }
    if (!diag_done) emit_diag();
    out.row_ptr.push_back(out.col_idx.size());
  }
  return out;
}

CsrMatrix adjacency_from_edges(std::size_t n,
                               const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n)
      throw ValidationError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") out of range for " + std::to_string(n) + " nodes");
    if (u == v) throw ValidationError("self loop at node " + std::to_string(u));
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }
  CsrMatrix a;
  a.rows = a.cols = n;
  for (auto& row : nbrs) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    a.col_idx.insert(a.col_idx.end(), row.begin(), row.end());
    a.row_ptr.push_back(a.col_idx.size());
  }
  a.values.assign(a.col_idx.size(), 1.0);
  return a;
}

std::vector<std::pair<std::size_t, std::size_t>> edges_of(const CsrMatrix& a) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p)
      if (a.col_idx[p] > r) out.emplace_back(r, a.col_idx[p]);
  return out;
}

double mean_pairwise_sq_dist(const Matrix& x) {
  const std::size_t n = x.rows();
  if (n < 2) return 0.0;
  // sum_{i,j} ||x_i - x_j||^2 = 2 n sum_i ||x_i||^2 - 2 ||sum_i x_i||^2
  double sq = 0.0;
  std::vector<double> total(x.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = x.row(i);
    for (std::size_t c = 0; c < r.size(); ++c) {
      sq += r[c] * r[c];
      total[c] += r[c];
    }
  }
  double tt = 0.0;
  for (double v : total) tt += v * v;
  const double nn = static_cast<double>(n);
  return std::max(0.0, 2.0 * nn * sq - 2.0 * tt) / (nn * (nn - 1.0));
}

CsrMatrix knn_heat_similarity(const Matrix& x, std::size_t k, std::optional<double> bandwidth) {
  const std::size_t n = x.rows();
  if (k < 1 || k >= n)
    throw ParameterError("knn: need 1 <= k < N, got k=" + std::to_string(k) + " N=" +
                         std::to_string(n));
  double t = bandwidth ? *bandwidth : mean_pairwise_sq_dist(x);
  if (bandwidth && !(t > 0.0)) throw ParameterError("knn: heat bandwidth must be positive");
  if (!(t > 0.0)) t = 1.0;  // all points coincide

  std::vector<std::size_t> cols(n * k);
  std::vector<double> vals(n * k);
#pragma omp parallel
  {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(n);
#pragma omp for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      cand.clear();
      const auto xi = x.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const auto xj = x.row(j);
        double d = 0.0;
        for (std::size_t c = 0; c < xi.size(); ++c) {
          const double diff = xi[c] - xj[c];
          d += diff * diff;
        }
        cand.emplace_back(d, j);
      }
      // Similarity is decreasing in distance; ordering by distance keeps
      // neighbours distinguishable even where exp() underflows.
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
      std::sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                [](const auto& a, const auto& b) { return a.second < b.second; });
      for (std::size_t s = 0; s < k; ++s) {
        cols[i * k + s] = cand[s].second;
        vals[i * k + s] = std::exp(-cand[s].first / t);
      }
    }
  }
  CsrMatrix out;
  out.rows = out.cols = n;
  out.row_ptr.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out.row_ptr[i] = i * k;
  out.col_idx = std::move(cols);
  out.values = std::move(vals);
  return out;
}

CsrMatrix knn_heat_graph(const Matrix& x, std::size_t k, std::optional<double> bandwidth) {
  const CsrMatrix sim = knn_heat_similarity(x, k, bandwidth);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(sim.nnz());
  for (std::size_t r = 0; r < sim.rows; ++r)
    for (std::size_t p = sim.row_ptr[r]; p < sim.row_ptr[r + 1]; ++p)
      edges.emplace_back(r, sim.col_idx[p]);
  return adjacency_from_edges(x.rows(), edges);
}

Matrix spmm(const CsrMatrix& a, const Matrix& h) { return kernels::spmm(a, h); }

GraphData make_graph(Matrix x, CsrMatrix adjacency, std::optional<Labels> labels, std::size_t k,
                     DegreeMode mode) {
  GraphData g;
  g.adj_norm = std::make_shared<const CsrMatrix>(normalize_adjacency(adjacency, mode));
  g.x = std::move(x);
  g.adjacency = std::move(adjacency);
  g.labels = std::move(labels);
  g.k = k;
  g.validate();
  return g;
}

GraphData sbm_synthesize(const SbmSpec& spec) {
  if (spec.k < 2) throw ParameterError("sbm: need at least 2 blocks");
  if (spec.sizes.size() != spec.k)
    throw ParameterError("sbm: " + std::to_string(spec.sizes.size()) + " sizes for " +
                         std::to_string(spec.k) + " blocks");
  if (!(spec.p_out >= 0.0 && spec.p_out < spec.p_in && spec.p_in <= 1.0))
    throw ParameterError("sbm: need 0 <= p_out < p_in <= 1");
  if (spec.attr_dim < spec.k) throw ParameterError("sbm: attr_dim must be at least the block count");
  if (!(spec.attr_sep >= 0.0)) throw ParameterError("sbm: attr_sep must be non-negative");
  for (std::size_t s : spec.sizes)
    if (s == 0) throw ParameterError("sbm: empty block");

  Labels labels;
  for (std::size_t b = 0; b < spec.k; ++b) labels.insert(labels.end(), spec.sizes[b], static_cast<int>(b));
  const std::size_t n = labels.size();

  Rng rng(spec.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = labels[i] == labels[j] ? spec.p_in : spec.p_out;
      if (coin(rng) < p) edges.emplace_back(i, j);
    }
  }

  Matrix x = normal_matrix(n, spec.attr_dim, 1.0, rng);
  const double offset = spec.attr_sep / std::sqrt(2.0);
  for (std::size_t i = 0; i < n; ++i) x(i, static_cast<std::size_t>(labels[i])) += offset;

  return make_graph(std::move(x), adjacency_from_edges(n, edges), std::move(labels), spec.k);
}

}  // namespace dfcn
