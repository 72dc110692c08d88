#include "dfcn/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dfcn/errors.hpp"
#include "dfcn/kernels.hpp"
#include "dfcn/log.hpp"

namespace dfcn {

namespace {

double mean_feature_variance(const Matrix& z) {
  const std::size_t n = z.rows(), d = z.cols();
  if (n == 0 || d == 0) return 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += z(i, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (z(i, c) - mean) * (z(i, c) - mean);
    total += var / static_cast<double>(n);
  }
  return total / static_cast<double>(d);
}

/// Nearest-center labels; returns the inertia.
double assign(const Matrix& z, const Matrix& centers, Labels& labels, std::vector<double>& dist) {
  const Matrix d = kernels::pairwise_sq_dist(z, centers);
  double inertia = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto r = d.row(i);
    const auto best = static_cast<std::size_t>(std::min_element(r.begin(), r.end()) - r.begin());
    labels[i] = static_cast<int>(best);
    dist[i] = r[best];
    inertia += r[best];
  }
  return inertia;
}

}  // namespace

Matrix kmeans_plus_plus(const Matrix& z, std::size_t k, Rng& rng) {
  const std::size_t n = z.rows();
  if (k == 0 || k > n)
    throw ParameterError("kmeans: need 1 <= K <= N, got K=" + std::to_string(k) + " N=" + std::to_string(n));
  Matrix centers(k, z.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  std::copy(z.row(first).begin(), z.row(first).end(), centers.row(0).begin());

  std::vector<double> closest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  taken[first] = true;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    const auto prev = centers.row(c - 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      const auto zi = z.row(i);
      for (std::size_t j = 0; j < zi.size(); ++j) d += (zi[j] - prev[j]) * (zi[j] - prev[j]);
      closest[i] = std::min(closest[i], d);
      total += closest[i];
    }
    std::size_t chosen = n;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += closest[i];
        if (closest[i] > 0.0 && acc >= target) {
          chosen = i;
          break;
        }
      }
      if (chosen == n) {
        for (std::size_t i = n; i-- > 0;)
          if (closest[i] > 0.0) { chosen = i; break; }
      }
    } else {
      // Every point coincides with a chosen center: take the first unused one.
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) { chosen = i; break; }
    }
    taken[chosen] = true;
    std::copy(z.row(chosen).begin(), z.row(chosen).end(), centers.row(c).begin());
  }
  return centers;
}

KMeansResult lloyd(const Matrix& z, Matrix centers, std::size_t max_iter, double tol) {
  const std::size_t n = z.rows(), k = centers.rows(), d = z.cols();
  if (centers.cols() != d) throw ShapeError("lloyd: centers " + shape_str(centers) + " vs data " + shape_str(z));
  const double tol_abs = tol * mean_feature_variance(z);

  KMeansResult res;
  res.labels.assign(n, 0);
  std::vector<double> dist(n);
  double inertia = assign(z, centers, res.labels, dist);
  res.inertia_trace.push_back(inertia);

  for (std::size_t it = 0; it < max_iter; ++it) {
    Matrix next(k, d);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(res.labels[i]);
      ++count[c];
      auto row = next.row(c);
      const auto zi = z.row(i);
      for (std::size_t j = 0; j < d; ++j) row[j] += zi[j];
    }
    std::vector<bool> used(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        for (double& v : next.row(c)) v /= static_cast<double>(count[c]);
        continue;
      }
      std::size_t far = 0;
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (!used[i] && dist[i] > best) { best = dist[i]; far = i; }
      used[far] = true;
      dist[far] = 0.0;
      std::copy(z.row(far).begin(), z.row(far).end(), next.row(c).begin());
      log::warn("kmeans: empty cluster " + std::to_string(c) + " re-seeded at point " + std::to_string(far));
    }
    double shift = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double diff = next.data()[i] - centers.data()[i];
      shift += diff * diff;
    }
    centers = std::move(next);
    const Labels before = res.labels;
    inertia = assign(z, centers, res.labels, dist);
    res.inertia_trace.push_back(inertia);
    res.iterations = it + 1;
    if (shift <= tol_abs || res.labels == before) break;
  }
  res.centers = std::move(centers);
  res.inertia = inertia;
  return res;
}

KMeansResult kmeans(const Matrix& z, std::size_t k, const KMeansOptions& opt) {
  if (k == 0 || k > z.rows())
    throw ParameterError("kmeans: need 1 <= K <= N, got K=" + std::to_string(k) + " N=" +
                         std::to_string(z.rows()));
  const std::size_t restarts = std::max<std::size_t>(1, opt.restarts);
  std::vector<KMeansResult> runs(restarts);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(restarts); ++r) {
    Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(r)));
    runs[static_cast<std::size_t>(r)] = lloyd(z, kmeans_plus_plus(z, k, rng), opt.max_iter, opt.tol);
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r)
    if (runs[r].inertia < runs[best].inertia) best = r;
  return std::move(runs[best]);
}

Assignment kuhn_munkres(const Matrix& cost) {
  if (cost.rows() != cost.cols())
    throw ShapeError("kuhn_munkres: cost matrix must be square, got " + shape_str(cost));
  if (!cost.all_finite()) throw ValidationError("kuhn_munkres: non-finite cost");
  const std::size_t n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
        if (minv[j] < delta) { delta = minv[j]; j1 = j; }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) { u[match[j]] += delta; v[j] -= delta; }
        else minv[j] -= delta;
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment a;
  a.row_to_col.assign(n, -1);
  for (std::size_t j = 1; j <= n; ++j) a.row_to_col[match[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t i = 0; i < n; ++i) a.cost += cost(i, static_cast<std::size_t>(a.row_to_col[i]));
  return a;
}

}  // namespace dfcn
