#pragma once

// Brute-force reference implementations. Deliberately naive: they share no
// code with the library and enumerate where the library computes in closed form.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "dfcn/labels.hpp"
#include "dfcn/matrix.hpp"

namespace dfcn::oracle {

/// Minimum assignment cost over all K! permutations.
inline double brute_assignment(const Matrix& cost) {
  std::vector<int> perm(cost.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += cost(i, static_cast<std::size_t>(perm[i]));
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline std::size_t matches(const Labels& y, const Labels& pred, const std::vector<int>& cluster_to_class) {
  std::size_t m = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (cluster_to_class[static_cast<std::size_t>(pred[i])] == y[i]) ++m;
  return m;
}

/// Every cluster -> class bijection attaining the best accuracy.
inline std::vector<std::vector<int>> optimal_mappings(const Labels& y, const Labels& pred, std::size_t k) {
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  std::vector<std::vector<int>> out;
  do {
    const std::size_t m = matches(y, pred, perm);
    if (m > best || out.empty()) {
      best = m;
      out.clear();
    }
    if (m == best) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

inline double accuracy(const Labels& y, const Labels& pred, std::size_t k) {
  const auto maps = optimal_mappings(y, pred, k);
  return static_cast<double>(matches(y, pred, maps.front())) / static_cast<double>(y.size());
}

/// Macro F1 from an explicit confusion count for one mapping.
inline double macro_f1_under(const Labels& y, const Labels& pred, std::size_t k, const std::vector<int>& map) {
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const bool is_true = y[i] == static_cast<int>(c);
      const bool is_pred = map[static_cast<std::size_t>(pred[i])] == static_cast<int>(c);
      tp += is_true && is_pred;
      fp += !is_true && is_pred;
      fn += is_true && !is_pred;
    }
    if (tp + fp + fn > 0) sum += 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return sum / static_cast<double>(k);
}

/// The F1 values reachable through any accuracy-optimal mapping.
inline std::set<double> admissible_f1(const Labels& y, const Labels& pred, std::size_t k) {
  std::set<double> out;
  for (const auto& m : optimal_mappings(y, pred, k)) out.insert(macro_f1_under(y, pred, k, m));
  return out;
}

inline double entropy(const std::vector<int>& l) {
  std::map<int, double> counts;
  for (int v : l) counts[v] += 1.0;
  double h = 0.0;
  for (const auto& [v, c] : counts) {
    const double p = c / static_cast<double>(l.size());
    h -= p * std::log(p);
  }
  return h;
}

/// MI via H(Y) + H(C) - H(Y, C), with arithmetic-mean normalization.
inline double nmi(const Labels& y, const Labels& c) {
  std::vector<int> joint(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) joint[i] = y[i] * 1000 + c[i];
  const double hy = entropy(y), hc = entropy(c);
  const double mi = hy + hc - entropy(joint);
  if (hy == 0.0 && hc == 0.0) return 1.0;
  if (hy == 0.0 || hc == 0.0) return 0.0;
  return mi / (0.5 * (hy + hc));
}

/// ARI from explicit enumeration of all unordered pairs.
inline double ari(const Labels& y, const Labels& c) {
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = i + 1; j < y.size(); ++j) {
      const bool sy = y[i] == y[j], sc = c[i] == c[j];
      n11 += sy && sc;
      n10 += sy && !sc;
      n01 += !sy && sc;
      n00 += !sy && !sc;
    }
  const double denom = (n11 + n01) * (n01 + n00) + (n11 + n10) * (n10 + n00);
  if (denom == 0.0) return 1.0;
  return 2.0 * (n11 * n00 - n10 * n01) / denom;
}

/// Calls f(labels) for every labeling of n items with values in [0, k).
template <class F>
void for_each_labeling(std::size_t n, std::size_t k, F&& f) {
  Labels l(n, 0);
  while (true) {
    f(static_cast<const Labels&>(l));
    std::size_t i = 0;
    while (i < n && ++l[i] == static_cast<int>(k)) l[i++] = 0;
    if (i == n) return;
  }
}

}  // namespace dfcn::oracle
