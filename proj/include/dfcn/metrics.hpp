#pragma once

#include <cstddef>
#include <vector>

#include "dfcn/labels.hpp"
#include "dfcn/matrix.hpp"

namespace dfcn {

/// counts(c, y) = number of nodes with predicted cluster c and true class y.
using Contingency = std::vector<std::vector<std::size_t>>;

Contingency contingency(const Labels& y_true, const Labels& y_pred, std::size_t k);

/// Cluster -> class bijection maximizing agreement (Kuhn-Munkres on -counts).
std::vector<int> best_mapping(const Labels& y_true, const Labels& y_pred, std::size_t k);

/// Applies a cluster -> class mapping.
Labels relabel(const Labels& y_pred, const std::vector<int>& mapping);

double accuracy(const Labels& y_true, const Labels& y_pred, std::size_t k);

enum class NmiNorm { arithmetic, geometric };

/// Mutual information over the chosen mean of the two entropies (natural logs).
/// Two constant labelings score 1; constant against non-constant scores 0.
double nmi(const Labels& y_true, const Labels& y_pred, NmiNorm norm = NmiNorm::arithmetic);

/// Adjusted Rand index. Degenerate partitions where the index equals its
/// expectation (for example all singletons on both sides) score 1.
double ari(const Labels& y_true, const Labels& y_pred);

/// Unweighted mean of per-class F1 over K classes after best_mapping; a class
/// with no true or predicted members contributes 0.
double macro_f1(const Labels& y_true, const Labels& y_pred, std::size_t k);

struct EvalReport {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  double f1 = 0.0;
  Contingency table;
  std::vector<int> mapping;
};

EvalReport evaluate(const Labels& y_true, const Labels& y_pred, std::size_t k,
                    NmiNorm norm = NmiNorm::arithmetic);

}  // namespace dfcn
