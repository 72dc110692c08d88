#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dfcn/matrix.hpp"
#include "dfcn/tape.hpp"

namespace dfcn {

/// Builds a scalar objective on `tape` from parameter leaves bound in the same order as `params`.
using Objective = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckResult {
  /// max over coordinates of |analytic - numeric| / max(1, |numeric|)
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compares tape gradients with central differences (f(x+eps) - f(x-eps)) / 2eps.
/// Throws DeterminismError when two baseline evaluations of f disagree.
GradCheckResult finite_diff_check(const Objective& f, const std::vector<Matrix>& params,
                                  double epsilon = 1e-5);

/// Evaluates the objective once and returns its gradients (one per parameter).
std::vector<Matrix> tape_gradients(const Objective& f, const std::vector<Matrix>& params,
                                   double* value = nullptr);

}  // namespace dfcn
