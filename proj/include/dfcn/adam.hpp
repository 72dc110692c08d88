#pragma once

#include <cstddef>
#include <vector>

#include "dfcn/params.hpp"

namespace dfcn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::size_t t = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// One bias-corrected Adam update of every parameter in place.
/// `grads[i]` must have the shape of `*params[i].second`.
void adam_step(const ParamList& params, const std::vector<Matrix>& grads, AdamState& state,
               const AdamOptions& opt);

}  // namespace dfcn
