#include "dfcn/adam.hpp"

#include <cmath>

#include "dfcn/errors.hpp"

namespace dfcn {

void adam_step(const ParamList& params, const std::vector<Matrix>& grads, AdamState& state,
               const AdamOptions& opt) {
  if (grads.size() != params.size())
    throw ShapeError("adam: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  if (state.m.empty()) {
    for (const auto& [name, p] : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.m.size() != params.size()) throw ContractError("adam: state belongs to another parameter set");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!grads[i].same_shape(*params[i].second))
      throw ShapeError("adam: gradient " + shape_str(grads[i]) + " for parameter " +
                       params[i].first + " " + shape_str(*params[i].second));

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].second->data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = opt.beta1 * m[j] + (1.0 - opt.beta1) * g[j];
      v[j] = opt.beta2 * v[j] + (1.0 - opt.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
}

}  // namespace dfcn
