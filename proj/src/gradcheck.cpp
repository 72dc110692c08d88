#include "dfcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dfcn/errors.hpp"

namespace dfcn {

namespace {

double evaluate(const Objective& f, const std::vector<Matrix>& params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Matrix& p : params) leaves.push_back(tape.constant(p));
  return f(tape, leaves).value().item();
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

std::vector<Matrix> tape_gradients(const Objective& f, const std::vector<Matrix>& params,
                                   double* value) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Matrix& p : params) leaves.push_back(tape.parameter(p));
  Var root = f(tape, leaves);
  tape.backward(root);
  if (value != nullptr) *value = root.value().item();
  std::vector<Matrix> grads;
  grads.reserve(leaves.size());
  for (Var v : leaves) grads.push_back(tape.grad(v));
  return grads;
}

GradCheckResult finite_diff_check(const Objective& f, const std::vector<Matrix>& params,
                                  double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("finite_diff_check: epsilon must be positive");
  const double base1 = evaluate(f, params);
  const double base2 = evaluate(f, params);
  if (!bitwise_equal(base1, base2)) {
    throw DeterminismError("finite_diff_check: objective is not deterministic");
  }

  const std::vector<Matrix> analytic = tape_gradients(f, params);
  GradCheckResult result;
  std::vector<Matrix> work = params;
  for (std::size_t p = 0; p < work.size(); ++p) {
    auto data = work[p].data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + epsilon;
      const double up = evaluate(f, work);
      data[i] = saved - epsilon;
      const double down = evaluate(f, work);
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double g = analytic[p].data()[i];
      const double err = std::abs(g - numeric) / std::max(1.0, std::abs(numeric));
      ++result.coordinates;
      if (err > result.max_rel_error || result.coordinates == 1) {
        result.max_rel_error = err;
        result.worst_param = p;
        result.worst_index = i;
        result.worst_analytic = g;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace dfcn
