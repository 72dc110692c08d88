#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records primitive operations in execution order. Each recorded node
// keeps its value and a backward rule; Tape::backward() walks the nodes in
// reverse and accumulates adjoints. Scalars are 1x1 matrices.

#include <cstddef>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "dfcn/matrix.hpp"

namespace dfcn {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  /// Receives the tape, the node's own handle and its adjoint.
  using BackwardFn = std::function<void(Tape&, Var self, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Matrix value);
  /// Leaf whose adjoint is populated by backward().
  Var parameter(Matrix value);

  /// Appends an op node. The backward rule is dropped when no input needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);

  const Matrix& value(Var v) const;
  /// Adjoint of v from the last backward(); zeros if v did not influence the root.
  const Matrix& grad(Var v) const;
  bool requires_grad(Var v) const;

  /// Clears all adjoints, seeds the 1x1 root with 1 and propagates.
  /// Throws ContractError when the root is not 1x1 or lives on another tape.
  void backward(Var root);

  /// Adds g into v's adjoint; used by backward rules.
  void accumulate(Var v, const Matrix& g);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::vector<Node> nodes_;
};

enum class Activation { identity, tanh, leaky_relu, sigmoid, relu };

/// Slope of the negative half of Activation::leaky_relu.
inline constexpr double kLeakySlope = 0.2;

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

double apply_activation(Activation a, double x);

// Plain matrix helpers shared by the pure-function APIs.
Matrix row_softmax(const Matrix& a);
double frobenius_sq(const Matrix& a);

/// Recorded primitives.
namespace ad {

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// s * a where s is a 1x1 node.
Var mul_scalar(Var s, Var a);
/// alpha * a + (1 - alpha) * b, alpha a 1x1 node.
Var blend(Var alpha, Var a, Var b);
/// Adds a 1xc bias row to every row of a.
Var add_row(Var a, Var bias);
Var activate(Var a, Activation act);
Var row_softmax(Var a);
/// Sum of squared entries, 1x1.
Var frobenius_sq(Var a);
/// Constant sparse operator times a node. The operator is shared with the backward rule.
Var spmm(std::shared_ptr<const CsrMatrix> a, Var h);
/// Unnormalized Student-t kernel (1 + ||z_i - u_j||^2 / dof)^(-(dof + 1) / 2), N x K.
Var student_t_kernel(Var z, Var centers, double dof);
/// Divides every row by its sum.
Var row_normalize(Var a);
/// sum_ij p_ij * ln(p_ij / m_ij) with p constant; zero p terms vanish and
/// m is floored at eps (with a logged warning) where p > 0.
Var kl_div(const Matrix& p, Var m, double eps = 1e-12);

}  // namespace ad
}  // namespace dfcn
