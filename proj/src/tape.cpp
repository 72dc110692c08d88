#include "dfcn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dfcn/errors.hpp"
#include "dfcn/kernels.hpp"
#include "dfcn/log.hpp"

namespace dfcn {

const Matrix& Var::value() const {
  if (tape == nullptr) throw ContractError("unbound Var");
  return tape->value(*this);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (Var in : inputs) {
    if (in.tape != this || in.id >= nodes_.size()) throw ContractError("input from another tape");
    needs = needs || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(fn) : BackwardFn{}});
  return Var{this, nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw ContractError("Var does not belong to tape");
  return nodes_[v.id];
}

Tape::Node& Tape::node(Var v) {
  if (v.tape != this || v.id >= nodes_.size()) throw ContractError("Var does not belong to tape");
  return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }
const Matrix& Tape::grad(Var v) const { return node(v).grad; }
bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = node(v);
  if (!n.requires_grad) return;
  n.grad += g;
}

void Tape::backward(Var root) {
  const Node& r = node(root);
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw ContractError("backward root must be 1x1, got " + shape_str(r.value));
  }
  for (Node& n : nodes_) n.grad = Matrix(n.value.rows(), n.value.cols());
  nodes_[root.id].grad(0, 0) = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward) n.backward(*this, Var{this, i}, n.grad);
  }
}

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "relu") return Activation::relu;
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
  }
  return "?";
}

double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::tanh: return std::tanh(x);
    case Activation::leaky_relu: return x > 0.0 ? x : kLeakySlope * x;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

Matrix row_softmax(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto in = a.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) sum += (o[j] = std::exp(in[j] - mx));
    for (double& v : o) v /= sum;
  }
  return out;
}

double frobenius_sq(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

namespace ad {

namespace {

void check_same(const char* op, Var a, Var b) {
  if (!a.value().same_shape(b.value()))
    throw ShapeError(std::string(op) + ": " + shape_str(a.value()) + " vs " + shape_str(b.value()));
}

void check_scalar(const char* op, Var s) {
  if (s.rows() != 1 || s.cols() != 1)
    throw ShapeError(std::string(op) + ": expected 1x1 scalar, got " + shape_str(s.value()));
}

double dot(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

}  // namespace

Var matmul(Var a, Var b) {
  Matrix out = kernels::matmul(a.value(), b.value());
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, Var, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, kernels::matmul_nt(g, b.value()));
    if (t.requires_grad(b)) t.accumulate(b, kernels::matmul_tn(a.value(), g));
  });
}

Var matmul_nt(Var a, Var b) {
  Matrix out = kernels::matmul_nt(a.value(), b.value());
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, Var, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, kernels::matmul(g, b.value()));
    if (t.requires_grad(b)) t.accumulate(b, kernels::matmul_tn(g, a.value()));
  });
}

Var transpose(Var a) {
  return a.tape->record(a.value().transposed(), {a}, [a](Tape& t, Var, const Matrix& g) {
    t.accumulate(a, g.transposed());
  });
}

Var add(Var a, Var b) {
  check_same("add", a, b);
  return a.tape->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, Var, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  check_same("sub", a, b);
  return a.tape->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, Var, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) t.accumulate(b, -1.0 * g);
  });
}

Var scale(Var a, double s) {
  return a.tape->record(s * a.value(), {a}, [a, s](Tape& t, Var, const Matrix& g) {
    t.accumulate(a, s * g);
  });
}

Var mul_scalar(Var s, Var a) {
  check_scalar("mul_scalar", s);
  const double sv = s.value().item();
  return a.tape->record(sv * a.value(), {s, a}, [s, a, sv](Tape& t, Var, const Matrix& g) {
    if (t.requires_grad(s)) t.accumulate(s, Matrix::scalar(dot(g, a.value())));
    if (t.requires_grad(a)) t.accumulate(a, sv * g);
  });
}

Var blend(Var alpha, Var a, Var b) {
  check_scalar("blend", alpha);
  check_same("blend", a, b);
  const double w = alpha.value().item();
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = w * a.value().data()[i] + (1.0 - w) * b.value().data()[i];
  return a.tape->record(std::move(out), {alpha, a, b}, [alpha, a, b, w](Tape& t, Var, const Matrix& g) {
    if (t.requires_grad(alpha)) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        s += g.data()[i] * (a.value().data()[i] - b.value().data()[i]);
      t.accumulate(alpha, Matrix::scalar(s));
    }
    if (t.requires_grad(a)) t.accumulate(a, w * g);
    if (t.requires_grad(b)) t.accumulate(b, (1.0 - w) * g);
  });
}

Var add_row(Var a, Var bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw ShapeError("add_row: " + shape_str(a.value()) + " vs bias " + shape_str(bias.value()));
  Matrix out = a.value();
  const auto b = bias.value().row(0);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
  return a.tape->record(std::move(out), {a, bias}, [a, bias](Tape& t, Var, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(bias)) {
      Matrix gb(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
      t.accumulate(bias, gb);
    }
  });
}

Var activate(Var a, Activation act) {
  if (act == Activation::identity) return a;
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = apply_activation(act, a.value().data()[i]);
  return a.tape->record(std::move(out), {a}, [a, act](Tape& t, Var self, const Matrix& g) {
    const auto x = a.value().data();
    const auto y = self.value().data();
    Matrix d(g.rows(), g.cols());
    auto dd = d.data();
    const auto gg = g.data();
    for (std::size_t i = 0; i < dd.size(); ++i) {
      double slope = 1.0;
      switch (act) {
        case Activation::identity: break;
        case Activation::tanh: slope = 1.0 - y[i] * y[i]; break;
        case Activation::sigmoid: slope = y[i] * (1.0 - y[i]); break;
        case Activation::leaky_relu: slope = x[i] > 0.0 ? 1.0 : kLeakySlope; break;
        case Activation::relu: slope = x[i] > 0.0 ? 1.0 : 0.0; break;
      }
      dd[i] = gg[i] * slope;
    }
    t.accumulate(a, d);
  });
}

Var row_softmax(Var a) {
  return a.tape->record(dfcn::row_softmax(a.value()), {a}, [a](Tape& t, Var self, const Matrix& g) {
    const Matrix& y = self.value();
    Matrix d(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const auto gi = g.row(i);
      const auto yi = y.row(i);
      double inner = 0.0;
      for (std::size_t j = 0; j < gi.size(); ++j) inner += gi[j] * yi[j];
      auto di = d.row(i);
      for (std::size_t j = 0; j < gi.size(); ++j) di[j] = yi[j] * (gi[j] - inner);
    }
    t.accumulate(a, d);
  });
}

Var frobenius_sq(Var a) {
  return a.tape->record(Matrix::scalar(dfcn::frobenius_sq(a.value())), {a},
                        [a](Tape& t, Var, const Matrix& g) {
                          t.accumulate(a, (2.0 * g.item()) * a.value());
                        });
}

Var spmm(std::shared_ptr<const CsrMatrix> a, Var h) {
  if (!a) throw ContractError("spmm: null operator");
  Matrix out = kernels::spmm(*a, h.value());
  return h.tape->record(std::move(out), {h}, [a, h](Tape& t, Var, const Matrix& g) {
    if (a->is_symmetric()) {
      t.accumulate(h, kernels::spmm(*a, g));
    } else {
      t.accumulate(h, kernels::spmm(a->transposed(), g));
    }
  });
}

Var student_t_kernel(Var z, Var centers, double dof) {
  if (z.cols() != centers.cols())
    throw ShapeError("student_t_kernel: embedding " + shape_str(z.value()) + " vs centers " +
                     shape_str(centers.value()));
  if (!(dof > 0.0)) throw ParameterError("student_t_kernel: degrees of freedom must be positive");
  const Matrix dist = kernels::pairwise_sq_dist(z.value(), centers.value());
  const double power = -(dof + 1.0) / 2.0;
  Matrix out(dist.rows(), dist.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::pow(1.0 + dist.data()[i] / dof, power);
  return z.tape->record(
      std::move(out), {z, centers}, [z, centers, dof, dist](Tape& t, Var self, const Matrix& g) {
        const Matrix& q = self.value();
        const Matrix& zv = z.value();
        const Matrix& uv = centers.value();
        // h_ij = dL/d(dist_ij)
        Matrix h(g.rows(), g.cols());
        const double c = -(dof + 1.0) / (2.0 * dof);
        for (std::size_t i = 0; i < h.size(); ++i)
          h.data()[i] = g.data()[i] * c * q.data()[i] / (1.0 + dist.data()[i] / dof);
        if (t.requires_grad(z)) {
          Matrix dz = kernels::matmul(h, uv);
          for (std::size_t i = 0; i < zv.rows(); ++i) {
            double rs = 0.0;
            for (double v : h.row(i)) rs += v;
            auto dzi = dz.row(i);
            const auto zi = zv.row(i);
            for (std::size_t k = 0; k < dzi.size(); ++k) dzi[k] = 2.0 * (rs * zi[k] - dzi[k]);
          }
          t.accumulate(z, dz);
        }
        if (t.requires_grad(centers)) {
          Matrix du = kernels::matmul_tn(h, zv);
          for (std::size_t j = 0; j < uv.rows(); ++j) {
            double cs = 0.0;
            for (std::size_t i = 0; i < h.rows(); ++i) cs += h(i, j);
            auto duj = du.row(j);
            const auto uj = uv.row(j);
            for (std::size_t k = 0; k < duj.size(); ++k) duj[k] = -2.0 * (duj[k] - cs * uj[k]);
          }
          t.accumulate(centers, du);
        }
      });
}

Var row_normalize(Var a) {
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    double s = 0.0;
    for (double v : r) s += v;
    if (!(s > 0.0)) throw ContractError("row_normalize: row " + std::to_string(i) + " sums to zero");
    for (double& v : r) v /= s;
  }
  return a.tape->record(std::move(out), {a}, [a](Tape& t, Var self, const Matrix& g) {
    const Matrix& y = self.value();
    const Matrix& x = a.value();
    Matrix d(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double s = 0.0, inner = 0.0;
      for (double v : x.row(i)) s += v;
      const auto gi = g.row(i);
      const auto yi = y.row(i);
      for (std::size_t j = 0; j < gi.size(); ++j) inner += gi[j] * yi[j];
      auto di = d.row(i);
      for (std::size_t j = 0; j < gi.size(); ++j) di[j] = (gi[j] - inner) / s;
    }
    t.accumulate(a, d);
  });
}

Var kl_div(const Matrix& p, Var m, double eps) {
  if (!p.same_shape(m.value()))
    throw ShapeError("kl_div: target " + shape_str(p) + " vs " + shape_str(m.value()));
  const Matrix& mv = m.value();
  double loss = 0.0;
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.data()[i];
    if (pi <= 0.0) continue;
    double mi = mv.data()[i];
    if (mi < eps) {
      mi = eps;
      ++clamped;
    }
    loss += pi * std::log(pi / mi);
  }
  if (clamped > 0)
    log::warn("kl_div: " + std::to_string(clamped) + " mixture entries floored at eps");
  return m.tape->record(Matrix::scalar(loss), {m}, [p, m, eps](Tape& t, Var, const Matrix& g) {
    const Matrix& mv = m.value();
    Matrix d(mv.rows(), mv.cols());
    const double gs = g.item();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double pi = p.data()[i];
      const double mi = mv.data()[i];
      if (pi > 0.0 && mi >= eps) d.data()[i] = -gs * pi / mi;
    }
    t.accumulate(m, d);
  });
}

}  // namespace ad
}  // namespace dfcn
