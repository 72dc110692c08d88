#include "dfcn/selfsup.hpp"

#include <cmath>
#include <string>

#include "dfcn/errors.hpp"
#include "dfcn/kernels.hpp"
#include "dfcn/log.hpp"

namespace dfcn {

Matrix soft_assign(const Matrix& z, const Centers& c) {
  if (z.cols() != c.u.cols())
    throw ShapeError("soft_assign: embedding " + shape_str(z) + " vs centers " + shape_str(c.u));
  if (!(c.dof > 0.0)) throw ParameterError("soft_assign: degrees of freedom must be positive");
  Matrix q = kernels::pairwise_sq_dist(z, c.u);
  const double power = -(c.dof + 1.0) / 2.0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    auto r = q.row(i);
    double s = 0.0;
    for (double& v : r) s += (v = std::pow(1.0 + v / c.dof, power));
    for (double& v : r) v /= s;
  }
  return q;
}

Var soft_assign(Var z, Var centers, double dof) {
  return ad::row_normalize(ad::student_t_kernel(z, centers, dof));
}

Matrix target_distribution(const Matrix& q) {
  const std::size_t n = q.rows(), k = q.cols();
  std::vector<double> freq(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) freq[j] += q(i, j);
  for (std::size_t j = 0; j < k; ++j)
    if (!(freq[j] > 0.0)) log::warn("target_distribution: cluster " + std::to_string(j) + " has zero mass");

  Matrix p(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = freq[j] > 0.0 ? q(i, j) * q(i, j) / freq[j] : 0.0;
      p(i, j) = w;
      s += w;
    }
    if (!(s > 0.0)) throw ContractError("target_distribution: row " + std::to_string(i) + " has no mass");
    for (std::size_t j = 0; j < k; ++j) p(i, j) /= s;
  }
  return p;
}

namespace {

double kl_against(const Matrix& p, const Matrix& m) {
  double loss = 0.0;
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.data()[i];
    if (pi <= 0.0) continue;
    double mi = m.data()[i];
    if (mi < kKlEpsilon) {
      mi = kKlEpsilon;
      ++clamped;
    }
    loss += pi * std::log(pi / mi);
  }
  if (clamped > 0) log::warn("kl: " + std::to_string(clamped) + " entries floored at eps");
  return loss;
}

void check_tables(const Matrix& p, std::initializer_list<const Matrix*> qs) {
  for (const Matrix* q : qs)
    if (!p.same_shape(*q)) throw ShapeError("kl: target " + shape_str(p) + " vs " + shape_str(*q));
}

}  // namespace

double triplet_kl(const Matrix& p, const Matrix& q, const Matrix& q_igae, const Matrix& q_ae) {
  check_tables(p, {&q, &q_igae, &q_ae});
  Matrix mix(p.rows(), p.cols());
  for (std::size_t i = 0; i < mix.size(); ++i)
    mix.data()[i] = (q.data()[i] + q_igae.data()[i] + q_ae.data()[i]) * (1.0 / 3.0);
  return kl_against(p, mix);
}

Var triplet_kl(const Matrix& p, Var q, Var q_igae, Var q_ae) {
  return ad::kl_div(p, ad::scale(ad::add(ad::add(q, q_igae), q_ae), 1.0 / 3.0), kKlEpsilon);
}

double single_kl(const Matrix& p, const Matrix& q) {
  check_tables(p, {&q});
  return kl_against(p, q);
}

Var single_kl(const Matrix& p, Var q) { return ad::kl_div(p, q, kKlEpsilon); }

AssignmentSet assign_all(const Matrix& z_tilde, const Matrix& z_igae, const Matrix& z_ae,
                         const Centers& c) {
  AssignmentSet a;
  a.q = soft_assign(z_tilde, c);
  a.q_igae = soft_assign(z_igae, c);
  a.q_ae = soft_assign(z_ae, c);
  a.p = target_distribution(a.q);
  a.dof = c.dof;
  return a;
}

}  // namespace dfcn
