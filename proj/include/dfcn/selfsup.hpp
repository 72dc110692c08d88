#pragma once

// Student-t soft assignments, the sharpened target distribution and the
// KL objectives that align the assignments with it.

#include "dfcn/matrix.hpp"
#include "dfcn/tape.hpp"

namespace dfcn {

/// Floor applied inside every KL logarithm.
inline constexpr double kKlEpsilon = 1e-12;

struct Centers {
  Matrix u;          ///< K x d' cluster centers
  double dof = 1.0;  ///< Student-t degrees of freedom
};

/// Row-normalized (1 + ||z_i - u_j||^2 / dof)^(-(dof + 1) / 2).
Matrix soft_assign(const Matrix& z, const Centers& c);
Var soft_assign(Var z, Var centers, double dof);

/// p_ij proportional to q_ij^2 / sum_i q_ij. A zero column of Q is logged and contributes 0.
Matrix target_distribution(const Matrix& q);

/// sum_ij p_ij ln(p_ij / ((q_ij + q'_ij + q''_ij) / 3))
double triplet_kl(const Matrix& p, const Matrix& q, const Matrix& q_igae, const Matrix& q_ae);
Var triplet_kl(const Matrix& p, Var q, Var q_igae, Var q_ae);

/// sum_ij p_ij ln(p_ij / q_ij)
double single_kl(const Matrix& p, const Matrix& q);
Var single_kl(const Matrix& p, Var q);

/// Q from the consensus embedding, Q' (IGAE) and Q'' (AE) from the sub-network
/// embeddings, all against the same centers, and the target P derived from Q.
struct AssignmentSet {
  Matrix q;
  Matrix q_igae;
  Matrix q_ae;
  Matrix p;
  double dof = 1.0;
};

AssignmentSet assign_all(const Matrix& z_tilde, const Matrix& z_igae, const Matrix& z_ae,
                         const Centers& c);

}  // namespace dfcn
