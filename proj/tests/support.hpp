#pragma once

#include <cmath>
#include <cstring>
#include <memory>

#include "dfcn/graph.hpp"
#include "dfcn/matrix.hpp"
#include "dfcn/rng.hpp"
#include "dfcn/trainer.hpp"

namespace dfcn::test {

inline Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  return uniform_matrix(r, c, lo, hi, rng);
}

inline bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.same_shape(b) && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

/// Row-stochastic matrix with strictly positive entries.
inline Matrix random_stochastic(std::size_t r, std::size_t c, std::uint64_t seed) {
  Matrix m = random_matrix(r, c, seed, 0.05, 1.0);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += v;
    for (double& v : m.row(i)) v /= s;
  }
  return m;
}

inline std::shared_ptr<const CsrMatrix> share(CsrMatrix m) {
  return std::make_shared<const CsrMatrix>(std::move(m));
}

/// Small SBM used wherever a realistic but cheap graph is needed.
inline GraphData small_sbm(std::size_t k, std::size_t per_block, std::size_t dim, std::uint64_t seed) {
  SbmSpec s;
  s.k = k;
  s.sizes.assign(k, per_block);
  s.p_in = 0.6;
  s.p_out = 0.05;
  s.attr_dim = dim;
  s.seed = seed;
  return sbm_synthesize(s);
}

/// Narrow network and short schedule so trainer tests run in well under a second.
inline TrainConfig tiny_config() {
  TrainConfig c;
  c.ae_hidden = {8, 8};
  c.igae_hidden = {8};
  c.latent_dim = 3;
  c.iters_pre = 5;
  c.iters_joint = 5;
  c.iters_finetune = 5;
  c.iters_finetune_max = 5;
  c.kmeans_restarts = 3;
  return c;
}

}  // namespace dfcn::test
