#include <doctest.h>

#include <cmath>

#include "dfcn/ae.hpp"
#include "dfcn/errors.hpp"
#include "dfcn/gradcheck.hpp"
#include "dfcn/igae.hpp"
#include "dfcn/kernels.hpp"
#include "dfcn/saif.hpp"
#include "support.hpp"

using namespace dfcn;
using dfcn::test::random_matrix;

namespace {

/// Hand-rolled dense layer stack, independent of the tape.
Matrix dense_stack(Matrix h, const std::vector<DenseLayer>& layers, Activation act) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Matrix& w = layers[l].weight;
    Matrix out(h.rows(), w.cols());
    for (std::size_t i = 0; i < h.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) {
        double s = layers[l].bias(0, j);
        for (std::size_t k = 0; k < w.rows(); ++k) s += h(i, k) * w(k, j);
        out(i, j) = l + 1 < layers.size() ? apply_activation(act, s) : s;
      }
    h = std::move(out);
  }
  return h;
}

/// Hand-rolled GCN stack on a dense operator.
Matrix dense_gcn(const Matrix& a, Matrix h, const std::vector<Matrix>& ws, Activation act) {
  for (const Matrix& w : ws) {
    Matrix hw(h.rows(), w.cols());
    for (std::size_t i = 0; i < h.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j)
        for (std::size_t k = 0; k < w.rows(); ++k) hw(i, j) += h(i, k) * w(k, j);
    Matrix out(a.rows(), w.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * hw(k, j);
        out(i, j) = apply_activation(act, s);
      }
    h = std::move(out);
  }
  return h;
}

AeParams zeroed(AeParams p) {
  for (auto& [name, m] : p.named_params()) *m = Matrix(m->rows(), m->cols());
  return p;
}

SharedCsr path2() { return test::share(normalize_adjacency(adjacency_from_edges(2, {{0, 1}}))); }

}  // namespace

TEST_CASE("ae forward") {
  const Matrix x = random_matrix(4, 6, 1);

  SUBCASE("zero parameters") {
    const AeParams p = zeroed(init_ae(6, {5, 4}, 3, 7));
    CHECK(ae_encode(x, p) == Matrix(4, 3));
    CHECK(ae_decode(Matrix(4, 3, 1.0), p) == Matrix(4, 6));
  }
  SUBCASE("identity chain") {
    AeParams p = zeroed(init_ae(6, {6, 6}, 6, 7));
    for (auto* stack : {&p.encoder, &p.decoder})
      for (auto& l : *stack) l.weight = Matrix::identity(6);
    p.activation = Activation::identity;
    CHECK(ae_encode(x, p) == x);
    CHECK(ae_decode(x, p) == x);
  }
  SUBCASE("matches a hand-rolled forward pass") {
    const AeParams p = init_ae(6, {5, 4}, 3, 11);
    const Matrix z = ae_encode(x, p);
    CHECK(max_abs_diff(z, dense_stack(x, p.encoder, p.activation)) < 1e-14);
    CHECK(max_abs_diff(ae_decode(z, p), dense_stack(z, p.decoder, p.activation)) < 1e-14);
  }
  SUBCASE("shape mismatch") {
    const AeParams p = init_ae(6, {5}, 3, 11);
    CHECK_THROWS_AS(ae_encode(random_matrix(4, 5, 2), p), ShapeError);
  }
}

TEST_CASE("ae_loss") {
  const Matrix x = random_matrix(3, 2, 4);
  CHECK(ae_loss(x, x) == 0.0);
  CHECK(ae_loss(Matrix{{2, 0}}, Matrix{{0, 0}}) == 2.0);
  CHECK(ae_loss(x, random_matrix(3, 2, 5)) > 0.0);
}

TEST_CASE("ae_loss gradient reaches every weight") {
  const Matrix x = random_matrix(8, 5, 3);
  const AeParams layout = init_ae(5, {4, 6}, 2, 13);
  std::vector<Matrix> flat;
  for (const auto& [name, m] : layout.named_params()) flat.push_back(*m);
  const Objective f = [&](Tape& t, std::span<const Var> p) {
    AeVars v;
    v.activation = layout.activation;
    std::size_t i = 0;
    for (std::size_t l = 0; l < layout.encoder.size(); ++l) {
      v.enc_w.push_back(p[i++]);
      v.enc_b.push_back(p[i++]);
    }
    for (std::size_t l = 0; l < layout.decoder.size(); ++l) {
      v.dec_w.push_back(p[i++]);
      v.dec_b.push_back(p[i++]);
    }
    Var xv = t.constant(x);
    return ae_loss(xv, ae_decode(ae_encode(xv, v), v));
  };
  CHECK(finite_diff_check(f, flat).max_rel_error < 1e-5);
}

TEST_CASE("gcn_layer") {
  Tape t;
  const Matrix h = random_matrix(3, 3, 1);
  CHECK(gcn_layer(test::share(CsrMatrix::identity(3)), t.constant(h), t.constant(Matrix::identity(3)),
                  Activation::identity)
            .value() == h);
  CHECK(gcn_layer(path2(), t.constant(Matrix{{2}, {4}}), t.constant(Matrix{{1}}), Activation::identity).value() ==
        Matrix{{3}, {3}});
  CHECK_THROWS_AS(gcn_layer(path2(), t.constant(h), t.constant(Matrix::identity(3)), Activation::identity),
                  ShapeError);
}

TEST_CASE("igae forward") {
  const auto a = test::share(normalize_adjacency(adjacency_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 2}})));
  const Matrix x = random_matrix(4, 5, 2);

  SUBCASE("identity degenerate") {
    IgaeParams p = init_igae(5, {5}, 5, 1);
    for (auto& w : p.encoder) w = Matrix::identity(5);
    for (auto& w : p.decoder) w = Matrix::identity(5);
    p.activation = Activation::identity;
    Tape t;
    const IgaeVars v = bind(t, p, false);
    const auto id = test::share(CsrMatrix::identity(4));
    CHECK(igae_encode(id, t.constant(x), v).value() == x);
    CHECK(igae_decode(id, t.constant(x), v).z_hat.value() == x);
  }
  SUBCASE("zero weights give act(0)") {
    IgaeParams p = init_igae(5, {3}, 2, 1);
    for (auto& w : p.encoder) w = Matrix(w.rows(), w.cols());
    Tape t;
    CHECK(igae_encode(a, t.constant(x), bind(t, p, false)).value() == Matrix(4, 2));
  }
  SUBCASE("matches a hand-rolled two-layer pass") {
    const IgaeParams p = init_igae(5, {3}, 2, 9);
    Tape t;
    const IgaeVars v = bind(t, p, false);
    const Matrix dense = a->to_dense();
    Var z = igae_encode(a, t.constant(x), v);
    CHECK(max_abs_diff(z.value(), dense_gcn(dense, x, p.encoder, p.activation)) < 1e-14);
    const IgaeDecoded dec = igae_decode(a, z, v);
    CHECK(max_abs_diff(dec.z_hat.value(), dense_gcn(dense, z.value(), p.decoder, p.activation)) < 1e-14);
    CHECK(dec.last_hidden.cols() == 3);
  }
}

TEST_CASE("reconstruct_adjacency") {
  const Matrix half = reconstruct_adjacency(Matrix(3, 2));
  for (double v : half.data()) CHECK(v == 0.5);
  const Matrix a = reconstruct_adjacency(Matrix{{10, 0}, {0, 10}});
  CHECK(a(0, 1) == 0.5);
  CHECK(a(1, 0) == 0.5);
  CHECK(a(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("igae_loss worked values") {
  const auto a = normalize_adjacency(adjacency_from_edges(3, {{0, 1}, {1, 2}}));
  const Matrix x = random_matrix(3, 2, 6);
  const IgaeLoss zero = igae_loss(a, x, spmm(a, x), a.to_dense(), 0.1);
  CHECK(zero.l_w == 0.0);
  CHECK(zero.l_a == 0.0);
  CHECK(zero.total == 0.0);

  const IgaeLoss one = igae_loss(CsrMatrix::identity(1), Matrix{{2}}, Matrix{{0}}, Matrix{{0}}, 0.1);
  CHECK(one.l_w == 2.0);
  CHECK(one.l_a == 0.5);
  CHECK(one.total == doctest::Approx(2.05).epsilon(1e-15));

  const Matrix z_hat = random_matrix(3, 2, 7);
  const Matrix a_hat = random_matrix(3, 3, 8, 0, 1);
  CHECK(igae_loss(a, x, z_hat, a_hat, 0.0).total == igae_loss(a, x, z_hat, a_hat, 0.0).l_w);
  double prev = -1.0;
  for (double g : {0.0, 0.05, 0.1, 1.0, 10.0}) {
    const double total = igae_loss(a, x, z_hat, a_hat, g).total;
    CHECK(total >= prev);
    prev = total;
  }
}

TEST_CASE("igae loss modes") {
  Tape t;
  Var ax = t.constant(Matrix{{2}});
  Var ad = t.constant(Matrix{{1}});
  Var zh = t.constant(Matrix{{0}});
  Var ah = t.constant(Matrix{{0}});
  CHECK(igae_loss(ax, ad, zh, ah, 0.1, IgaeLossMode::w_only).total.value().item() == 2.0);
  CHECK(igae_loss(ax, ad, zh, ah, 0.1, IgaeLossMode::a_only).total.value().item() == 0.1 * 0.5);
  CHECK(parse_igae_loss_mode("a_only") == IgaeLossMode::a_only);
  CHECK_THROWS_AS(parse_igae_loss_mode("bogus"), ParameterError);
}

TEST_CASE("igae gradient on a 10-node graph") {
  const GraphData g = test::small_sbm(2, 5, 4, 3);
  const IgaeParams layout = init_igae(4, {5}, 3, 21);
  std::vector<Matrix> flat;
  for (const auto& [name, m] : layout.named_params()) flat.push_back(*m);
  const Matrix ax = spmm(*g.adj_norm, g.x);
  const Matrix dense = g.adj_norm->to_dense();
  const Objective f = [&](Tape& t, std::span<const Var> p) {
    IgaeVars v;
    v.activation = layout.activation;
    v.enc_w.assign(p.begin(), p.begin() + layout.encoder.size());
    v.dec_w.assign(p.begin() + layout.encoder.size(), p.end());
    Var z = igae_encode(g.adj_norm, t.constant(g.x), v);
    const IgaeDecoded dec = igae_decode(g.adj_norm, z, v);
    return igae_loss(t.constant(ax), t.constant(dense), dec.z_hat, reconstruct_adjacency(z), 0.1).total;
  };
  CHECK(finite_diff_check(f, flat).max_rel_error < 1e-4);
}

TEST_CASE("saif steps") {
  Tape t;
  const Matrix m = random_matrix(3, 2, 1);
  auto scalar = [&t](double v) { return t.constant(Matrix::scalar(v)); };

  SUBCASE("fuse_initial") {
    CHECK(fuse_initial(t.constant(m), t.constant(m), scalar(0.5)).value() == m);
    const Matrix other = random_matrix(3, 2, 2);
    CHECK(fuse_initial(t.constant(m), t.constant(other), scalar(1.0)).value() == m);
    CHECK(fuse_initial(t.constant(Matrix{{4}}), t.constant(Matrix{{0}}), scalar(0.25)).value() == Matrix{{1}});
    // Affine in alpha: alpha and 1 - alpha swap the inputs (exact for dyadic alpha).
    for (double a : {0.0, 0.125, 0.25, 0.375, 0.5, 0.75}) {
      CHECK(fuse_initial(m, other, a) == fuse_initial(other, m, 1.0 - a));
    }
  }
  SUBCASE("local_enhance") {
    CHECK(local_enhance(test::share(CsrMatrix::identity(3)), t.constant(m)).value() == m);
    CHECK(local_enhance(path2(), t.constant(Matrix{{2}, {4}})).value() == Matrix{{3}, {3}});
  }
  SUBCASE("self_correlate") {
    const Matrix uniform = self_correlate(Matrix(4, 3));
    for (double v : uniform.data()) CHECK(v == 0.25);
    const Matrix s = self_correlate(Matrix{{1, 2}, {1, 2}, {0, 1}});
    for (std::size_t j = 0; j < 3; ++j) CHECK(s(0, j) == s(1, j));
    const Matrix s2 = self_correlate(Matrix{{1}, {0}});
    const double e = std::exp(1.0);
    CHECK(s2(0, 0) == doctest::Approx(e / (e + 1)).epsilon(1e-15));
    CHECK(s2(0, 1) == doctest::Approx(1 / (e + 1)).epsilon(1e-15));
    CHECK(s2(1, 0) == 0.5);
    CHECK(s2(1, 1) == 0.5);
  }
  SUBCASE("global_recombine") {
    const auto b0 = global_recombine(t.constant(Matrix::identity(3)), t.constant(m), scalar(0.0));
    CHECK(b0.z_tilde.value() == m);
    CHECK(b0.z_g.value() == m);
    const auto b2 = global_recombine(t.constant(Matrix::identity(3)), t.constant(m), scalar(2.0));
    CHECK(b2.z_tilde.value() == 3.0 * m);
    const auto u = global_recombine(t.constant(Matrix(2, 2, 0.5)), t.constant(Matrix{{2}, {4}}), scalar(1.0));
    CHECK(u.z_g.value() == Matrix{{3}, {3}});
    CHECK(u.z_tilde.value() == Matrix{{5}, {7}});
  }
}

TEST_CASE("S is row-stochastic") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix s = self_correlate(random_matrix(7, 3, seed, -3, 3));
    for (std::size_t i = 0; i < 7; ++i) {
      double sum = 0.0;
      for (double v : s.row(i)) sum += v;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

namespace {

ModelParams small_model(std::size_t d, std::uint64_t seed, bool centers) {
  TrainConfig c = test::tiny_config();
  c.seed = seed;
  ModelParams p = init_model(d, c);
  if (centers) p.centers = random_matrix(2, c.latent_dim, seed + 1);
  return p;
}

}  // namespace

TEST_CASE("saif_forward") {
  const GraphData g = test::small_sbm(2, 6, 4, 1);
  const ModelParams p = small_model(4, 3, false);
  Tape t;
  const ModelVars v = bind(t, p, false);
  const ForwardTrace tr = saif_forward(t.constant(g.x), g.adj_norm, v);

  // Initial alpha = 0.5, beta = 0: Z~ = A (Z_AE + Z_IGAE) / 2.
  Matrix mean = tr.z_ae.value() + tr.z_igae.value();
  mean *= 0.5;
  CHECK(max_abs_diff(tr.z_tilde.value(), spmm(*g.adj_norm, mean)) < 1e-15);

  CHECK(tr.z_tilde.rows() == 12);
  CHECK(tr.z_tilde.cols() == 3);
  CHECK(tr.s->rows() == 12);
  CHECK(tr.s->cols() == 12);
  CHECK(tr.x_hat.cols() == 4);
  CHECK(tr.z_hat.cols() == 4);
  CHECK(tr.a_hat.rows() == 12);
  CHECK(tr.a_hat.cols() == 12);

  const ForwardTrace nf = saif_forward(t.constant(g.x), g.adj_norm, v, {.fusion = false});
  CHECK(nf.z_tilde.value() == nf.z_ae.value());
  CHECK(!nf.s.has_value());
}

TEST_CASE("full forward trace gradient") {
  const GraphData g = test::small_sbm(2, 5, 4, 2);
  const ModelParams layout = small_model(4, 5, false);
  const Matrix ax = spmm(*g.adj_norm, g.x);
  const Matrix dense = g.adj_norm->to_dense();
  for (const bool multi : {false, true}) {
    CAPTURE(multi);
    const Objective f = [&](Tape& t, std::span<const Var> leaves) {
      const ModelVars v = bind_leaves(leaves, layout);
      Var x = t.constant(g.x);
      const ForwardTrace tr = saif_forward(x, g.adj_norm, v, {.fusion = true, .multi_level_adjacency = multi});
      return ad::add(ae_loss(x, tr.x_hat),
                     igae_loss(t.constant(ax), t.constant(dense), tr.z_hat, tr.a_hat, 0.1).total);
    };
    CHECK(finite_diff_check(f, flatten(layout)).max_rel_error < 1e-4);
  }
}
