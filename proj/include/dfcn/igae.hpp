#pragma once

// Symmetric graph autoencoder. Every layer is act(A_norm * H * W); the
// decoder reconstructs the propagated attributes A_norm X, and an inner
// product decoder reconstructs the adjacency.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "dfcn/params.hpp"
#include "dfcn/tape.hpp"

namespace dfcn {

struct IgaeParams {
  std::vector<Matrix> encoder;  // d -> g1 -> ... -> latent
  std::vector<Matrix> decoder;  // latent -> ... -> g1 -> d
  Activation activation = Activation::tanh;

  std::size_t input_dim() const;
  std::size_t latent_dim() const;
  void validate() const;

  ParamList named_params(const std::string& prefix = "igae");
  ConstParamList named_params(const std::string& prefix = "igae") const;
};

/// Glorot-uniform weights.
IgaeParams init_igae(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                     std::size_t latent_dim, std::uint64_t seed);

struct IgaeVars {
  std::vector<Var> enc_w, dec_w;
  Activation activation = Activation::tanh;
};

IgaeVars bind(Tape& tape, const IgaeParams& p, bool trainable);

using SharedCsr = std::shared_ptr<const CsrMatrix>;

/// act(A_norm H W). The product is associated whichever way is cheaper.
Var gcn_layer(const SharedCsr& a_norm, Var h, Var w, Activation act);

Var igae_encode(const SharedCsr& a_norm, Var x, const IgaeVars& p);

struct IgaeDecoded {
  Var z_hat;        ///< N x d reconstruction of A_norm X
  Var last_hidden;  ///< input of the final decoder layer
};

IgaeDecoded igae_decode(const SharedCsr& a_norm, Var z, const IgaeVars& p);

/// logistic(Z Z^T)
Var reconstruct_adjacency(Var z);
/// Mean of logistic(Z Z^T) and logistic(H H^T).
Var reconstruct_adjacency_multilevel(Var z, Var hidden);
Matrix reconstruct_adjacency(const Matrix& z);

/// Which reconstruction terms enter L_IGAE.
enum class IgaeLossMode { both, w_only, a_only };

IgaeLossMode parse_igae_loss_mode(std::string_view s);
std::string_view to_string(IgaeLossMode m);

struct IgaeLossVars {
  Var l_w;    ///< (1/2N) ||A_norm X - Z_hat||^2
  Var l_a;    ///< (1/2N) ||A_norm - A_hat||^2
  Var total;  ///< l_w + gamma * l_a, minus whichever term the mode drops
};

/// `ax` is the constant A_norm X; `a_dense` the densified A_norm.
IgaeLossVars igae_loss(Var ax, Var a_dense, Var z_hat, Var a_hat, double gamma,
                       IgaeLossMode mode = IgaeLossMode::both);

struct IgaeLoss {
  double l_w = 0.0;
  double l_a = 0.0;
  double total = 0.0;
};

IgaeLoss igae_loss(const CsrMatrix& a_norm, const Matrix& x, const Matrix& z_hat,
                   const Matrix& a_hat, double gamma);

}  // namespace dfcn
