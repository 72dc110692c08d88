#pragma once

// Fully connected autoencoder. The encoder maps attributes to Z_AE; in the
// fused model the decoder reconstructs attributes from the consensus
// embedding rather than from Z_AE.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dfcn/params.hpp"
#include "dfcn/tape.hpp"

namespace dfcn {

struct DenseLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

struct AeParams {
  std::vector<DenseLayer> encoder;  // d -> h1 -> ... -> latent
  std::vector<DenseLayer> decoder;  // latent -> ... -> h1 -> d
  /// Hidden-layer activation; the last layer of each stack is linear.
  Activation activation = Activation::leaky_relu;

  std::size_t input_dim() const;
  std::size_t latent_dim() const;
  /// Throws ShapeError if the layer chain does not compose.
  void validate() const;

  ParamList named_params(const std::string& prefix = "ae");
  ConstParamList named_params(const std::string& prefix = "ae") const;
};

/// Linear layers drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), weights and biases alike.
AeParams init_ae(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                 std::size_t latent_dim, std::uint64_t seed);

/// AeParams bound to tape leaves.
struct AeVars {
  std::vector<Var> enc_w, enc_b, dec_w, dec_b;
  Activation activation = Activation::leaky_relu;
};

AeVars bind(Tape& tape, const AeParams& p, bool trainable);

Var ae_encode(Var x, const AeVars& p);
Var ae_decode(Var z, const AeVars& p);

/// (1 / 2N) ||X - X_hat||_F^2
Var ae_loss(Var x, Var x_hat);
double ae_loss(const Matrix& x, const Matrix& x_hat);

Matrix ae_encode(const Matrix& x, const AeParams& p);
Matrix ae_decode(const Matrix& z, const AeParams& p);

}  // namespace dfcn
