#pragma once

// Structure and attribute information fusion.
//
//   Z_I = alpha Z_AE + (1 - alpha) Z_IGAE
//   Z_L = A_norm Z_I
//   S   = row_softmax(Z_L Z_L^T)
//   Z_G = S Z_L
//   Z~  = beta Z_G + Z_L
//
// Both decoders then reconstruct from Z~.

#include <optional>
#include <span>

#include "dfcn/ae.hpp"
#include "dfcn/graph.hpp"
#include "dfcn/igae.hpp"

namespace dfcn {

struct FusionParams {
  Matrix alpha = Matrix::scalar(0.5);
  Matrix beta = Matrix::scalar(0.0);

  ParamList named_params();
  ConstParamList named_params() const;
};

/// All learnable state of the network.
struct ModelParams {
  AeParams ae;
  IgaeParams igae;
  FusionParams fusion;
  /// K x d' cluster centers; empty until initialized by K-means.
  Matrix centers;

  void validate() const;
  ParamList named_params();
  ConstParamList named_params() const;
};

struct ModelVars {
  AeVars ae;
  IgaeVars igae;
  Var alpha;
  Var beta;
  std::optional<Var> centers;
};

ModelVars bind(Tape& tape, const ModelParams& p, bool trainable);

/// Parameter values in named_params() order.
std::vector<Matrix> flatten(const ModelParams& p);
/// Inverse of flatten for tape leaves: `layout` supplies the structure and
/// activations, `leaves` the values (as in a gradient-check objective).
ModelVars bind_leaves(std::span<const Var> leaves, const ModelParams& layout);

Var fuse_initial(Var z_ae, Var z_igae, Var alpha);
Var local_enhance(const SharedCsr& a_norm, Var z_i);
Var self_correlate(Var z_l);

struct GlobalRecombined {
  Var z_g;
  Var z_tilde;
};

GlobalRecombined global_recombine(Var s, Var z_l, Var beta);

struct ForwardOptions {
  /// When false the fusion steps are skipped: Z~ := Z_AE and each decoder
  /// reconstructs from its own sub-network latent.
  bool fusion = true;
  /// Build A_hat from both Z~ and the IGAE decoder's last hidden layer.
  bool multi_level_adjacency = false;
};

/// Intermediate tensors of one forward pass. Without fusion, z_i, z_l, z_g
/// and z_tilde alias z_ae and s is absent.
struct ForwardTrace {
  Var z_ae, z_igae, z_i, z_l;
  std::optional<Var> s;
  Var z_g, z_tilde, x_hat, z_hat, a_hat;
};

ForwardTrace saif_forward(Var x, const SharedCsr& a_norm, const ModelVars& p,
                          const ForwardOptions& opt = {});

/// Matrix-level helpers for callers that do not need gradients.
Matrix fuse_initial(const Matrix& z_ae, const Matrix& z_igae, double alpha);
Matrix self_correlate(const Matrix& z_l);

/// Evaluates the full forward pass and returns Z~.
Matrix consensus_embedding(const GraphData& g, const ModelParams& p, const ForwardOptions& opt = {});

}  // namespace dfcn
