#include "dfcn/saif.hpp"

#include "dfcn/errors.hpp"
#include "dfcn/kernels.hpp"

namespace dfcn {

ParamList FusionParams::named_params() {
  return {{"fusion.alpha", &alpha}, {"fusion.beta", &beta}};
}

ConstParamList FusionParams::named_params() const {
  return {{"fusion.alpha", &alpha}, {"fusion.beta", &beta}};
}

void ModelParams::validate() const {
  ae.validate();
  igae.validate();
  if (ae.input_dim() != igae.input_dim())
    throw ShapeError("model: AE input " + std::to_string(ae.input_dim()) + " != IGAE input " +
                     std::to_string(igae.input_dim()));
  if (ae.latent_dim() != igae.latent_dim())
    throw ShapeError("model: AE latent " + std::to_string(ae.latent_dim()) + " != IGAE latent " +
                     std::to_string(igae.latent_dim()));
  if (fusion.alpha.rows() != 1 || fusion.alpha.cols() != 1 || fusion.beta.rows() != 1 ||
      fusion.beta.cols() != 1)
    throw ShapeError("model: fusion scalars must be 1x1");
  if (!centers.empty() && centers.cols() != ae.latent_dim())
    throw ShapeError("model: centers " + shape_str(centers) + " vs latent " +
                     std::to_string(ae.latent_dim()));
}

ParamList ModelParams::named_params() {
  ParamList out = ae.named_params();
  for (auto& e : igae.named_params()) out.push_back(e);
  for (auto& e : fusion.named_params()) out.push_back(e);
  if (!centers.empty()) out.emplace_back("centers", &centers);
  return out;
}

ConstParamList ModelParams::named_params() const {
  ConstParamList out;
  for (auto& [name, m] : const_cast<ModelParams*>(this)->named_params()) out.emplace_back(name, m);
  return out;
}

ModelVars bind(Tape& tape, const ModelParams& p, bool trainable) {
  p.validate();
  ModelVars v;
  v.ae = bind(tape, p.ae, trainable);
  v.igae = bind(tape, p.igae, trainable);
  v.alpha = trainable ? tape.parameter(p.fusion.alpha) : tape.constant(p.fusion.alpha);
  v.beta = trainable ? tape.parameter(p.fusion.beta) : tape.constant(p.fusion.beta);
  if (!p.centers.empty())
    v.centers = trainable ? tape.parameter(p.centers) : tape.constant(p.centers);
  return v;
}

std::vector<Matrix> flatten(const ModelParams& p) {
  std::vector<Matrix> out;
  for (const auto& [name, m] : p.named_params()) out.push_back(*m);
  return out;
}

ModelVars bind_leaves(std::span<const Var> leaves, const ModelParams& layout) {
  const std::size_t expected = layout.named_params().size();
  if (leaves.size() != expected)
    throw ShapeError("bind_leaves: " + std::to_string(leaves.size()) + " leaves for " + std::to_string(expected) +
                     " parameters");
  std::size_t i = 0;
  ModelVars v;
  v.ae.activation = layout.ae.activation;
  for (std::size_t l = 0; l < layout.ae.encoder.size(); ++l) {
    v.ae.enc_w.push_back(leaves[i++]);
    v.ae.enc_b.push_back(leaves[i++]);
  }
  for (std::size_t l = 0; l < layout.ae.decoder.size(); ++l) {
    v.ae.dec_w.push_back(leaves[i++]);
    v.ae.dec_b.push_back(leaves[i++]);
  }
  v.igae.activation = layout.igae.activation;
  for (std::size_t l = 0; l < layout.igae.encoder.size(); ++l) v.igae.enc_w.push_back(leaves[i++]);
  for (std::size_t l = 0; l < layout.igae.decoder.size(); ++l) v.igae.dec_w.push_back(leaves[i++]);
  v.alpha = leaves[i++];
  v.beta = leaves[i++];
  if (!layout.centers.empty()) v.centers = leaves[i++];
  return v;
}

Var fuse_initial(Var z_ae, Var z_igae, Var alpha) { return ad::blend(alpha, z_ae, z_igae); }

Var local_enhance(const SharedCsr& a_norm, Var z_i) { return ad::spmm(a_norm, z_i); }

Var self_correlate(Var z_l) { return ad::row_softmax(ad::matmul_nt(z_l, z_l)); }

GlobalRecombined global_recombine(Var s, Var z_l, Var beta) {
  if (s.cols() != z_l.rows())
    throw ShapeError("global_recombine: S " + shape_str(s.value()) + " vs Z_L " + shape_str(z_l.value()));
  Var z_g = ad::matmul(s, z_l);
  return {z_g, ad::add(ad::mul_scalar(beta, z_g), z_l)};
}

ForwardTrace saif_forward(Var x, const SharedCsr& a_norm, const ModelVars& p,
                          const ForwardOptions& opt) {
  ForwardTrace t;
  t.z_ae = ae_encode(x, p.ae);
  t.z_igae = igae_encode(a_norm, x, p.igae);
  if (!t.z_ae.value().same_shape(t.z_igae.value()))
    throw ShapeError("saif: Z_AE " + shape_str(t.z_ae.value()) + " vs Z_IGAE " +
                     shape_str(t.z_igae.value()));
  if (opt.fusion) {
    t.z_i = fuse_initial(t.z_ae, t.z_igae, p.alpha);
    t.z_l = local_enhance(a_norm, t.z_i);
    t.s = self_correlate(t.z_l);
    const GlobalRecombined g = global_recombine(*t.s, t.z_l, p.beta);
    t.z_g = g.z_g;
    t.z_tilde = g.z_tilde;
    t.x_hat = ae_decode(t.z_tilde, p.ae);
    const IgaeDecoded dec = igae_decode(a_norm, t.z_tilde, p.igae);
    t.z_hat = dec.z_hat;
    t.a_hat = opt.multi_level_adjacency ? reconstruct_adjacency_multilevel(t.z_tilde, dec.last_hidden)
                                        : reconstruct_adjacency(t.z_tilde);
  } else {
    // Naive union: each decoder reads its own latent; Z~ is Z_AE for clustering.
    t.z_i = t.z_l = t.z_g = t.z_tilde = t.z_ae;
    t.x_hat = ae_decode(t.z_ae, p.ae);
    const IgaeDecoded dec = igae_decode(a_norm, t.z_igae, p.igae);
    t.z_hat = dec.z_hat;
    t.a_hat = opt.multi_level_adjacency ? reconstruct_adjacency_multilevel(t.z_igae, dec.last_hidden)
                                        : reconstruct_adjacency(t.z_igae);
  }
  return t;
}

Matrix fuse_initial(const Matrix& z_ae, const Matrix& z_igae, double alpha) {
  Tape tape;
  return fuse_initial(tape.constant(z_ae), tape.constant(z_igae), tape.constant(Matrix::scalar(alpha)))
      .value();
}

Matrix self_correlate(const Matrix& z_l) { return row_softmax(kernels::matmul_nt(z_l, z_l)); }

Matrix consensus_embedding(const GraphData& g, const ModelParams& p, const ForwardOptions& opt) {
  Tape tape;
  const ModelVars v = bind(tape, p, false);
  return saif_forward(tape.constant(g.x), g.adj_norm, v, opt).z_tilde.value();
}

}  // namespace dfcn
