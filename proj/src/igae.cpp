#include "dfcn/igae.hpp"

#include "dfcn/errors.hpp"
#include "dfcn/graph.hpp"
#include "dfcn/rng.hpp"

namespace dfcn {

namespace {

void check_chain(const std::vector<Matrix>& w, const char* which) {
  for (std::size_t i = 1; i < w.size(); ++i)
    if (w[i - 1].cols() != w[i].rows())
      throw ShapeError(std::string("igae ") + which + " layer " + std::to_string(i) + " input " +
                       std::to_string(w[i].rows()) + " != previous output " +
                       std::to_string(w[i - 1].cols()));
  for (const Matrix& m : w)
    if (!m.all_finite()) throw ValidationError(std::string("igae ") + which + " has non-finite weights");
}

}  // namespace

std::size_t IgaeParams::input_dim() const { return encoder.empty() ? 0 : encoder.front().rows(); }
std::size_t IgaeParams::latent_dim() const { return encoder.empty() ? 0 : encoder.back().cols(); }

void IgaeParams::validate() const {
  if (encoder.empty() || decoder.empty()) throw ShapeError("igae: empty layer stack");
  check_chain(encoder, "encoder");
  check_chain(decoder, "decoder");
  if (decoder.front().rows() != latent_dim())
    throw ShapeError("igae: decoder input " + std::to_string(decoder.front().rows()) +
                     " != latent " + std::to_string(latent_dim()));
  if (decoder.back().cols() != input_dim())
    throw ShapeError("igae: decoder output " + std::to_string(decoder.back().cols()) +
                     " != input " + std::to_string(input_dim()));
}

ParamList IgaeParams::named_params(const std::string& prefix) {
  ParamList out;
  for (std::size_t i = 0; i < encoder.size(); ++i)
    out.emplace_back(prefix + ".enc." + std::to_string(i) + ".weight", &encoder[i]);
  for (std::size_t i = 0; i < decoder.size(); ++i)
    out.emplace_back(prefix + ".dec." + std::to_string(i) + ".weight", &decoder[i]);
  return out;
}

ConstParamList IgaeParams::named_params(const std::string& prefix) const {
  ConstParamList out;
  for (auto& [name, m] : const_cast<IgaeParams*>(this)->named_params(prefix)) out.emplace_back(name, m);
  return out;
}

IgaeParams init_igae(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                     std::size_t latent_dim, std::uint64_t seed) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(latent_dim);
  for (std::size_t d : dims)
    if (d == 0) throw ParameterError("igae: dimensions must be positive");
  Rng rng(seed);
  IgaeParams p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) p.encoder.push_back(xavier_uniform(dims[i], dims[i + 1], rng));
  for (std::size_t i = dims.size() - 1; i > 0; --i) p.decoder.push_back(xavier_uniform(dims[i], dims[i - 1], rng));
  return p;
}

IgaeVars bind(Tape& tape, const IgaeParams& p, bool trainable) {
  p.validate();
  IgaeVars v;
  v.activation = p.activation;
  for (const Matrix& w : p.encoder) v.enc_w.push_back(trainable ? tape.parameter(w) : tape.constant(w));
  for (const Matrix& w : p.decoder) v.dec_w.push_back(trainable ? tape.parameter(w) : tape.constant(w));
  return v;
}

Var gcn_layer(const SharedCsr& a_norm, Var h, Var w, Activation act) {
  if (!a_norm || a_norm->cols != h.rows() || h.cols() != w.rows())
    throw ShapeError("gcn_layer: operator " + (a_norm ? std::to_string(a_norm->rows) : "null") +
                     ", input " + shape_str(h.value()) + ", weight " + shape_str(w.value()));
  Var out = w.cols() < h.cols() ? ad::spmm(a_norm, ad::matmul(h, w))
                                : ad::matmul(ad::spmm(a_norm, h), w);
  return ad::activate(out, act);
}

Var igae_encode(const SharedCsr& a_norm, Var x, const IgaeVars& p) {
  Var h = x;
  for (Var w : p.enc_w) h = gcn_layer(a_norm, h, w, p.activation);
  return h;
}

IgaeDecoded igae_decode(const SharedCsr& a_norm, Var z, const IgaeVars& p) {
  Var h = z;
  Var last_hidden = z;
  for (Var w : p.dec_w) {
    last_hidden = h;
    h = gcn_layer(a_norm, h, w, p.activation);
  }
  return {h, last_hidden};
}

Var reconstruct_adjacency(Var z) {
  return ad::activate(ad::matmul_nt(z, z), Activation::sigmoid);
}

Var reconstruct_adjacency_multilevel(Var z, Var hidden) {
  return ad::scale(ad::add(reconstruct_adjacency(z), reconstruct_adjacency(hidden)), 0.5);
}

Matrix reconstruct_adjacency(const Matrix& z) {
  Tape tape;
  return reconstruct_adjacency(tape.constant(z)).value();
}

IgaeLossMode parse_igae_loss_mode(std::string_view s) {
  if (s == "both") return IgaeLossMode::both;
  if (s == "w_only") return IgaeLossMode::w_only;
  if (s == "a_only") return IgaeLossMode::a_only;
  throw ParameterError("unknown igae_loss mode '" + std::string(s) + "'");
}

std::string_view to_string(IgaeLossMode m) {
  switch (m) {
    case IgaeLossMode::both: return "both";
    case IgaeLossMode::w_only: return "w_only";
    case IgaeLossMode::a_only: return "a_only";
  }
  return "?";
}

IgaeLossVars igae_loss(Var ax, Var a_dense, Var z_hat, Var a_hat, double gamma, IgaeLossMode mode) {
  if (gamma < 0.0) throw ParameterError("igae_loss: gamma must be non-negative");
  const double inv = 1.0 / (2.0 * static_cast<double>(ax.rows()));
  Var l_w = ad::scale(ad::frobenius_sq(ad::sub(ax, z_hat)), inv);
  Var l_a = ad::scale(ad::frobenius_sq(ad::sub(a_dense, a_hat)), inv);
  Var total = l_w;
  switch (mode) {
    case IgaeLossMode::both: total = ad::add(l_w, ad::scale(l_a, gamma)); break;
    case IgaeLossMode::w_only: total = l_w; break;
    case IgaeLossMode::a_only: total = ad::scale(l_a, gamma); break;
  }
  return {l_w, l_a, total};
}

IgaeLoss igae_loss(const CsrMatrix& a_norm, const Matrix& x, const Matrix& z_hat,
                   const Matrix& a_hat, double gamma) {
  if (gamma < 0.0) throw ParameterError("igae_loss: gamma must be non-negative");
  const double inv = 1.0 / (2.0 * static_cast<double>(x.rows()));
  IgaeLoss r;
  r.l_w = frobenius_sq(spmm(a_norm, x) - z_hat) * inv;
  r.l_a = frobenius_sq(a_norm.to_dense() - a_hat) * inv;
  r.total = r.l_w + gamma * r.l_a;
  return r;
}

}  // namespace dfcn
