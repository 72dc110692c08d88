#include "dfcn/ae.hpp"

#include <cmath>

#include "dfcn/errors.hpp"
#include "dfcn/rng.hpp"

namespace dfcn {

namespace {

void check_chain(const std::vector<DenseLayer>& layers, const char* which) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = layers[i];
    if (l.bias.rows() != 1 || l.bias.cols() != l.weight.cols())
      throw ShapeError(std::string("ae ") + which + " layer " + std::to_string(i) +
                       ": bias " + shape_str(l.bias) + " vs weight " + shape_str(l.weight));
    if (i > 0 && layers[i - 1].weight.cols() != l.weight.rows())
      throw ShapeError(std::string("ae ") + which + " layer " + std::to_string(i) +
                       " input " + std::to_string(l.weight.rows()) + " != previous output " +
                       std::to_string(layers[i - 1].weight.cols()));
    if (!l.weight.all_finite() || !l.bias.all_finite())
      throw ValidationError(std::string("ae ") + which + " layer " + std::to_string(i) +
                            " has non-finite weights");
  }
}

Var run_stack(Var h, const std::vector<Var>& w, const std::vector<Var>& b, Activation act) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    h = ad::add_row(ad::matmul(h, w[i]), b[i]);
    if (i + 1 < w.size()) h = ad::activate(h, act);
  }
  return h;
}

}  // namespace

std::size_t AeParams::input_dim() const { return encoder.empty() ? 0 : encoder.front().weight.rows(); }
std::size_t AeParams::latent_dim() const { return encoder.empty() ? 0 : encoder.back().weight.cols(); }

void AeParams::validate() const {
  if (encoder.empty() || decoder.empty()) throw ShapeError("ae: empty layer stack");
  check_chain(encoder, "encoder");
  check_chain(decoder, "decoder");
  if (decoder.front().weight.rows() != latent_dim())
    throw ShapeError("ae: decoder input " + std::to_string(decoder.front().weight.rows()) +
                     " != latent " + std::to_string(latent_dim()));
  if (decoder.back().weight.cols() != input_dim())
    throw ShapeError("ae: decoder output " + std::to_string(decoder.back().weight.cols()) +
                     " != input " + std::to_string(input_dim()));
}

ParamList AeParams::named_params(const std::string& prefix) {
  ParamList out;
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    out.emplace_back(prefix + ".enc." + std::to_string(i) + ".weight", &encoder[i].weight);
    out.emplace_back(prefix + ".enc." + std::to_string(i) + ".bias", &encoder[i].bias);
  }
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    out.emplace_back(prefix + ".dec." + std::to_string(i) + ".weight", &decoder[i].weight);
    out.emplace_back(prefix + ".dec." + std::to_string(i) + ".bias", &decoder[i].bias);
  }
  return out;
}

ConstParamList AeParams::named_params(const std::string& prefix) const {
  ConstParamList out;
  for (auto& [name, m] : const_cast<AeParams*>(this)->named_params(prefix)) out.emplace_back(name, m);
  return out;
}

AeParams init_ae(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                 std::size_t latent_dim, std::uint64_t seed) {
  if (input_dim == 0 || latent_dim == 0) throw ParameterError("ae: dimensions must be positive");
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(latent_dim);
  for (std::size_t d : dims)
    if (d == 0) throw ParameterError("ae: dimensions must be positive");

  Rng rng(seed);
  auto layer = [&](std::size_t in, std::size_t out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer l;
    l.weight = uniform_matrix(in, out, -bound, bound, rng);
    l.bias = uniform_matrix(1, out, -bound, bound, rng);
    return l;
  };
  AeParams p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) p.encoder.push_back(layer(dims[i], dims[i + 1]));
  for (std::size_t i = dims.size() - 1; i > 0; --i) p.decoder.push_back(layer(dims[i], dims[i - 1]));
  return p;
}

AeVars bind(Tape& tape, const AeParams& p, bool trainable) {
  p.validate();
  auto leaf = [&](const Matrix& m) { return trainable ? tape.parameter(m) : tape.constant(m); };
  AeVars v;
  v.activation = p.activation;
  for (const auto& l : p.encoder) {
    v.enc_w.push_back(leaf(l.weight));
    v.enc_b.push_back(leaf(l.bias));
  }
  for (const auto& l : p.decoder) {
    v.dec_w.push_back(leaf(l.weight));
    v.dec_b.push_back(leaf(l.bias));
  }
  return v;
}

Var ae_encode(Var x, const AeVars& p) {
  if (x.cols() != p.enc_w.front().rows())
    throw ShapeError("ae_encode: input " + shape_str(x.value()) + " vs first layer " +
                     shape_str(p.enc_w.front().value()));
  return run_stack(x, p.enc_w, p.enc_b, p.activation);
}

Var ae_decode(Var z, const AeVars& p) {
  if (z.cols() != p.dec_w.front().rows())
    throw ShapeError("ae_decode: input " + shape_str(z.value()) + " vs first layer " +
                     shape_str(p.dec_w.front().value()));
  return run_stack(z, p.dec_w, p.dec_b, p.activation);
}

Var ae_loss(Var x, Var x_hat) {
  const double n = static_cast<double>(x.rows());
  return ad::scale(ad::frobenius_sq(ad::sub(x, x_hat)), 1.0 / (2.0 * n));
}

double ae_loss(const Matrix& x, const Matrix& x_hat) {
  return frobenius_sq(x - x_hat) / (2.0 * static_cast<double>(x.rows()));
}

Matrix ae_encode(const Matrix& x, const AeParams& p) {
  Tape tape;
  return ae_encode(tape.constant(x), bind(tape, p, false)).value();
}

Matrix ae_decode(const Matrix& z, const AeParams& p) {
  Tape tape;
  return ae_decode(tape.constant(z), bind(tape, p, false)).value();
}

}  // namespace dfcn
