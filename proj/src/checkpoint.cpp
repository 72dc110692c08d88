#include "dfcn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace dfcn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

void put_f64(std::string& out, double d) {
  const std::uint64_t v = to_le(std::bit_cast<std::uint64_t>(d));
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

double get_f64(const char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  return std::bit_cast<double>(to_le(v));
}

std::vector<std::size_t> hidden_of(const std::vector<std::size_t>& out_dims) {
  // Encoder output dims are h1..hn, latent; hidden excludes the last.
  return {out_dims.begin(), out_dims.end() - 1};
}

json dims_of(const ModelParams& p) {
  std::vector<std::size_t> ae_out, igae_out;
  for (const auto& l : p.ae.encoder) ae_out.push_back(l.weight.cols());
  for (const auto& w : p.igae.encoder) igae_out.push_back(w.cols());
  return {{"input_dim", p.ae.input_dim()},
          {"latent_dim", p.ae.latent_dim()},
          {"ae_hidden", hidden_of(ae_out)},
          {"igae_hidden", hidden_of(igae_out)},
          {"clusters", p.centers.rows()}};
}

/// Zero-filled parameters with the shapes implied by `dims`.
ModelParams skeleton(const json& dims, const json& acts) {
  const auto d = dims.at("input_dim").get<std::size_t>();
  const auto latent = dims.at("latent_dim").get<std::size_t>();
  const auto ae_hidden = dims.at("ae_hidden").get<std::vector<std::size_t>>();
  const auto igae_hidden = dims.at("igae_hidden").get<std::vector<std::size_t>>();
  const auto k = dims.at("clusters").get<std::size_t>();
  if (d == 0 || latent == 0) throw ShapeError("checkpoint: zero input or latent dimension");

  auto chain = [&](const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> c{d};
    c.insert(c.end(), hidden.begin(), hidden.end());
    c.push_back(latent);
    return c;
  };
  ModelParams p;
  const auto ca = chain(ae_hidden);
  for (std::size_t i = 0; i + 1 < ca.size(); ++i)
    p.ae.encoder.push_back({Matrix(ca[i], ca[i + 1]), Matrix(1, ca[i + 1])});
  for (std::size_t i = ca.size() - 1; i > 0; --i)
    p.ae.decoder.push_back({Matrix(ca[i], ca[i - 1]), Matrix(1, ca[i - 1])});
  const auto cg = chain(igae_hidden);
  for (std::size_t i = 0; i + 1 < cg.size(); ++i) p.igae.encoder.emplace_back(cg[i], cg[i + 1]);
  for (std::size_t i = cg.size() - 1; i > 0; --i) p.igae.decoder.emplace_back(cg[i], cg[i - 1]);
  if (k > 0) p.centers = Matrix(k, latent);
  p.ae.activation = parse_activation(acts.at("ae").get<std::string>());
  p.igae.activation = parse_activation(acts.at("gcn").get<std::string>());
  return p;
}

fs::path blob_path(const fs::path& manifest) {
  fs::path b = manifest;
  b.replace_extension(".bin");
  return b;
}

}  // namespace

void save_checkpoint(const fs::path& manifest, const ModelParams& params, std::string_view phase,
                     const TrainConfig& config) {
  params.validate();
  std::string blob;
  json blocks = json::array();
  for (const auto& [name, m] : params.named_params()) {
    const std::size_t offset = blob.size();
    for (std::size_t i = 0; i < m->size(); ++i) put_f64(blob, m->data()[i]);
    blocks.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}, {"offset", offset},
                      {"bytes", blob.size() - offset}});
  }
  const fs::path bin = blob_path(manifest);
  const json j{{"format", kCheckpointFormat},
               {"version", kCheckpointVersion},
               {"phase", std::string(phase)},
               {"dims", dims_of(params)},
               {"activations",
                {{"ae", std::string(to_string(params.ae.activation))},
                 {"gcn", std::string(to_string(params.igae.activation))}}},
               {"config", config_to_json(config)},
               {"data_file", bin.filename().string()},
               {"blocks", blocks}};

  std::ofstream bout(bin, std::ios::binary | std::ios::trunc);
  bout.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  std::ofstream mout(manifest, std::ios::trunc);
  mout << j.dump(2) << '\n';
  if (!bout || !mout) throw IoError("cannot write checkpoint " + manifest.string());
}

Checkpoint load_checkpoint(const fs::path& manifest) {
  std::ifstream min(manifest);
  if (!min) throw IoError("cannot open checkpoint " + manifest.string());
  json j;
  try {
    j = json::parse(min);
  } catch (const json::exception& e) {
    throw IoError(manifest.string() + ": " + e.what());
  }

  Checkpoint c;
  std::string blob;
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw IoError(manifest.string() + ": not a checkpoint manifest");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw IoError(manifest.string() + ": unsupported checkpoint version");
    c.phase = j.at("phase").get<std::string>();
    c.config = j.at("config");
    c.params = skeleton(j.at("dims"), j.at("activations"));

    const fs::path bin = manifest.parent_path() / j.at("data_file").get<std::string>();
    std::ifstream bin_in(bin, std::ios::binary);
    if (!bin_in) throw IoError("cannot open checkpoint data " + bin.string());
    blob.assign(std::istreambuf_iterator<char>(bin_in), {});

    auto expected = c.params.named_params();
    const auto& blocks = j.at("blocks");
    if (blocks.size() != expected.size())
      throw ShapeError("checkpoint: " + std::to_string(blocks.size()) + " blocks, dims imply " +
                       std::to_string(expected.size()));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& blk = blocks[b];
      auto& [name, m] = expected[b];
      const auto got = blk.at("name").get<std::string>();
      if (got != name) throw ShapeError("checkpoint: block " + std::to_string(b) + " is '" + got + "', expected '" + name + "'");
      const auto rows = blk.at("rows").get<std::size_t>();
      const auto cols = blk.at("cols").get<std::size_t>();
      if (rows != m->rows() || cols != m->cols())
        throw ShapeError("checkpoint: block '" + name + "' is " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", dims imply " + shape_str(*m));
      const auto offset = blk.at("offset").get<std::size_t>();
      const auto bytes = blk.at("bytes").get<std::size_t>();
      if (bytes != 8 * m->size() || offset > blob.size() || blob.size() - offset < bytes)
        throw IoError("checkpoint: block '" + name + "' exceeds data file");
      for (std::size_t i = 0; i < m->size(); ++i) m->data()[i] = get_f64(blob.data() + offset + 8 * i);
    }
  } catch (const json::exception& e) {
    throw IoError(manifest.string() + ": " + e.what());
  }
  c.params.validate();
  return c;
}

}  // namespace dfcn
