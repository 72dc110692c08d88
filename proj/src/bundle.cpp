#include "dfcn/bundle.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dfcn/errors.hpp"

#include <json.hpp>

namespace dfcn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kBundleFormat = "dfcn-graph-bundle";
constexpr int kBundleVersion = 1;

[[noreturn]] void parse_fail(const fs::path& file, std::size_t line, const std::string& what) {
  throw ValidationError(file.string() + ":" + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

template <class F>
void for_each_line(const std::string& text, F&& f) {
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    f(++line_no, std::string_view(text).substr(start, end - start));
    start = end + 1;
  }
}

const std::array<std::pair<DegreeMode, const char*>, 2> kModes{
    {{DegreeMode::self_loop, "self_loop"}, {DegreeMode::literal, "literal"}}};

}  // namespace

std::string_view to_string(DegreeMode m) {
  for (const auto& [mode, name] : kModes)
    if (mode == m) return name;
  return "self_loop";
}

DegreeMode parse_degree_mode(std::string_view s) {
  for (const auto& [mode, name] : kModes)
    if (s == name) return mode;
  throw ParameterError("unknown degree mode '" + std::string(s) + "'");
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

Matrix read_matrix_csv(const fs::path& path) {
  const std::string text = read_text(path);
  std::vector<double> values;
  std::size_t cols = 0, rows = 0;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty()) return;
    const auto fields = split(line, ',');
    double first;
    if (rows == 0 && values.empty() && line_no == 1 && !parse_number(fields[0], first)) return;  // header
    if (rows == 0) cols = fields.size();
    if (fields.size() != cols)
      parse_fail(path, line_no, std::to_string(fields.size()) + " fields, expected " + std::to_string(cols));
    for (const auto f : fields) {
      double v;
      if (!parse_number(f, v)) parse_fail(path, line_no, "not a number: '" + std::string(trim(f)) + "'");
      values.push_back(v);
    }
    ++rows;
  });
  if (rows == 0) throw ValidationError(path.string() + ": no data rows");
  return Matrix(rows, cols, std::move(values));
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      out += format_double(m(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

Labels read_labels(const fs::path& path) {
  const std::string text = read_text(path);
  Labels out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    line = trim(line);
    if (line.empty() || line.front() == '#') return;
    int v;
    if (!parse_number(line, v)) {
      if (line_no == 1 && out.empty()) return;  // header
      parse_fail(path, line_no, "not an integer label: '" + std::string(line) + "'");
    }
    if (v < 0) parse_fail(path, line_no, "negative label");
    out.push_back(v);
  });
  return out;
}

std::string labels_to_text(const Labels& labels) {
  std::string out;
  for (int l : labels) out += std::to_string(l) + '\n';
  return out;
}

EdgeList read_edges(const fs::path& path) {
  const std::string text = read_text(path);
  EdgeList out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto t = tokens(line);
    if (t.empty()) return;
    std::size_t u, v;
    if (t.size() != 2 || !parse_number(t[0], u) || !parse_number(t[1], v))
      parse_fail(path, line_no, "expected two node indices");
    out.emplace_back(u, v);
  });
  return out;
}

void write_bundle(const fs::path& dir, const GraphData& g, DegreeMode mode) {
  g.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("attributes.csv", matrix_to_csv(g.x));

  std::string edges;
  for (const auto& [u, v] : edges_of(g.adjacency)) edges += std::to_string(u) + ' ' + std::to_string(v) + '\n';
  files.emplace_back("edges.txt", std::move(edges));

  std::string norm;
  const CsrMatrix& a = *g.adj_norm;
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
      norm += std::to_string(i) + ' ' + std::to_string(a.col_idx[p]) + ' ' + format_double(a.values[p]) + '\n';
  files.emplace_back("adjacency_norm.txt", std::move(norm));

  if (g.labels) files.emplace_back("labels.txt", labels_to_text(*g.labels));

  json digests = json::object();
  for (const auto& [name, text] : files) {
    write_text(dir / name, text);
    digests[name] = sha256_hex(text);
  }
  const json manifest{{"format", kBundleFormat},
                      {"version", kBundleVersion},
                      {"n", g.n()},
                      {"d", g.dim()},
                      {"k", g.k},
                      {"edges", g.adjacency.nnz() / 2},
                      {"degree_mode", std::string(to_string(mode))},
                      {"has_labels", g.labels.has_value()},
                      {"sha256", digests}};
  write_text(dir / "manifest.json", manifest.dump(2) + '\n');
}

GraphData read_bundle(const fs::path& dir, BundleInfo* info) {
  const fs::path manifest_path = dir / "manifest.json";
  json m;
  try {
    m = json::parse(read_text(manifest_path));
  } catch (const json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }

  try {
    if (m.at("format").get<std::string>() != kBundleFormat)
      throw IoError(manifest_path.string() + ": not a graph bundle manifest");
    if (m.at("version").get<int>() != kBundleVersion)
      throw IoError(manifest_path.string() + ": unsupported bundle version");

    BundleInfo bi;
    bi.degree_mode = parse_degree_mode(m.at("degree_mode").get<std::string>());
    for (const auto& [name, digest] : m.at("sha256").items()) {
      const std::string actual = sha256_file(dir / name);
      if (actual != digest.get<std::string>())
        throw IoError("digest mismatch for " + (dir / name).string() + ": manifest " +
                      digest.get<std::string>() + ", file " + actual);
      bi.digests.emplace_back(name, actual);
    }
    auto require = [&](const char* name) {
      if (!m.at("sha256").contains(name)) throw IoError(manifest_path.string() + ": no digest for " + name);
      return dir / name;
    };

    Matrix x = read_matrix_csv(require("attributes.csv"));
    const auto n = m.at("n").get<std::size_t>();
    const auto d = m.at("d").get<std::size_t>();
    const auto k = m.at("k").get<std::size_t>();
    if (x.rows() != n) throw ValidationError("bundle: attributes have " + std::to_string(x.rows()) + " rows, manifest n=" + std::to_string(n));
    if (x.cols() != d) throw ValidationError("bundle: attributes have " + std::to_string(x.cols()) + " columns, manifest d=" + std::to_string(d));

    std::optional<Labels> labels;
    if (m.at("has_labels").get<bool>()) labels = read_labels(require("labels.txt"));

    GraphData g = make_graph(std::move(x), adjacency_from_edges(n, read_edges(require("edges.txt"))),
                             std::move(labels), k, bi.degree_mode);

    // The stored operator must be the one the edges imply.
    const fs::path norm_path = require("adjacency_norm.txt");
    const std::string norm_text = read_text(norm_path);
    const CsrMatrix& a = *g.adj_norm;
    std::size_t row = 0, pos = 0;
    for_each_line(norm_text, [&](std::size_t line_no, std::string_view line) {
      const auto t = tokens(line);
      if (t.empty()) return;
      std::size_t i, j;
      double v;
      if (t.size() != 3 || !parse_number(t[0], i) || !parse_number(t[1], j) || !parse_number(t[2], v))
        parse_fail(norm_path, line_no, "expected 'i j value'");
      while (row < a.rows && pos >= a.row_ptr[row + 1]) ++row;
      if (pos >= a.nnz() || i != row || j != a.col_idx[pos] || v != a.values[pos])
        parse_fail(norm_path, line_no, "does not match the normalized adjacency of edges.txt");
      ++pos;
    });
    if (pos != a.nnz()) throw ValidationError(norm_path.string() + ": missing entries");

    if (info) *info = std::move(bi);
    return g;
  } catch (const json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace dfcn
