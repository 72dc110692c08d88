#pragma once

// On-disk graph bundles and the plain-text formats around them.
//
// A bundle is a directory:
//   attributes.csv      N rows of d comma-separated values
//   edges.txt           "u v" per undirected edge, u < v
//   adjacency_norm.txt  "i j value" per stored entry of the normalized adjacency
//   labels.txt          optional, one class id per line
//   manifest.json       sizes, degree mode and a SHA-256 digest per file
//
// Numbers are written in shortest round-trip form, so write -> read is exact.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dfcn/graph.hpp"

namespace dfcn {

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate, write, check.
void write_text(const std::filesystem::path& path, std::string_view text);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Numeric CSV without quoting. A first line whose leading field is not a
/// number is treated as a header and skipped. Errors name file and line.
Matrix read_matrix_csv(const std::filesystem::path& path);
std::string matrix_to_csv(const Matrix& m);

Labels read_labels(const std::filesystem::path& path);
std::string labels_to_text(const Labels& labels);

/// Whitespace-separated "u v" pairs; blank lines and '#' comments are skipped.
EdgeList read_edges(const std::filesystem::path& path);

struct BundleInfo {
  DegreeMode degree_mode = DegreeMode::self_loop;
  /// file name -> hex digest, as recorded in the manifest
  std::vector<std::pair<std::string, std::string>> digests;
};

void write_bundle(const std::filesystem::path& dir, const GraphData& g,
                  DegreeMode mode = DegreeMode::self_loop);

/// Verifies every digest and the stored normalized adjacency against a
/// recomputation from the edges. Throws IoError on missing files or digest
/// mismatch, ValidationError on inconsistent content.
GraphData read_bundle(const std::filesystem::path& dir, BundleInfo* info = nullptr);

std::string_view to_string(DegreeMode m);
DegreeMode parse_degree_mode(std::string_view s);

}  // namespace dfcn
