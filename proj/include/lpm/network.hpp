#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lpm {

using Edge = std::pair<std::size_t, std::size_t>;

// Immutable binary graph over nodes 0..n-1. Self-loops are structurally absent.
class Network {
 public:
  Network() = default;

  // Duplicate edges are collapsed. For undirected graphs (i,j) and (j,i) are the same edge.
  Network(std::size_t n, bool directed, const std::vector<Edge>& edges,
          std::vector<std::string> labels = {});

  std::size_t size() const noexcept { return n_; }
  bool directed() const noexcept { return directed_; }

  // Throws DataError on i == j or out-of-range indices.
  bool edge(std::size_t i, std::size_t j) const;

  // Unchecked access for hot loops; caller guarantees i != j and both in range.
  bool edge_unchecked(std::size_t i, std::size_t j) const noexcept { return adj_[i * n_ + j] != 0; }

  // Undirected edges are reported once with i < j; directed edges as (source, target).
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  // Number of dyads carrying an edge variable: n(n-1)/2 undirected, n(n-1) directed.
  std::size_t dyad_count() const noexcept {
    return directed_ ? n_ * (n_ - 1) : n_ * (n_ - 1) / 2;
  }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t i) const;

 private:
  void check_index(std::size_t i) const;

  std::size_t n_ = 0;
  bool directed_ = false;
  std::vector<std::uint8_t> adj_;
  std::vector<Edge> edges_;
  std::vector<std::string> labels_;
};

// Real-valued covariates on ordered dyads, k = 0..p-1.
class DyadCovariates {
 public:
  DyadCovariates() = default;

  // values[k] is an n x n matrix; diagonal entries are ignored. Symmetry is required
  // when `symmetric` is set (undirected networks).
  DyadCovariates(std::vector<Eigen::MatrixXd> values, bool symmetric);

  std::size_t count() const noexcept { return values_.size(); }
  std::size_t nodes() const noexcept { return values_.empty() ? 0 : static_cast<std::size_t>(values_[0].rows()); }
  double value(std::size_t i, std::size_t j, std::size_t k) const { return values_[k](i, j); }

 private:
  std::vector<Eigen::MatrixXd> values_;
};

struct Degree {
  std::size_t in = 0;
  std::size_t out = 0;
};

// For undirected graphs in == out == number of incident edges.
Degree degree(const Network& g, std::size_t i);

// Shortest-path hop counts following edge direction. Unreachable pairs get
// (largest finite distance + 1); the diagonal is zero.
Eigen::MatrixXd geodesic_distances(const Network& g);

// Reads "source,target" lines with an optional "source,target" header.
// Labels are assigned indices in first-appearance order, after any `known_labels`
// (used to keep isolated nodes that never appear in an edge).
Network load_edge_list(const std::filesystem::path& path, bool directed,
                       const std::vector<std::string>& known_labels = {});

// Reads a "label,index" mapping and returns labels ordered by index.
std::vector<std::string> load_node_mapping(const std::filesystem::path& path);

// Writes "source,target" with a header, one row per edge, using node labels.
void write_edge_list(const Network& g, const std::filesystem::path& path,
                     const std::string& preamble = {});

// Writes "label,index".
void write_node_mapping(const Network& g, const std::filesystem::path& path,
                        const std::string& preamble = {});

}  // namespace lpm
