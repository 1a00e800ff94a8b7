#include "lpm/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <unordered_map>

#include "lpm/error.hpp"

namespace lpm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fields.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

}  // namespace

Network::Network(std::size_t n, bool directed, const std::vector<Edge>& edges,
                 std::vector<std::string> labels)
    : n_(n), directed_(directed), adj_(n * n, 0), labels_(std::move(labels)) {
  if (labels_.empty()) {
    labels_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels_.push_back(std::to_string(i));
  }
  if (labels_.size() != n) throw DataError("label count does not match node count");
  for (auto [i, j] : edges) {
    check_index(i);
    check_index(j);
    if (i == j) throw DataError("self-loop on node " + labels_[i]);
    if (adj_[i * n + j]) continue;
    adj_[i * n + j] = 1;
    if (!directed_) adj_[j * n + i] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = directed_ ? 0 : i + 1; j < n; ++j) {
      if (i != j && adj_[i * n + j]) edges_.emplace_back(i, j);
    }
  }
}

void Network::check_index(std::size_t i) const {
  if (i >= n_) throw DataError("node index " + std::to_string(i) + " out of range");
}

bool Network::edge(std::size_t i, std::size_t j) const {
  check_index(i);
  check_index(j);
  if (i == j) throw DataError("dyad (i,i) is not defined");
  return adj_[i * n_ + j] != 0;
}

const std::string& Network::label(std::size_t i) const {
  check_index(i);
  return labels_[i];
}

DyadCovariates::DyadCovariates(std::vector<Eigen::MatrixXd> values, bool symmetric)
    : values_(std::move(values)) {
  if (values_.empty()) return;
  const auto n = values_[0].rows();
  for (const auto& m : values_) {
    if (m.rows() != n || m.cols() != n) throw DataError("covariate matrices must be n x n");
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        if (!std::isfinite(m(i, j))) throw DataError("non-finite covariate value");
        if (symmetric && m(i, j) != m(j, i)) throw DataError("undirected covariates must be symmetric");
      }
    }
  }
}

Degree degree(const Network& g, std::size_t i) {
  if (i >= g.size()) throw DataError("node index " + std::to_string(i) + " out of range");
  Degree d;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (j == i) continue;
    if (g.edge_unchecked(i, j)) ++d.out;
    if (g.edge_unchecked(j, i)) ++d.in;
  }
  return d;
}

Eigen::MatrixXd geodesic_distances(const Network& g) {
  const std::size_t n = g.size();
  if (n < 2) throw DataError("geodesic distances need at least two nodes");
  constexpr double unreachable = -1.0;
  Eigen::MatrixXd dist = Eigen::MatrixXd::Constant(n, n, unreachable);
  std::vector<std::vector<std::size_t>> out(n);
  for (auto [i, j] : g.edges()) {
    out[i].push_back(j);
    if (!g.directed()) out[j].push_back(i);
  }
  double max_finite = 0.0;
  std::queue<std::size_t> frontier;
  for (std::size_t s = 0; s < n; ++s) {
    dist(s, s) = 0.0;
    frontier.push(s);
    while (!frontier.empty()) {
      const auto u = frontier.front();
      frontier.pop();
      for (auto v : out[u]) {
        if (dist(s, v) != unreachable) continue;
        dist(s, v) = dist(s, u) + 1.0;
        max_finite = std::max(max_finite, dist(s, v));
        frontier.push(v);
      }
    }
  }
  const double sentinel = max_finite + 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (dist(i, j) == unreachable) dist(i, j) = sentinel;
    }
  }
  return dist;
}

Network load_edge_list(const std::filesystem::path& path, bool directed,
                       const std::vector<std::string>& known_labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list " + path.string());
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> labels;
  std::vector<Edge> edges;
  auto lookup = [&](const std::string& label) {
    auto [it, inserted] = index.emplace(label, labels.size());
    if (inserted) labels.push_back(label);
    return it->second;
  };
  for (const auto& label : known_labels) {
    if (index.count(label)) throw DataError("duplicate node label " + label);
    lookup(label);
  }
  std::string line;
  std::size_t line_no = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto fields = split_csv(text);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError("malformed edge at line " + std::to_string(line_no) + ": expected 2 fields");
    }
    if (first_data_line && fields[0] == "source" && fields[1] == "target") {
      first_data_line = false;
      continue;
    }
    first_data_line = false;
    if (fields[0] == fields[1]) {
      throw DataError("self-loop at line " + std::to_string(line_no) + ": " + fields[0]);
    }
    const auto i = lookup(fields[0]);
    const auto j = lookup(fields[1]);
    edges.emplace_back(i, j);
  }
  if (labels.empty()) throw DataError("edge list " + path.string() + " contains no edges");
  const std::size_t n = labels.size();
  return Network(n, directed, edges, std::move(labels));
}

std::vector<std::string> load_node_mapping(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open node mapping " + path.string());
  std::vector<std::pair<std::size_t, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto fields = split_csv(text);
    if (fields.size() != 2) throw DataError("malformed node mapping at line " + std::to_string(line_no));
    if (fields[0] == "label" && fields[1] == "index") continue;
    try {
      rows.emplace_back(std::stoul(fields[1]), fields[0]);
    } catch (const std::exception&) {
      throw DataError("bad node index at line " + std::to_string(line_no));
    }
  }
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].first != k) throw DataError("node mapping indices must be 0..n-1");
    labels.push_back(rows[k].second);
  }
  return labels;
}

void write_edge_list(const Network& g, const std::filesystem::path& path, const std::string& preamble) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << preamble << "source,target\n";
  for (auto [i, j] : g.edges()) out << g.labels()[i] << ',' << g.labels()[j] << '\n';
}

void write_node_mapping(const Network& g, const std::filesystem::path& path, const std::string& preamble) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << preamble << "label,index\n";
  for (std::size_t i = 0; i < g.size(); ++i) out << g.labels()[i] << ',' << i << '\n';
}

}  // namespace lpm
