#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lpm/inference.hpp"
#include "lpm/postprocess.hpp"
#include "lpm/selection.hpp"

namespace lpm {

// Flat "key = value" text with '#' comments. Unknown keys are rejected by check_keys.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  explicit KeyValueConfig(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  // Throws ConfigError naming the first key outside `allowed`.
  void check_keys(const std::set<std::string>& allowed) const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::optional<std::string>& fallback = std::nullopt) const;
  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  long long get_int(const std::string& key, std::optional<long long> fallback = std::nullopt) const;
  std::uint64_t get_u64(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) const;
  bool get_bool(const std::string& key, std::optional<bool> fallback = std::nullopt) const;
  // "1:5" (inclusive range) or "1,2,4".
  std::vector<int> get_int_list(const std::string& key, const std::optional<std::vector<int>>& fallback = std::nullopt) const;
  std::vector<double> get_double_list(const std::string& key) const;

  // "key=value\n" lines in key order.
  std::string canonical() const;
  std::uint64_t hash() const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// "# seed=<seed> config_hash=<hex>\n"
std::string provenance_line(std::uint64_t seed, std::uint64_t config_hash);

// Shortest round-trip decimal form.
std::string format_double(double v);

// Long format: iteration,kind,index,dim,value.
void write_posterior_csv(const PosteriorSample& sample, std::ostream& out);
void write_posterior_csv(const PosteriorSample& sample, const std::filesystem::path& path, const std::string& preamble);

struct NodeSummary {
  std::size_t node = 0;
  std::string label;
  std::vector<double> mean;  // per dimension
  std::vector<double> sd;
  double degree = 0.0;
  std::optional<double> sociality;
  std::optional<int> cluster;
};

// Rows node,dim,mean,sd,label,degree,sociality,cluster (one row per node and dimension;
// empty cells when sociality or cluster are absent).
std::vector<NodeSummary> build_node_summaries(const Network& g, const PositionSummary& summary,
                                              const std::vector<int>* partition);
void write_summary_csv(const std::vector<NodeSummary>& rows, const std::filesystem::path& path,
                       const std::string& preamble);
// Throws DataError on missing columns or malformed rows.
std::vector<NodeSummary> read_summary_csv(const std::filesystem::path& path);

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path, const std::string& preamble);

// G,d,bic_likelihood,bic_mixture,bic_total,dic,seed (failed cells carry "nan" and an error column).
void write_scan_csv(const std::vector<ModelScore>& scores, const std::filesystem::path& path,
                    const std::string& preamble);

// Long format kind,index,dim,value for the generating state and parameters.
void write_truth_csv(const Simulation& sim, const ModelSpec& spec, const std::filesystem::path& path,
                     const std::string& preamble);

// One circle per node; radius grows with degree, or with sociality when present.
// Fill colour follows the cluster column when present. Uses the first two dimensions
// (a zero second coordinate for d = 1).
std::string render_layout_svg(const std::vector<NodeSummary>& rows, const std::string& comment);

}  // namespace lpm
