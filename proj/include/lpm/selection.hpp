#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lpm/inference.hpp"

namespace lpm {

struct ModelScore {
  int groups = 0;
  int dim = 0;
  double bic_likelihood = 0.0;
  double bic_mixture = 0.0;
  double bic_total = 0.0;
  double dic = 0.0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;                              // set when the cell failed
  std::shared_ptr<const PosteriorSample> fit;     // null for failed cells
};

// Non-position free parameters plus n d positions.
int likelihood_parameter_count(const Network& g, const ModelSpec& spec);

// Likelihood part: -2 log L(MAP draw) + k log(dyads). Mixture part: spherical
// mixture BIC on the aligned posterior-mean positions, with one component for
// models without a mixture.
ModelScore bic_score(const Network& g, const PosteriorSample& sample, const DyadCovariates* x = nullptr);

struct DicResult {
  double dic = 0.0;
  double mean_deviance = 0.0;
  double deviance_at_mean = 0.0;
  double effective_parameters = 0.0;
};

// D = -2 log L; p_D = mean(D) - D(posterior means on aligned mean positions).
DicResult dic_score(const Network& g, const PosteriorSample& sample, const DyadCovariates* x = nullptr);

struct Simulation {
  Network network;
  LatentState state;
  GlobalParams params;
};

// Draws positions (and allocations, node effects) from the prior unless `state` is
// given, then each dyad independently from Bernoulli(logistic(eta)). For mixture
// variants `params.mixture` drives the positions; otherwise prior.position_variance.
Simulation simulate_network(const ModelSpec& spec, std::size_t nodes, bool directed, const GlobalParams& params,
                            const PriorSpec& prior, std::uint64_t seed,
                            std::optional<LatentState> state = std::nullopt, const DyadCovariates* x = nullptr);

struct ScanOptions {
  std::vector<int> groups{1};  // ignored (treated as {0}) for non-mixture variants
  std::vector<int> dims{2};
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
};

// Per-cell seed derived from the master seed with splitmix64.
std::uint64_t derive_seed(std::uint64_t master, int groups, int dim);

// Fits every (G, d) cell with its own seeded chain. Successful cells come first,
// sorted by bic_total ascending, ties by smaller d then smaller G; failed cells follow.
std::vector<ModelScore> scan(const Network& g, const ModelSpec& base, const PriorSpec& prior,
                             const SamplerConfig& config, const ScanOptions& options,
                             const DyadCovariates* x = nullptr);

}  // namespace lpm
