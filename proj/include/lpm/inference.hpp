#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lpm/model.hpp"
#include "lpm/network.hpp"

namespace lpm {

using Rng = std::mt19937_64;

struct SamplerConfig {
  std::size_t iterations = 10000;
  std::size_t burn_in = 2000;
  std::size_t thinning = 10;
  double proposal_sd_positions = 0.5;
  double proposal_sd_globals = 0.2;
  bool adapt = true;
  double target_acceptance_positions = 0.234;
  double target_acceptance_scalars = 0.44;
  std::size_t adapt_batch = 50;
  std::uint64_t seed = 1;
  std::optional<std::size_t> case_control;  // per-node zero-dyad sample size
  bool use_likelihood = true;                // false samples the prior

  // Throws ConfigError.
  void validate() const;
  std::size_t expected_draws() const { return (iterations - burn_in) / thinning; }
};

struct Initialization {
  LatentState state;
  GlobalParams params;
};

struct Draw {
  std::size_t iteration = 0;
  LatentState state;
  GlobalParams params;
  double log_likelihood = 0.0;  // exact, regardless of the target used for sampling
  double log_posterior = 0.0;
};

struct PosteriorSample {
  std::vector<Draw> draws;
  std::map<std::string, double> acceptance;  // post-burn-in rate per block
  ModelSpec spec;
  PriorSpec prior;
  SamplerConfig config;

  // Index of the draw with the highest log posterior. Throws DataError when empty.
  std::size_t map_index() const;
};

// One edge variable entering a (possibly approximate) log-likelihood with weight w.
struct WeightedDyad {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  bool y = false;
  double w = 1.0;
};

// Every dyad with unit weight.
std::vector<WeightedDyad> full_dyads(const Network& g);

// All edges with unit weight plus, for each node, m0 of its zero dyads drawn
// uniformly without replacement and weighted by (zero count)/m0. Undirected zero
// dyads are reachable from both endpoints, so their weights carry an extra 1/2.
// m0 is clamped to the available zeros.
std::vector<WeightedDyad> case_control_dyads(const Network& g, std::size_t m0, Rng& rng);

double weighted_log_likelihood(const std::vector<WeightedDyad>& dyads, const ModelSpec& spec,
                               const LatentState& state, const GlobalParams& params,
                               const DyadCovariates* x = nullptr);

// Unbiased estimate of log_likelihood from a fresh case-control sample.
double case_control_loglik(const Network& g, const ModelSpec& spec, const LatentState& state,
                           const GlobalParams& params, const DyadCovariates* x, std::size_t m0, Rng& rng);

// Robbins-Monro step on the log scale: sd * exp(gain * (rate - target)) with
// gain = min(1, 1/sqrt(batch)).
double adapt_scale(double sd, double rate, double target, std::size_t batch);

struct ProposalScales {
  std::vector<double> positions;  // per node
  std::vector<double> sender;     // per node
  std::vector<double> receiver;   // per node
  double alpha = 0.2;
  std::vector<double> beta;
  double log_beta1 = 0.2;
  double log_sociality_variance = 0.2;
};

struct BlockCounts {
  std::size_t accepted = 0;
  std::size_t proposed = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

// Metropolis-within-Gibbs over positions, node effects, global scalars and
// (conjugate Gibbs) mixture parameters. Owns its chain state.
class Sampler {
 public:
  Sampler(const Network& g, ModelSpec spec, PriorSpec prior, SamplerConfig config, Initialization init,
          const DyadCovariates* x = nullptr);

  // Runs the full schedule: burn-in with optional adaptation, then recording.
  PosteriorSample run();

  // One Gibbs cycle: positions, node effects, globals, mixture.
  void sweep();

  // Per-node random-walk Metropolis on z_i. Returns one flag per node.
  std::vector<bool> update_positions();
  std::vector<bool> update_sociality();
  // Flags in order: alpha, beta_1..p, log beta1 (if free), log sociality variance (if active).
  std::vector<bool> update_globals();
  void update_mixture();

  // log pi(z_i = z | rest): position prior plus the incident dyads only.
  double node_log_conditional(std::size_t i, const Eigen::Ref<const Eigen::VectorXd>& z) const;
  // Likelihood (sampling target) plus global priors evaluated at `params`.
  double global_log_conditional(const GlobalParams& params) const;
  // The likelihood being targeted: exact or case-control with the fixed sample.
  double target_log_likelihood() const;

  LatentState state() const;
  const GlobalParams& params() const noexcept { return params_; }
  ProposalScales& scales() noexcept { return scales_; }
  const ProposalScales& scales() const noexcept { return scales_; }
  const std::vector<WeightedDyad>& dyads() const noexcept { return dyads_; }

  // Adapts every proposal scale from the acceptance counts of the last batch.
  void adapt(std::size_t batch_index);

 private:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  enum class Effect { sender, receiver };

  double kernel(const double* za, const double* zb, double beta1) const;
  double incident_log_lik(std::size_t node, const double* z) const;
  double incident_log_lik_effect(std::size_t node, Effect kind, double value) const;
  double log_lik_with(double alpha, double beta1, std::size_t beta_index, double beta_shift) const;
  bool accept(double log_ratio);

  const Network* g_;
  ModelSpec spec_;
  PriorSpec prior_;
  SamplerConfig config_;
  const DyadCovariates* x_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};

  RowMatrix z_;
  Eigen::VectorXd sender_;
  Eigen::VectorXd receiver_;
  std::vector<int> allocations_;
  GlobalParams params_;
  ProposalScales scales_;

  std::vector<WeightedDyad> dyads_;
  std::vector<std::vector<std::uint32_t>> incident_;
  std::vector<double> xb_;     // beta'x per dyad
  std::vector<double> xvals_;  // dyad-major covariate values, p per dyad

  // Batch counters used by adapt; run() also accumulates post-burn-in totals.
  std::vector<BlockCounts> batch_positions_, batch_sender_, batch_receiver_;
  BlockCounts batch_alpha_, batch_beta1_, batch_socvar_;
  std::vector<BlockCounts> batch_beta_;
  std::map<std::string, BlockCounts> totals_;
  bool recording_ = false;
};

// Fits the model. Starts from mle_initialize when `init` is absent.
PosteriorSample mcmc_fit(const Network& g, const ModelSpec& spec, const PriorSpec& prior, const SamplerConfig& config,
                         std::optional<Initialization> init = std::nullopt, const DyadCovariates* x = nullptr);

struct InitOptions {
  int max_iterations = 2000;
  double relative_tolerance = 1e-8;
  double gradient_tolerance = 1e-8;
  std::uint64_t seed = 7;  // jitter and mixture seeding
};

struct InitResult {
  Initialization init;
  int iterations = 0;
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;
  bool used_jitter = false;
};

// Classical MDS on (symmetrised) hop distances, then gradient ascent with backtracking
// on log_likelihood over positions, alpha and beta. Mixture parameters come from an
// EM fit to the result; node effects start at zero.
InitResult mle_initialize(const Network& g, const ModelSpec& spec, const DyadCovariates* x = nullptr,
                          const InitOptions& options = {});

}  // namespace lpm
