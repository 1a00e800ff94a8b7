#include "lpm/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "lpm/error.hpp"
#include "lpm/mixture.hpp"
#include "lpm/postprocess.hpp"

namespace lpm {

int likelihood_parameter_count(const Network& g, const ModelSpec& spec) {
  const int n = static_cast<int>(g.size());
  int k = n * spec.dim + 1 + spec.covariates;
  if (spec.free_scale) k += 1;
  if (spec.has_sociality()) k += g.directed() ? 2 * n : n;
  return k;
}

ModelScore bic_score(const Network& g, const PosteriorSample& sample, const DyadCovariates* x) {
  if (sample.draws.empty()) throw DataError("posterior sample is empty");
  const auto& spec = sample.spec;
  const auto& best = sample.draws[sample.map_index()];
  const double ll = log_likelihood(g, spec, best.state, best.params, x);
  const int k = likelihood_parameter_count(g, spec);

  ModelScore score;
  score.groups = spec.groups;
  score.dim = spec.dim;
  score.seed = sample.config.seed;
  score.bic_likelihood = -2.0 * ll + k * std::log(static_cast<double>(g.dyad_count()));
  const LatentState mean = posterior_mean_positions(align_sample(sample));
  score.bic_mixture = mixture_bic(mean.positions, std::max(spec.groups, 1), sample.config.seed);
  score.bic_total = score.bic_likelihood + score.bic_mixture;
  return score;
}

DicResult dic_score(const Network& g, const PosteriorSample& sample, const DyadCovariates* x) {
  if (sample.draws.empty()) throw DataError("posterior sample is empty");
  DicResult out;
  for (const auto& draw : sample.draws) out.mean_deviance += -2.0 * draw.log_likelihood;
  out.mean_deviance /= static_cast<double>(sample.draws.size());
  const LatentState mean_state = posterior_mean_positions(align_sample(sample));
  const GlobalParams mean_params = posterior_mean_params(sample);
  out.deviance_at_mean = -2.0 * log_likelihood(g, sample.spec, mean_state, mean_params, x);
  out.effective_parameters = out.mean_deviance - out.deviance_at_mean;
  out.dic = out.mean_deviance + out.effective_parameters;
  return out;
}

Simulation simulate_network(const ModelSpec& spec, std::size_t nodes, bool directed, const GlobalParams& params,
                            const PriorSpec& prior, std::uint64_t seed, std::optional<LatentState> state,
                            const DyadCovariates* x) {
  spec.validate();
  prior.validate();
  if (nodes < 2) throw ConfigError("simulation needs at least two nodes");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(nodes);

  Simulation sim;
  sim.params = params;
  if (state) {
    sim.state = std::move(*state);
  } else {
    sim.state.positions = Eigen::MatrixXd(n, spec.dim);
    if (spec.has_mixture()) {
      const auto& mix = params.mixture;
      mix.validate();
      if (mix.groups() != spec.groups || mix.mu.cols() != spec.dim) throw ConfigError("mixture does not match spec");
      sim.state.allocations.resize(nodes);
      for (Eigen::Index i = 0; i < n; ++i) {
        double u = uniform(rng);
        int k = 0;
        for (; k < mix.groups() - 1; ++k) {
          u -= mix.lambda[k];
          if (u <= 0.0) break;
        }
        sim.state.allocations[static_cast<std::size_t>(i)] = k;
        const double sd = std::sqrt(mix.sigma2[k]);
        for (int c = 0; c < spec.dim; ++c) sim.state.positions(i, c) = mix.mu(k, c) + sd * normal(rng);
      }
    } else {
      const double sd = std::sqrt(prior.position_variance);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < spec.dim; ++c) sim.state.positions(i, c) = sd * normal(rng);
      }
    }
    if (spec.has_sociality()) {
      if (!(params.sociality_variance > 0.0)) throw ConfigError("sociality variance must be positive");
      const double sd = std::sqrt(params.sociality_variance);
      sim.state.sender = Eigen::VectorXd(n);
      for (Eigen::Index i = 0; i < n; ++i) sim.state.sender[i] = sd * normal(rng);
      if (directed) {
        sim.state.receiver = Eigen::VectorXd(n);
        for (Eigen::Index i = 0; i < n; ++i) sim.state.receiver[i] = sd * normal(rng);
      }
    }
  }

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = directed ? 0 : i + 1; j < nodes; ++j) {
      if (i == j) continue;
      if (uniform(rng) < edge_probability(eta(spec, i, j, sim.state, sim.params, x))) edges.emplace_back(i, j);
    }
  }
  sim.network = Network(nodes, directed, edges);
  check_consistent(sim.network, spec, sim.state, sim.params, x);
  return sim;
}

std::uint64_t derive_seed(std::uint64_t master, int groups, int dim) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return splitmix(splitmix(master) ^ (static_cast<std::uint64_t>(groups) << 32) ^ static_cast<std::uint64_t>(dim));
}

std::vector<ModelScore> scan(const Network& g, const ModelSpec& base, const PriorSpec& prior,
                             const SamplerConfig& config, const ScanOptions& options, const DyadCovariates* x) {
  if (options.groups.empty() || options.dims.empty()) throw ConfigError("scan ranges must be nonempty");
  struct Cell {
    int groups;
    int dim;
  };
  std::vector<Cell> cells;
  const std::vector<int> groups = base.has_mixture() ? options.groups : std::vector<int>{0};
  for (int d : options.dims) {
    for (int gr : groups) cells.push_back({gr, d});
  }

  std::vector<ModelScore> scores(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      ModelScore& score = scores[c];
      score.groups = cells[c].groups;
      score.dim = cells[c].dim;
      score.seed = derive_seed(options.master_seed, cells[c].groups, cells[c].dim);
      try {
        ModelSpec spec = base;
        spec.groups = cells[c].groups;
        spec.dim = cells[c].dim;
        SamplerConfig cfg = config;
        cfg.seed = score.seed;
        auto fit = std::make_shared<PosteriorSample>(mcmc_fit(g, spec, prior, cfg, std::nullopt, x));
        const ModelScore bic = bic_score(g, *fit, x);
        score.bic_likelihood = bic.bic_likelihood;
        score.bic_mixture = bic.bic_mixture;
        score.bic_total = bic.bic_total;
        score.dic = dic_score(g, *fit, x).dic;
        score.fit = std::move(fit);
      } catch (const std::exception& e) {
        score.ok = false;
        score.error = e.what();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(cells.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::stable_sort(scores.begin(), scores.end(), [](const ModelScore& a, const ModelScore& b) {
    if (a.ok != b.ok) return a.ok;
    if (!a.ok) return false;
    if (a.bic_total != b.bic_total) return a.bic_total < b.bic_total;
    if (a.dim != b.dim) return a.dim < b.dim;
    return a.groups < b.groups;
  });
  return scores;
}

}  // namespace lpm
