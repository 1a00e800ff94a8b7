#include <algorithm>
#include <cmath>
#include <limits>

#include "lpm/error.hpp"
#include "lpm/inference.hpp"

namespace lpm {

void SamplerConfig::validate() const {
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (burn_in >= iterations) throw ConfigError("burn_in must be smaller than iterations");
  if (thinning < 1) throw ConfigError("thinning must be >= 1");
  if (!(proposal_sd_positions > 0.0) || !(proposal_sd_globals > 0.0)) {
    throw ConfigError("proposal standard deviations must be positive");
  }
  for (double t : {target_acceptance_positions, target_acceptance_scalars}) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("target acceptance rates must lie in (0,1)");
  }
  if (adapt_batch < 1) throw ConfigError("adapt_batch must be >= 1");
  if (case_control && *case_control < 1) throw ConfigError("case-control sample size must be >= 1");
}

std::size_t PosteriorSample::map_index() const {
  if (draws.empty()) throw DataError("posterior sample is empty");
  std::size_t best = 0;
  for (std::size_t k = 1; k < draws.size(); ++k) {
    if (draws[k].log_posterior > draws[best].log_posterior) best = k;
  }
  return best;
}

std::vector<WeightedDyad> full_dyads(const Network& g) {
  std::vector<WeightedDyad> out;
  out.reserve(g.dyad_count());
  const auto n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = g.directed() ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), g.edge_unchecked(i, j), 1.0});
    }
  }
  return out;
}

std::vector<WeightedDyad> case_control_dyads(const Network& g, std::size_t m0, Rng& rng) {
  if (m0 < 1) throw ConfigError("case-control sample size must be >= 1");
  const auto n = g.size();
  std::vector<WeightedDyad> out;
  for (auto [i, j] : g.edges()) {
    out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), true, 1.0});
  }
  const double share = g.directed() ? 1.0 : 0.5;
  std::vector<std::uint32_t> zeros;
  for (std::size_t i = 0; i < n; ++i) {
    zeros.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && !g.edge_unchecked(i, j)) zeros.push_back(static_cast<std::uint32_t>(j));
    }
    if (zeros.empty()) continue;
    const std::size_t take = std::min(m0, zeros.size());
    // Partial Fisher-Yates: the first `take` entries become a uniform sample.
    for (std::size_t k = 0; k < take; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, zeros.size() - 1);
      std::swap(zeros[k], zeros[pick(rng)]);
    }
    const double w = share * static_cast<double>(zeros.size()) / static_cast<double>(take);
    for (std::size_t k = 0; k < take; ++k) {
      auto a = static_cast<std::uint32_t>(i);
      auto b = zeros[k];
      if (!g.directed() && a > b) std::swap(a, b);
      out.push_back({a, b, false, w});
    }
  }
  return out;
}

double weighted_log_likelihood(const std::vector<WeightedDyad>& dyads, const ModelSpec& spec,
                               const LatentState& state, const GlobalParams& params, const DyadCovariates* x) {
  double total = 0.0;
  for (const auto& d : dyads) total += d.w * dyad_log_mass(d.y, eta(spec, d.i, d.j, state, params, x));
  return total;
}

double case_control_loglik(const Network& g, const ModelSpec& spec, const LatentState& state,
                           const GlobalParams& params, const DyadCovariates* x, std::size_t m0, Rng& rng) {
  if (state.nodes() != g.size()) throw ConfigError("state size does not match network");
  return weighted_log_likelihood(case_control_dyads(g, m0, rng), spec, state, params, x);
}

double adapt_scale(double sd, double rate, double target, std::size_t batch) {
  const double gain = std::min(1.0, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(batch, 1))));
  return sd * std::exp(gain * (rate - target));
}

}  // namespace lpm
