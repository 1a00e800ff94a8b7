#include <doctest.h>

#include <cmath>

#include "lpm/error.hpp"
#include "lpm/mixture.hpp"
#include "lpm/postprocess.hpp"
#include "lpm/selection.hpp"
#include "support.hpp"

using namespace lpm;
using doctest::Approx;

namespace {

SamplerConfig quick(std::uint64_t seed = 1) {
  SamplerConfig c;
  c.iterations = 800;
  c.burn_in = 300;
  c.thinning = 5;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("simulation extremes") {
  const ModelSpec spec{Variant::distance, 2};
  LatentState coincident;
  coincident.positions = Eigen::MatrixXd::Zero(8, 2);
  GlobalParams p;
  p.alpha = 50.0;
  CHECK(simulate_network(spec, 8, false, p, PriorSpec{}, 1, coincident).network.edge_count() == 28);
  p.alpha = -50.0;
  CHECK(simulate_network(spec, 8, true, p, PriorSpec{}, 1).network.edge_count() == 0);
  CHECK_THROWS_AS(simulate_network(spec, 1, false, p, PriorSpec{}, 1), ConfigError);
}

TEST_CASE("simulation is seeded") {
  const ModelSpec spec{Variant::cluster_re, 2, 2};
  GlobalParams p;
  p.mixture.lambda = Eigen::Vector2d(0.5, 0.5);
  p.mixture.mu = Eigen::MatrixXd(2, 2);
  p.mixture.mu << -2, 0, 2, 0;
  p.mixture.sigma2 = Eigen::Vector2d(0.3, 0.3);
  const auto a = simulate_network(spec, 20, true, p, PriorSpec{}, 8);
  const auto b = simulate_network(spec, 20, true, p, PriorSpec{}, 8);
  CHECK(a.network.edges() == b.network.edges());
  CHECK(a.state.positions == b.state.positions);
  CHECK(a.state.receiver.size() == 20);
  CHECK(a.state.allocations.size() == 20);
}

TEST_CASE("empirical edge frequencies match the model") {
  lpm_test::Rng rng(3);
  const ModelSpec spec{Variant::distance, 2};
  auto in = lpm_test::random_instance(spec, 4, false, rng);
  const int reps = 20000;
  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(4, 4);
  for (int r = 0; r < reps; ++r) {
    const auto sim = simulate_network(spec, 4, false, in.params, PriorSpec{}, 1000 + static_cast<std::uint64_t>(r), in.state);
    for (const auto& [i, j] : sim.network.edges()) freq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 1.0 / reps;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      const double p = 1.0 / (1.0 + std::exp(-lpm_test::oracle_eta(in, i, j, false)));
      CHECK(std::abs(freq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - p) < 3.0 * std::sqrt(p * (1 - p) / reps));
    }
  }
}

TEST_CASE("BIC parts and parameter counts") {
  lpm_test::Rng rng(4);
  const auto g = lpm_test::random_graph(12, true, 0.3, rng);
  CHECK(likelihood_parameter_count(g, ModelSpec{Variant::distance, 2}) == 25);
  CHECK(likelihood_parameter_count(g, ModelSpec{Variant::cluster_re, 2, 3, true}) == 24 + 1 + 1 + 24);

  const ModelSpec spec{Variant::cluster, 2, 1};
  const auto s = mcmc_fit(g, spec, PriorSpec{}, quick());
  const auto score = bic_score(g, s);
  CHECK(score.bic_total == Approx(score.bic_likelihood + score.bic_mixture).epsilon(1e-12));
  const auto& best = s.draws[s.map_index()];
  CHECK(score.bic_likelihood ==
        Approx(-2.0 * log_likelihood(g, spec, best.state, best.params) + 25 * std::log(132.0)).epsilon(1e-12));
  const auto mean = posterior_mean_positions(align_sample(s));
  CHECK(score.bic_mixture == Approx(mixture_bic(mean.positions, 1)).epsilon(1e-12));
  CHECK_THROWS_AS(bic_score(g, PosteriorSample{}), DataError);
}

TEST_CASE("BIC is unchanged by rigid motions of every draw") {
  lpm_test::Rng rng(5);
  const auto g = lpm_test::random_graph(10, false, 0.35, rng);
  const auto s = mcmc_fit(g, ModelSpec{Variant::cluster, 2, 2}, PriorSpec{}, quick(3));
  PosteriorSample moved = s;
  for (auto& d : moved.draws) {
    d.state.positions = (d.state.positions * lpm_test::random_orthogonal(2, rng)).rowwise() +
                        lpm_test::random_matrix(1, 2, rng, 2.0).row(0);
  }
  CHECK(bic_score(g, moved).bic_total == Approx(bic_score(g, s).bic_total).epsilon(1e-8));
}

TEST_CASE("DIC") {
  lpm_test::Rng rng(6);
  const ModelSpec spec{Variant::distance, 2};
  const auto g = lpm_test::random_graph(10, false, 0.4, rng);
  const auto in = lpm_test::random_instance(spec, 10, false, rng);
  PosteriorSample one;
  one.spec = spec;
  Draw d{0, in.state, in.params, log_likelihood(g, spec, in.state, in.params), 0.0};
  one.draws.push_back(d);
  const auto single = dic_score(g, one);
  CHECK(std::abs(single.effective_parameters) < 1e-9);
  CHECK(single.dic == Approx(-2.0 * d.log_likelihood));

  // Jittered draws around a fixed point raise p_D.
  auto jittered = [&](double sd) {
    PosteriorSample s;
    s.spec = spec;
    for (int k = 0; k < 200; ++k) {
      Draw j = d;
      j.state.positions += lpm_test::random_matrix(10, 2, rng, sd);
      j.log_likelihood = log_likelihood(g, spec, j.state, j.params);
      j.log_posterior = k == 0 ? 1.0 : 0.0;
      s.draws.push_back(j);
    }
    return dic_score(g, s).effective_parameters;
  };
  CHECK(jittered(0.3) > jittered(0.05));
  CHECK(jittered(0.05) > 0.0);

  const auto fit = mcmc_fit(g, spec, PriorSpec{}, quick());
  CHECK(std::isfinite(dic_score(g, fit).dic));
}

TEST_CASE("scan ordering and seeding") {
  lpm_test::Rng rng(7);
  const auto g = lpm_test::random_graph(12, false, 0.3, rng);
  ScanOptions opts;
  opts.groups = {2};
  opts.dims = {2};
  const auto single = scan(g, ModelSpec{Variant::cluster, 2, 2}, PriorSpec{}, quick(), opts);
  CHECK(single.size() == 1);
  CHECK(single[0].seed == derive_seed(opts.master_seed, 2, 2));

  opts.groups = {1, 2, 3};
  opts.dims = {1, 2};
  opts.threads = 3;
  const auto grid = scan(g, ModelSpec{Variant::cluster, 2, 2}, PriorSpec{}, quick(), opts);
  CHECK(grid.size() == 6);
  for (std::size_t k = 1; k < grid.size(); ++k) CHECK(grid[k - 1].bic_total <= grid[k].bic_total);
  opts.threads = 1;
  const auto serial = scan(g, ModelSpec{Variant::cluster, 2, 2}, PriorSpec{}, quick(), opts);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(serial[k].bic_total == grid[k].bic_total);

  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  opts.groups = {};
  CHECK_THROWS_AS(scan(g, ModelSpec{Variant::cluster, 2, 2}, PriorSpec{}, quick(), opts), ConfigError);
}

TEST_CASE("failed cells are reported last") {
  lpm_test::Rng rng(8);
  const auto g = lpm_test::random_graph(4, false, 0.5, rng);
  ScanOptions opts;
  opts.dims = {1, 5};  // n < d + 1 fails at initialisation
  const auto scores = scan(g, ModelSpec{Variant::distance, 2}, PriorSpec{}, quick(), opts);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].ok);
  CHECK_FALSE(scores[1].ok);
  CHECK_FALSE(scores[1].error.empty());
}
