#include <algorithm>
#include <cmath>
#include <random>

#include "lpm/error.hpp"
#include "lpm/inference.hpp"
#include "lpm/mds.hpp"
#include "lpm/mixture.hpp"

namespace lpm {

namespace {

struct Packed {
  const Network& g;
  const ModelSpec& spec;
  const DyadCovariates* x;
  LatentState state;
  GlobalParams params;

  Eigen::Index size() const { return state.positions.size() + 1 + params.beta.size(); }

  void unpack(const Eigen::VectorXd& v) {
    const auto np = state.positions.size();
    state.positions = Eigen::Map<const Eigen::MatrixXd>(v.data(), state.positions.rows(), state.positions.cols());
    params.alpha = v[np];
    params.beta = v.segment(np + 1, params.beta.size());
  }

  Eigen::VectorXd pack() const {
    const auto np = state.positions.size();
    Eigen::VectorXd v(size());
    v.head(np) = Eigen::Map<const Eigen::VectorXd>(state.positions.data(), np);
    v[np] = params.alpha;
    v.segment(np + 1, params.beta.size()) = params.beta;
    return v;
  }

  double value() const { return log_likelihood(g, spec, state, params, x); }

  Eigen::VectorXd gradient() const {
    const Gradient grad = log_likelihood_gradient(g, spec, state, params, x);
    const auto np = state.positions.size();
    Eigen::VectorXd v(size());
    v.head(np) = Eigen::Map<const Eigen::VectorXd>(grad.positions.data(), np);
    v[np] = grad.alpha;
    v.segment(np + 1, params.beta.size()) = grad.beta;
    return v;
  }
};

bool all_off_diagonal_equal(const Eigen::MatrixXd& d) {
  const auto n = d.rows();
  const double ref = d(0, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && d(i, j) != ref) return false;
    }
  }
  return true;
}

// Newton steps on alpha alone with positions fixed.
void fit_intercept(Packed& problem) {
  for (int it = 0; it < 50; ++it) {
    double grad = 0.0, curv = 0.0;
    const auto n = problem.g.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = problem.g.directed() ? 0 : i + 1; j < n; ++j) {
        if (i == j) continue;
        const double p = edge_probability(eta(problem.spec, i, j, problem.state, problem.params, problem.x));
        grad += (problem.g.edge_unchecked(i, j) ? 1.0 : 0.0) - p;
        curv += p * (1.0 - p);
      }
    }
    if (curv < 1e-12) break;
    const double step = std::clamp(grad / curv, -5.0, 5.0);
    problem.params.alpha += step;
    if (std::abs(step) < 1e-10) break;
  }
}

}  // namespace

InitResult mle_initialize(const Network& g, const ModelSpec& spec, const DyadCovariates* x,
                          const InitOptions& options) {
  spec.validate();
  const auto n = g.size();
  if (n < static_cast<std::size_t>(spec.dim) + 1) throw ConfigError("initialisation needs n >= d + 1 nodes");
  if (x && x->nodes() != n) throw ConfigError("covariates cover a different number of nodes");
  const int p = x ? static_cast<int>(x->count()) : 0;
  if (spec.covariates != p) throw ConfigError("spec covariate count does not match covariates");

  Rng rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  InitResult result;

  // Hop distances on the undirected skeleton.
  const Network skeleton(n, false, g.edges(), g.labels());
  const Eigen::MatrixXd hops = geodesic_distances(skeleton);

  Packed problem{g, spec, x, {}, {}};
  if (all_off_diagonal_equal(hops)) {
    result.used_jitter = true;
    problem.state.positions = Eigen::MatrixXd(n, spec.dim);
    for (Eigen::Index k = 0; k < problem.state.positions.size(); ++k) problem.state.positions.data()[k] = 0.1 * normal(rng);
  } else {
    problem.state.positions = classical_mds(hops, spec.dim).coordinates;
    // Zero columns (short spectrum) and exact coincidences break the gradient; nudge them.
    for (Eigen::Index k = 0; k < problem.state.positions.size(); ++k) {
      problem.state.positions.data()[k] += 1e-3 * normal(rng);
    }
  }
  problem.params.beta = Eigen::VectorXd::Zero(p);
  problem.params.beta1 = 1.0;
  if (spec.has_sociality()) {
    problem.state.sender = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    if (g.directed()) problem.state.receiver = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  }
  fit_intercept(problem);

  Eigen::VectorXd theta = problem.pack();
  double f = problem.value();
  Eigen::VectorXd grad = problem.gradient();
  double step = 1.0 / std::max(1.0, static_cast<double>(n));
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const double gnorm2 = grad.squaredNorm();
    if (std::sqrt(gnorm2) < options.gradient_tolerance) break;
    double t = step;
    Eigen::VectorXd next;
    double f_next = f;
    bool improved = false;
    for (int bt = 0; bt < 60; ++bt) {
      next = theta + t * grad;
      problem.unpack(next);
      f_next = problem.value();
      if (std::isfinite(f_next) && f_next >= f + 1e-4 * t * gnorm2) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) {
      problem.unpack(theta);
      break;
    }
    const Eigen::VectorXd grad_next = problem.gradient();
    // Barzilai-Borwein step for an ascent direction on a locally concave objective.
    const Eigen::VectorXd s = next - theta;
    const Eigen::VectorXd y = grad_next - grad;
    const double sy = s.dot(y);
    step = sy < 0.0 ? std::min(s.squaredNorm() / -sy, 1e3) : 2.0 * t;
    const double gain = f_next - f;
    theta = next;
    grad = grad_next;
    f = f_next;
    if (gain < options.relative_tolerance * std::abs(f)) {
      ++it;
      break;
    }
  }
  problem.unpack(theta);

  result.iterations = it;
  result.log_likelihood = f;
  result.gradient_norm = grad.norm();
  result.init.state = problem.state;
  result.init.params = problem.params;
  if (!result.init.state.positions.allFinite() || !std::isfinite(f)) {
    throw NumericalError("initialisation produced non-finite values");
  }

  if (spec.has_mixture()) {
    const auto fit = fit_spherical_mixture(result.init.state.positions, spec.groups, options.seed);
    result.init.params.mixture = fit.params;
    for (Eigen::Index k = 0; k < fit.params.sigma2.size(); ++k) {
      result.init.params.mixture.sigma2[k] = std::max(fit.params.sigma2[k], 1e-2);
    }
    result.init.state.allocations = fit.allocations;
  }
  if (spec.has_sociality()) {
    result.init.params.sociality_variance = 1.0;
  }
  return result;
}

}  // namespace lpm
