#include "lpm/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lpm/error.hpp"

namespace lpm {

namespace {

struct EmState {
  MixtureParams params;
  Eigen::MatrixXd resp;  // n x G
  double log_likelihood = -std::numeric_limits<double>::infinity();
};

double e_step(const Eigen::MatrixXd& points, const MixtureParams& params, Eigen::MatrixXd& resp) {
  const auto n = points.rows();
  const int groups = params.groups();
  double total = 0.0;
  Eigen::VectorXd logw(groups);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd z = points.row(i).transpose();
    for (int k = 0; k < groups; ++k) {
      logw[k] = params.lambda[k] > 0.0
                    ? std::log(params.lambda[k]) + log_normal_spherical(z, params.mu.row(k).transpose(), params.sigma2[k])
                    : -std::numeric_limits<double>::infinity();
    }
    const double top = logw.maxCoeff();
    const Eigen::VectorXd w = (logw.array() - top).exp();
    const double s = w.sum();
    resp.row(i) = (w / s).transpose();
    total += top + std::log(s);
  }
  return total;
}

// Variances use the posterior mode under an inverse-gamma prior with shape (d + 2) / 2
// and scale prior_scale / 2, which keeps components from collapsing onto single points.
// A zero prior_scale gives the plain maximum-likelihood update.
void m_step(const Eigen::MatrixXd& points, const Eigen::MatrixXd& resp, double variance_floor, double prior_scale,
            MixtureParams& params) {
  const auto n = static_cast<double>(points.rows());
  const auto d = static_cast<double>(points.cols());
  for (int k = 0; k < params.groups(); ++k) {
    const double nk = resp.col(k).sum();
    if (nk < 1e-10) {
      params.lambda[k] = 0.0;
      continue;
    }
    params.lambda[k] = nk / n;
    params.mu.row(k) = (resp.col(k).transpose() * points) / nk;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      ss += resp(i, k) * (points.row(i) - params.mu.row(k)).squaredNorm();
    }
    const double shape_terms = prior_scale > 0.0 ? d + 4.0 : 0.0;
    params.sigma2[k] = std::max((ss + prior_scale) / (d * nk + shape_terms), variance_floor);
  }
  params.lambda /= params.lambda.sum();
}

EmState seed_kmeanspp(const Eigen::MatrixXd& points, int groups, double base_variance, std::mt19937_64& rng) {
  const auto n = points.rows();
  EmState st;
  st.params.lambda = Eigen::VectorXd::Constant(groups, 1.0 / groups);
  st.params.mu = Eigen::MatrixXd::Zero(groups, points.cols());
  st.params.sigma2 = Eigen::VectorXd::Constant(groups, base_variance);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  st.params.mu.row(0) = points.row(pick(rng));
  Eigen::VectorXd d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (int k = 1; k < groups; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (points.row(i) - st.params.mu.row(k - 1)).squaredNorm());
    const double total = d2.sum();
    Eigen::Index chosen = pick(rng);
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    st.params.mu.row(k) = points.row(chosen);
  }
  // One hard assignment pass to set initial variances.
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, groups);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    (st.params.mu.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
    resp(i, best) = 1.0;
  }
  st.resp = resp;
  return st;
}

}  // namespace

Eigen::VectorXd allocation_probabilities(const Eigen::Ref<const Eigen::VectorXd>& z, const MixtureParams& mixture) {
  const int groups = mixture.groups();
  Eigen::VectorXd logw(groups);
  for (int k = 0; k < groups; ++k) {
    logw[k] = mixture.lambda[k] > 0.0
                  ? std::log(mixture.lambda[k]) + log_normal_spherical(z, mixture.mu.row(k).transpose(), mixture.sigma2[k])
                  : -std::numeric_limits<double>::infinity();
  }
  Eigen::VectorXd w = (logw.array() - logw.maxCoeff()).exp();
  return w / w.sum();
}

MixtureFit fit_spherical_mixture(const Eigen::MatrixXd& points, int groups, std::uint64_t seed, int restarts,
                                 int max_iterations) {
  const auto n = points.rows();
  if (groups < 1) throw ConfigError("mixture needs at least one component");
  if (n < 1) throw DataError("mixture fit needs at least one point");
  const auto d = static_cast<double>(points.cols());
  const Eigen::RowVectorXd centroid = points.colwise().mean();
  const double total_var = (points.rowwise() - centroid).squaredNorm() / (d * static_cast<double>(n));
  const double floor = std::max(total_var, 1e-12) * 1e-6;
  // One component cannot collapse, so it keeps the exact single-Gaussian fit.
  const double prior_scale =
      groups == 1 ? 0.0 : std::max(total_var, 1e-12) / std::pow(static_cast<double>(groups), 2.0 / d);
  std::mt19937_64 rng(seed);

  EmState best;
  int best_iters = 0;
  const int runs = groups == 1 ? 1 : std::max(1, restarts);
  for (int r = 0; r < runs; ++r) {
    EmState st = seed_kmeanspp(points, groups, std::max(total_var / groups, floor), rng);
    m_step(points, st.resp, floor, prior_scale, st.params);
    Eigen::MatrixXd resp(n, groups);
    double ll = -std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iterations; ++it) {
      const double next = e_step(points, st.params, resp);
      m_step(points, resp, floor, prior_scale, st.params);
      const bool done = std::abs(next - ll) < 1e-10 * (1.0 + std::abs(next));
      ll = next;
      if (done) break;
    }
    st.log_likelihood = e_step(points, st.params, resp);
    st.resp = resp;
    if (st.log_likelihood > best.log_likelihood) {
      best = std::move(st);
      best_iters = it;
    }
  }

  MixtureFit fit;
  fit.params = best.params;
  // Components that emptied out keep a tiny weight so downstream densities stay finite.
  for (int k = 0; k < groups; ++k) fit.params.lambda[k] = std::max(fit.params.lambda[k], 1e-12);
  fit.params.lambda /= fit.params.lambda.sum();
  fit.log_likelihood = best.log_likelihood;
  fit.iterations = best_iters;
  fit.allocations.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index k = 0;
    best.resp.row(i).maxCoeff(&k);
    fit.allocations[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  return fit;
}

int spherical_mixture_parameter_count(int groups, int dim) { return (groups - 1) + groups * dim + groups; }

double mixture_bic(const Eigen::MatrixXd& points, int groups, std::uint64_t seed) {
  const auto fit = fit_spherical_mixture(points, groups, seed);
  const int k = spherical_mixture_parameter_count(groups, static_cast<int>(points.cols()));
  return -2.0 * fit.log_likelihood + k * std::log(static_cast<double>(points.rows()));
}

}  // namespace lpm
