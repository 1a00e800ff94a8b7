#include "lpm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lpm/error.hpp"

namespace lpm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double covariate_term(std::size_t i, std::size_t j, const GlobalParams& params, const DyadCovariates* x) {
  const auto p = static_cast<std::size_t>(params.beta.size());
  if (x == nullptr) {
    if (p != 0) throw ConfigError("covariate coefficients given without covariates");
    return 0.0;
  }
  if (x->count() != p) throw ConfigError("covariate count does not match coefficient length");
  double s = 0.0;
  for (std::size_t k = 0; k < p; ++k) s += params.beta[static_cast<Eigen::Index>(k)] * x->value(i, j, k);
  return s;
}

double sociality_term(std::size_t i, std::size_t j, const LatentState& state) {
  if (!state.has_sociality()) return 0.0;
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  return state.sender[a] + (state.receiver.size() > 0 ? state.receiver[b] : state.sender[b]);
}

void check_dyad(std::size_t i, std::size_t j, const LatentState& state) {
  if (i == j) throw DataError("dyad (i,i) is not defined");
  if (i >= state.nodes() || j >= state.nodes()) throw DataError("node index out of range");
}

// Dyads carrying an edge variable: i < j when undirected, i != j when directed.
template <typename F>
void for_each_dyad(std::size_t n, bool directed, F&& f) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = directed ? 0 : i + 1; j < n; ++j) {
      if (i != j) f(i, j);
    }
  }
}

}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "distance") return Variant::distance;
  if (name == "projection") return Variant::projection;
  if (name == "lpcm" || name == "cluster") return Variant::cluster;
  if (name == "lpcmre" || name == "cluster_re") return Variant::cluster_re;
  throw ConfigError("unknown model variant '" + name + "'");
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::distance: return "distance";
    case Variant::projection: return "projection";
    case Variant::cluster: return "lpcm";
    case Variant::cluster_re: return "lpcmre";
  }
  return "unknown";
}

void ModelSpec::validate() const {
  if (dim < 1) throw ConfigError("latent dimension must be >= 1");
  if (covariates < 0) throw ConfigError("covariate count must be >= 0");
  if (has_mixture() && groups < 1) throw ConfigError("cluster models need groups >= 1");
  if (!has_mixture() && groups != 0) throw ConfigError("groups is only valid for cluster models");
  if (free_scale && variant == Variant::projection) throw ConfigError("free_scale applies to distance kernels only");
}

void MixtureParams::validate() const {
  const auto g = lambda.size();
  if (g < 1) throw ConfigError("mixture needs at least one component");
  if (mu.rows() != g || sigma2.size() != g) throw ConfigError("mixture parameter sizes disagree");
  if ((lambda.array() < 0.0).any() || std::abs(lambda.sum() - 1.0) > 1e-12) {
    throw ConfigError("mixture weights must be a probability vector");
  }
  if ((sigma2.array() <= 0.0).any()) throw ConfigError("mixture variances must be positive");
}

void PriorSpec::validate() const {
  for (double v : {position_variance, theta_variance, center_variance, cluster_var_shape, cluster_var_scale,
                   sociality_var_shape, sociality_var_scale}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("prior variances and shapes must be positive");
  }
  if (!(dirichlet_concentration > 0.0)) throw ConfigError("Dirichlet concentration must be positive");
}

double log1p_exp(double x) noexcept {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double edge_probability(double eta) noexcept {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double eta_distance(std::size_t i, std::size_t j, const LatentState& state, const GlobalParams& params,
                    const DyadCovariates* x) {
  check_dyad(i, j, state);
  const double dist = (state.positions.row(static_cast<Eigen::Index>(i)) -
                       state.positions.row(static_cast<Eigen::Index>(j))).norm();
  return params.alpha + covariate_term(i, j, params, x) - params.beta1 * dist + sociality_term(i, j, state);
}

double eta_projection(std::size_t i, std::size_t j, const LatentState& state, const GlobalParams& params,
                      const DyadCovariates* x) {
  check_dyad(i, j, state);
  const auto zi = state.positions.row(static_cast<Eigen::Index>(i));
  const auto zj = state.positions.row(static_cast<Eigen::Index>(j));
  const double norm_j = zj.norm();
  if (!(norm_j > 0.0)) throw NumericalError("projection direction undefined: z_j is at the origin");
  return params.alpha + covariate_term(i, j, params, x) + zi.dot(zj) / norm_j + sociality_term(i, j, state);
}

double eta(const ModelSpec& spec, std::size_t i, std::size_t j, const LatentState& state,
           const GlobalParams& params, const DyadCovariates* x) {
  return spec.variant == Variant::projection ? eta_projection(i, j, state, params, x)
                                             : eta_distance(i, j, state, params, x);
}

double log_likelihood(const Network& g, const ModelSpec& spec, const LatentState& state,
                      const GlobalParams& params, const DyadCovariates* x) {
  if (state.nodes() != g.size()) throw ConfigError("state size does not match network");
  double total = 0.0;
  for_each_dyad(g.size(), g.directed(), [&](std::size_t i, std::size_t j) {
    total += dyad_log_mass(g.edge_unchecked(i, j), eta(spec, i, j, state, params, x));
  });
  return total;
}

double log_normal_spherical(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::Ref<const Eigen::VectorXd>& mean,
                            double variance) {
  if (!(variance > 0.0)) throw NumericalError("normal variance must be positive");
  const double d = static_cast<double>(z.size());
  return -0.5 * d * (kLog2Pi + std::log(variance)) - 0.5 * (z - mean).squaredNorm() / variance;
}

double log_inverse_gamma(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double mixture_log_density(const Eigen::Ref<const Eigen::VectorXd>& z, const MixtureParams& mixture) {
  const int groups = mixture.groups();
  if (groups < 1) throw ConfigError("mixture needs at least one component");
  std::vector<double> terms(static_cast<std::size_t>(groups));
  double top = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < groups; ++k) {
    const double w = mixture.lambda[k];
    terms[static_cast<std::size_t>(k)] =
        w > 0.0 ? std::log(w) + log_normal_spherical(z, mixture.mu.row(k).transpose(), mixture.sigma2[k])
                : -std::numeric_limits<double>::infinity();
    top = std::max(top, terms[static_cast<std::size_t>(k)]);
  }
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s);
}

double log_position_prior(const Eigen::Ref<const Eigen::VectorXd>& z, const ModelSpec& spec,
                          const GlobalParams& params, const PriorSpec& prior) {
  if (spec.has_mixture()) return mixture_log_density(z, params.mixture);
  return log_normal_spherical(z, Eigen::VectorXd::Zero(z.size()), prior.position_variance);
}

double log_global_prior(const ModelSpec& spec, const GlobalParams& params, const PriorSpec& prior) {
  const double s = prior.theta_variance;
  double lp = -0.5 * (kLog2Pi + std::log(s)) - 0.5 * params.alpha * params.alpha / s;
  for (Eigen::Index k = 0; k < params.beta.size(); ++k) {
    lp += -0.5 * (kLog2Pi + std::log(s)) - 0.5 * params.beta[k] * params.beta[k] / s;
  }
  if (spec.free_scale) {
    if (!(params.beta1 > 0.0)) return -std::numeric_limits<double>::infinity();
    lp += std::numbers::ln2 - 0.5 * (kLog2Pi + std::log(s)) - 0.5 * params.beta1 * params.beta1 / s;
  }
  return lp;
}

double log_mixture_hyperprior(const MixtureParams& mixture, const PriorSpec& prior) {
  const int groups = mixture.groups();
  const double c = prior.dirichlet_concentration;
  double lp = std::lgamma(groups * c) - groups * std::lgamma(c);
  for (int k = 0; k < groups; ++k) {
    if (c != 1.0) lp += (c - 1.0) * std::log(mixture.lambda[k]);
    lp += log_normal_spherical(mixture.mu.row(k).transpose(), Eigen::VectorXd::Zero(mixture.mu.cols()),
                               prior.center_variance);
    if (!(mixture.sigma2[k] > 0.0)) throw NumericalError("mixture variances must be positive");
    lp += log_inverse_gamma(mixture.sigma2[k], prior.cluster_var_shape, prior.cluster_var_scale);
  }
  return lp;
}

double log_sociality_prior(const LatentState& state, const GlobalParams& params, const PriorSpec& prior) {
  const double v = params.sociality_variance;
  if (!(v > 0.0)) throw NumericalError("sociality variance must be positive");
  const double per_effect = -0.5 * (kLog2Pi + std::log(v));
  double lp = log_inverse_gamma(v, prior.sociality_var_shape, prior.sociality_var_scale);
  lp += static_cast<double>(state.sender.size()) * per_effect - 0.5 * state.sender.squaredNorm() / v;
  lp += static_cast<double>(state.receiver.size()) * per_effect - 0.5 * state.receiver.squaredNorm() / v;
  return lp;
}

double log_prior(const LatentState& state, const GlobalParams& params, const PriorSpec& prior,
                 const ModelSpec& spec) {
  prior.validate();
  if (state.dim() != spec.dim) throw ConfigError("state dimension does not match spec");
  double lp = 0.0;
  if (spec.has_mixture()) params.mixture.validate();
  for (Eigen::Index i = 0; i < state.positions.rows(); ++i) {
    lp += log_position_prior(state.positions.row(i).transpose(), spec, params, prior);
  }
  lp += log_global_prior(spec, params, prior);
  if (spec.has_mixture()) lp += log_mixture_hyperprior(params.mixture, prior);
  if (spec.has_sociality()) lp += log_sociality_prior(state, params, prior);
  return lp;
}

double log_posterior(const Network& g, const LatentState& state, const GlobalParams& params,
                     const PriorSpec& prior, const ModelSpec& spec, const DyadCovariates* x) {
  return log_likelihood(g, spec, state, params, x) + log_prior(state, params, prior, spec);
}

double Gradient::squared_norm() const {
  return positions.squaredNorm() + alpha * alpha + beta.squaredNorm() + sender.squaredNorm() +
         receiver.squaredNorm();
}

Gradient log_likelihood_gradient(const Network& g, const ModelSpec& spec, const LatentState& state,
                                 const GlobalParams& params, const DyadCovariates* x) {
  const auto n = g.size();
  if (state.nodes() != n) throw ConfigError("state size does not match network");
  Gradient grad;
  grad.positions = Eigen::MatrixXd::Zero(state.positions.rows(), state.positions.cols());
  grad.beta = Eigen::VectorXd::Zero(params.beta.size());
  grad.sender = Eigen::VectorXd::Zero(state.sender.size());
  grad.receiver = Eigen::VectorXd::Zero(state.receiver.size());
  const bool projection = spec.variant == Variant::projection;
  for_each_dyad(n, g.directed(), [&](std::size_t i, std::size_t j) {
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    const double e = eta(spec, i, j, state, params, x);
    const double resid = (g.edge_unchecked(i, j) ? 1.0 : 0.0) - edge_probability(e);
    grad.alpha += resid;
    for (Eigen::Index k = 0; k < grad.beta.size(); ++k) grad.beta[k] += resid * x->value(i, j, static_cast<std::size_t>(k));
    if (projection) {
      const Eigen::RowVectorXd zi = state.positions.row(a);
      const Eigen::RowVectorXd zj = state.positions.row(b);
      const double nj = zj.norm();
      grad.positions.row(a) += resid * zj / nj;
      grad.positions.row(b) += resid * (zi / nj - zi.dot(zj) * zj / (nj * nj * nj));
    } else {
      const Eigen::RowVectorXd diff = state.positions.row(a) - state.positions.row(b);
      const double dist = diff.norm();
      if (dist > 0.0) {
        grad.positions.row(a) -= resid * params.beta1 * diff / dist;
        grad.positions.row(b) += resid * params.beta1 * diff / dist;
      }
    }
    if (state.has_sociality()) {
      grad.sender[a] += resid;
      if (grad.receiver.size() > 0) grad.receiver[b] += resid;
      else grad.sender[b] += resid;
    }
  });
  return grad;
}

Gradient log_posterior_gradient(const Network& g, const LatentState& state, const GlobalParams& params,
                                const PriorSpec& prior, const ModelSpec& spec, const DyadCovariates* x) {
  Gradient grad = log_likelihood_gradient(g, spec, state, params, x);
  const double s = prior.theta_variance;
  grad.alpha -= params.alpha / s;
  grad.beta -= params.beta / s;
  for (Eigen::Index i = 0; i < state.positions.rows(); ++i) {
    const Eigen::VectorXd z = state.positions.row(i).transpose();
    if (spec.has_mixture()) {
      const auto& mix = params.mixture;
      Eigen::VectorXd logw(mix.groups());
      for (int k = 0; k < mix.groups(); ++k) {
        logw[k] = std::log(mix.lambda[k]) + log_normal_spherical(z, mix.mu.row(k).transpose(), mix.sigma2[k]);
      }
      const Eigen::VectorXd w = (logw.array() - logw.maxCoeff()).exp();
      const double total = w.sum();
      for (int k = 0; k < mix.groups(); ++k) {
        grad.positions.row(i) -= (w[k] / total) * (z - mix.mu.row(k).transpose()).transpose() / mix.sigma2[k];
      }
    } else {
      grad.positions.row(i) -= z.transpose() / prior.position_variance;
    }
  }
  if (spec.has_sociality()) {
    grad.sender -= state.sender / params.sociality_variance;
    grad.receiver -= state.receiver / params.sociality_variance;
  }
  return grad;
}

void check_consistent(const Network& g, const ModelSpec& spec, const LatentState& state,
                      const GlobalParams& params, const DyadCovariates* x) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(g.size());
  if (state.positions.rows() != n) throw ConfigError("position matrix must have one row per node");
  if (state.positions.cols() != spec.dim) throw ConfigError("position matrix width must equal the latent dimension");
  if (!state.positions.allFinite()) throw NumericalError("positions must be finite");
  const auto p = x ? static_cast<Eigen::Index>(x->count()) : 0;
  if (params.beta.size() != p) throw ConfigError("covariate coefficient length mismatch");
  if (spec.covariates != p) throw ConfigError("spec covariate count does not match covariates");
  if (x && x->nodes() != g.size()) throw ConfigError("covariates cover a different number of nodes");
  if (spec.has_mixture()) {
    params.mixture.validate();
    if (params.mixture.groups() != spec.groups) throw ConfigError("mixture component count mismatch");
    if (params.mixture.mu.cols() != spec.dim) throw ConfigError("mixture center dimension mismatch");
    if (state.allocations.size() != g.size()) throw ConfigError("allocations must cover every node");
    for (int k : state.allocations) {
      if (k < 0 || k >= spec.groups) throw ConfigError("allocation label out of range");
    }
  } else if (!state.allocations.empty()) {
    throw ConfigError("allocations present without a mixture model");
  }
  if (spec.has_sociality()) {
    if (state.sender.size() != n) throw ConfigError("sociality effects must cover every node");
    if (g.directed() != (state.receiver.size() == n)) throw ConfigError("receiver effects required iff directed");
    if (!(params.sociality_variance > 0.0)) throw NumericalError("sociality variance must be positive");
  } else if (state.has_sociality()) {
    throw ConfigError("sociality effects present without a random-effects model");
  }
  if (!spec.free_scale && params.beta1 != 1.0) throw ConfigError("beta1 must be 1 unless free_scale is set");
  if (spec.free_scale && !(params.beta1 > 0.0)) throw ConfigError("beta1 must be positive");
}

}  // namespace lpm
