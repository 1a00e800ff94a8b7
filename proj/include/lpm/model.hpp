#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lpm/network.hpp"

namespace lpm {

enum class Variant {
  distance,    // alpha + beta'x - beta1 |z_i - z_j|
  projection,  // alpha + beta'x + z_i'z_j / |z_j|
  cluster,     // distance kernel, mixture-of-Gaussians position prior
  cluster_re,  // cluster plus per-node sociality effects
};

Variant parse_variant(const std::string& name);
const char* to_string(Variant v);

struct ModelSpec {
  Variant variant = Variant::distance;
  int dim = 2;
  int groups = 0;           // mixture components; required >= 1 for cluster variants
  bool free_scale = false;  // sample the distance coefficient beta1 instead of fixing it at 1
  int covariates = 0;

  bool has_mixture() const noexcept { return variant == Variant::cluster || variant == Variant::cluster_re; }
  bool has_sociality() const noexcept { return variant == Variant::cluster_re; }
  bool translation_invariant() const noexcept { return variant != Variant::projection; }

  // Throws ConfigError.
  void validate() const;
};

struct MixtureParams {
  Eigen::VectorXd lambda;  // G weights summing to one
  Eigen::MatrixXd mu;      // G x d centers
  Eigen::VectorXd sigma2;  // G spherical variances

  int groups() const noexcept { return static_cast<int>(lambda.size()); }
  void validate() const;
};

struct GlobalParams {
  double alpha = 0.0;
  Eigen::VectorXd beta;  // covariate coefficients, length p
  double beta1 = 1.0;
  MixtureParams mixture;
  double sociality_variance = 1.0;
};

struct LatentState {
  Eigen::MatrixXd positions;       // n x d
  std::vector<int> allocations;    // per-node component, mixture variants only
  Eigen::VectorXd sender;          // per-node effect; the single symmetric effect when undirected
  Eigen::VectorXd receiver;        // directed networks only

  std::size_t nodes() const noexcept { return static_cast<std::size_t>(positions.rows()); }
  int dim() const noexcept { return static_cast<int>(positions.cols()); }
  bool has_sociality() const noexcept { return sender.size() > 0; }
};

struct PriorSpec {
  double position_variance = 1.0;        // z_i ~ N(0, s I) when no mixture
  double theta_variance = 10.0;          // alpha, beta_k ~ N(0, s); beta1 ~ half-N(0, s)
  double dirichlet_concentration = 3.0;  // lambda ~ Dirichlet(c, ..., c)
  double center_variance = 10.0;         // mu_g ~ N(0, s I)
  double cluster_var_shape = 2.0;        // sigma2_g ~ InvGamma(shape, scale)
  double cluster_var_scale = 1.0;
  double sociality_var_shape = 2.0;      // sociality variance ~ InvGamma(shape, scale)
  double sociality_var_scale = 1.0;

  void validate() const;
};

// Numerically stable log(1 + exp(x)).
double log1p_exp(double x) noexcept;

// Logistic function, stable for large |eta|.
double edge_probability(double eta) noexcept;

// y * eta - log(1 + exp(eta)).
inline double dyad_log_mass(bool y, double eta) noexcept { return (y ? eta : 0.0) - log1p_exp(eta); }

// Distance kernel. Adds sender/receiver effects when the state carries them.
double eta_distance(std::size_t i, std::size_t j, const LatentState& state, const GlobalParams& params,
                    const DyadCovariates* x = nullptr);

// Projection kernel. Throws NumericalError when z_j is at the origin.
double eta_projection(std::size_t i, std::size_t j, const LatentState& state, const GlobalParams& params,
                      const DyadCovariates* x = nullptr);

// Dispatches on the variant.
double eta(const ModelSpec& spec, std::size_t i, std::size_t j, const LatentState& state,
           const GlobalParams& params, const DyadCovariates* x = nullptr);

// Sum over dyads (i < j undirected, all i != j directed) of y eta - log(1 + exp(eta)).
double log_likelihood(const Network& g, const ModelSpec& spec, const LatentState& state,
                      const GlobalParams& params, const DyadCovariates* x = nullptr);

// log sum_g lambda_g N(z; mu_g, sigma2_g I).
double mixture_log_density(const Eigen::Ref<const Eigen::VectorXd>& z, const MixtureParams& mixture);

double log_normal_spherical(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::Ref<const Eigen::VectorXd>& mean,
                            double variance);

double log_inverse_gamma(double x, double shape, double scale);

// Log prior density of one node's position under the spec (plain Gaussian or mixture).
double log_position_prior(const Eigen::Ref<const Eigen::VectorXd>& z, const ModelSpec& spec,
                          const GlobalParams& params, const PriorSpec& prior);

// Prior of the global scalars alpha, beta and (when free) beta1.
double log_global_prior(const ModelSpec& spec, const GlobalParams& params, const PriorSpec& prior);

// Dirichlet, center and variance hyperpriors of the mixture.
double log_mixture_hyperprior(const MixtureParams& mixture, const PriorSpec& prior);

// Node effects given their variance, plus the variance's own inverse-gamma prior.
double log_sociality_prior(const LatentState& state, const GlobalParams& params, const PriorSpec& prior);

// Positions are marginal over allocations when a mixture is active.
double log_prior(const LatentState& state, const GlobalParams& params, const PriorSpec& prior,
                 const ModelSpec& spec);

double log_posterior(const Network& g, const LatentState& state, const GlobalParams& params,
                     const PriorSpec& prior, const ModelSpec& spec, const DyadCovariates* x = nullptr);

// Gradient with respect to positions, alpha, beta and node effects. Mixture
// hyperparameters and beta1 are held fixed.
struct Gradient {
  Eigen::MatrixXd positions;
  double alpha = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd sender;
  Eigen::VectorXd receiver;

  double squared_norm() const;
};

Gradient log_likelihood_gradient(const Network& g, const ModelSpec& spec, const LatentState& state,
                                 const GlobalParams& params, const DyadCovariates* x = nullptr);

Gradient log_posterior_gradient(const Network& g, const LatentState& state, const GlobalParams& params,
                                const PriorSpec& prior, const ModelSpec& spec, const DyadCovariates* x = nullptr);

// Checks that state and params agree with the spec and network size. Throws ConfigError.
void check_consistent(const Network& g, const ModelSpec& spec, const LatentState& state,
                      const GlobalParams& params, const DyadCovariates* x = nullptr);

}  // namespace lpm
