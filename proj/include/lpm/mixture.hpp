#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lpm/model.hpp"

namespace lpm {

// P(k_i = g | z_i) proportional to lambda_g N(z_i; mu_g, sigma2_g I).
Eigen::VectorXd allocation_probabilities(const Eigen::Ref<const Eigen::VectorXd>& z, const MixtureParams& mixture);

struct MixtureFit {
  MixtureParams params;
  std::vector<int> allocations;  // argmax responsibility
  double log_likelihood = 0.0;
  int iterations = 0;
};

// Spherical Gaussian mixture by EM (variances regularised by a weak inverse-gamma prior) with k-means++ seeded restarts.
// Deterministic given `seed`.
MixtureFit fit_spherical_mixture(const Eigen::MatrixXd& points, int groups, std::uint64_t seed = 0,
                                 int restarts = 10, int max_iterations = 500);

// Free parameters of a G-component spherical mixture in d dimensions: (G-1) + G d + G.
int spherical_mixture_parameter_count(int groups, int dim);

// -2 log L + k log n for the EM fit on `points`.
double mixture_bic(const Eigen::MatrixXd& points, int groups, std::uint64_t seed = 0);

}  // namespace lpm
