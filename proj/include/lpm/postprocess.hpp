#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lpm/inference.hpp"

namespace lpm {

struct AlignmentResult {
  Eigen::MatrixXd rotation;     // d x d orthogonal O; aligned rows are a_i' = O^T a_i + t
  Eigen::VectorXd translation;  // zero when translation is disallowed
  double r2 = 0.0;              // Procrustes sum of squares after the transform
  Eigen::MatrixXd aligned;      // transformed copy of A
};

// Orthogonal Procrustes over the full orthogonal group (reflections included),
// optionally with translation. Throws DataError on shape mismatch or n < d.
AlignmentResult procrustes_align(const Eigen::MatrixXd& a, const Eigen::MatrixXd& reference, bool allow_translation);

// Replaces every draw's positions by their image aligned to `reference`. Sociality
// effects and global parameters are untouched.
PosteriorSample align_sample(const PosteriorSample& sample, const Eigen::MatrixXd& reference, bool allow_translation);

// Aligns against the MAP draw, with translation unless the model is a projection model.
PosteriorSample align_sample(const PosteriorSample& sample);

struct PositionSummary {
  LatentState mean;         // coordinate-wise posterior mean; mean node effects when present
  Eigen::MatrixXd sd;       // coordinate-wise posterior standard deviation
  Eigen::VectorXd sender_sd;
  Eigen::VectorXd receiver_sd;
};

// Expects an aligned sample. Throws DataError when empty.
LatentState posterior_mean_positions(const PosteriorSample& aligned);
PositionSummary summarize_positions(const PosteriorSample& aligned);

// Posterior means of alpha, beta, beta1 and sociality variance, mixture left default.
GlobalParams posterior_mean_params(const PosteriorSample& sample);

struct ClusterSummary {
  Eigen::MatrixXd coallocation;  // fraction of draws in which i and j share a component
  std::vector<int> partition;    // complete-linkage cut at 0.5, labels in first-appearance order
};

// Throws DataError when draws carry no allocations.
ClusterSummary cluster_summary(const PosteriorSample& sample);

// Hard partition from a similarity matrix: agglomerate while the complete-linkage
// distance (1 - similarity) is below `cut`.
std::vector<int> complete_linkage_partition(const Eigen::MatrixXd& similarity, double cut = 0.5);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace lpm
