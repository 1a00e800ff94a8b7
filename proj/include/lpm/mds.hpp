#pragma once

#include <Eigen/Dense>

namespace lpm {

struct MdsResult {
  Eigen::MatrixXd coordinates;  // n x d
  Eigen::VectorXd eigenvalues;  // top-d eigenvalues of the centered Gram matrix, descending, unclamped
  double stress = 0.0;          // Kruskal stress-1 of the embedding against the input distances
};

// Classical (Torgerson) scaling: B = -1/2 J D^2 J, coordinates from the top-d
// eigenpairs with negative eigenvalues truncated at zero. Dimensions beyond the
// positive spectrum come out as zero columns.
MdsResult classical_mds(const Eigen::MatrixXd& distances, int dim);

// sqrt( sum_{i<j} (D_ij - |x_i - x_j|)^2 / sum_{i<j} D_ij^2 ).
double kruskal_stress(const Eigen::MatrixXd& distances, const Eigen::MatrixXd& coordinates);

}  // namespace lpm
