#include "lpm/mds.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "lpm/error.hpp"

namespace lpm {

MdsResult classical_mds(const Eigen::MatrixXd& distances, int dim) {
  const auto n = distances.rows();
  if (distances.cols() != n) throw DataError("distance matrix must be square");
  if (dim < 1) throw ConfigError("target dimension must be >= 1");
  if (!distances.allFinite()) throw DataError("distance matrix must be finite");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (distances(i, i) != 0.0) throw DataError("distance matrix must have a zero diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(distances(i, j) - distances(j, i)) > 1e-12 * (1.0 + std::abs(distances(i, j)))) {
        throw DataError("distance matrix must be symmetric");
      }
    }
  }

  const Eigen::MatrixXd sq = distances.array().square().matrix();
  const Eigen::VectorXd row_mean = sq.rowwise().mean();
  const double grand_mean = row_mean.mean();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      gram(i, j) = -0.5 * (sq(i, j) - row_mean[i] - row_mean[j] + grand_mean);
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  // Eigen sorts ascending.
  MdsResult out;
  out.coordinates = Eigen::MatrixXd::Zero(n, dim);
  out.eigenvalues = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < dim && k < n; ++k) {
    const auto idx = n - 1 - k;
    const double lambda = solver.eigenvalues()[idx];
    out.eigenvalues[k] = lambda;
    if (lambda > 0.0) out.coordinates.col(k) = solver.eigenvectors().col(idx) * std::sqrt(lambda);
  }
  out.stress = kruskal_stress(distances, out.coordinates);
  return out;
}

double kruskal_stress(const Eigen::MatrixXd& distances, const Eigen::MatrixXd& coordinates) {
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index i = 0; i < distances.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < distances.rows(); ++j) {
      const double fitted = (coordinates.row(i) - coordinates.row(j)).norm();
      num += (distances(i, j) - fitted) * (distances(i, j) - fitted);
      den += distances(i, j) * distances(i, j);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace lpm
