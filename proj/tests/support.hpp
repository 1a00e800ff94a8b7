#pragma once

// Independent oracles and generators shared by the unit and acceptance tests.
// Nothing here calls the library's kernels, so agreement is a real check.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lpm/model.hpp"
#include "lpm/network.hpp"

namespace lpm_test {

using Rng = std::mt19937_64;

inline double gauss(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }
inline double unif(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline lpm::Network random_graph(std::size_t n, bool directed, double p, Rng& rng) {
  std::vector<lpm::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = directed ? 0 : i + 1; j < n; ++j) {
      if (i != j && unif(rng) < p) edges.emplace_back(i, j);
    }
  }
  return lpm::Network(n, directed, edges);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double sd = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = sd * gauss(rng);
  return m;
}

// Haar-ish orthogonal matrix from the QR of a Gaussian matrix, with sign fix.
inline Eigen::MatrixXd random_orthogonal(int d, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(d, d, rng));
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR();
  for (int k = 0; k < d; ++k)
    if (r(k, k) < 0) q.col(k) *= -1.0;
  return q;
}

inline Eigen::MatrixXd rotation2(double theta) {
  Eigen::MatrixXd o(2, 2);
  o << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return o;
}

struct Instance {
  lpm::ModelSpec spec;
  lpm::LatentState state;
  lpm::GlobalParams params;
};

// Random state and parameters consistent with `spec` on an n-node network.
inline Instance random_instance(const lpm::ModelSpec& spec, std::size_t n, bool directed, Rng& rng) {
  Instance out;
  out.spec = spec;
  const auto nn = static_cast<Eigen::Index>(n);
  out.state.positions = random_matrix(nn, spec.dim, rng);
  out.params.alpha = gauss(rng);
  out.params.beta = Eigen::VectorXd(spec.covariates);
  for (int k = 0; k < spec.covariates; ++k) out.params.beta[k] = 0.5 * gauss(rng);
  out.params.beta1 = spec.free_scale ? 0.5 + unif(rng) : 1.0;
  if (spec.has_mixture()) {
    const int G = spec.groups;
    auto& m = out.params.mixture;
    m.lambda = Eigen::VectorXd(G);
    for (int g = 0; g < G; ++g) m.lambda[g] = 0.5 + unif(rng);
    m.lambda /= m.lambda.sum();
    m.mu = random_matrix(G, spec.dim, rng, 1.5);
    m.sigma2 = Eigen::VectorXd(G);
    for (int g = 0; g < G; ++g) m.sigma2[g] = 0.3 + unif(rng);
    out.state.allocations.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.state.allocations[i] = static_cast<int>(i % static_cast<std::size_t>(G));
  }
  if (spec.has_sociality()) {
    out.params.sociality_variance = 0.5 + unif(rng);
    out.state.sender = random_matrix(nn, 1, rng, 0.7).col(0);
    if (directed) out.state.receiver = random_matrix(nn, 1, rng, 0.7).col(0);
  }
  return out;
}

inline lpm::DyadCovariates random_covariates(std::size_t n, int p, bool symmetric, Rng& rng) {
  std::vector<Eigen::MatrixXd> xs;
  for (int k = 0; k < p; ++k) {
    Eigen::MatrixXd m = random_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), rng);
    if (symmetric) m = (0.5 * (m + m.transpose())).eval();
    xs.push_back(m);
  }
  return lpm::DyadCovariates(xs, symmetric);
}

// Linear predictor written out from the model definition.
inline double oracle_eta(const Instance& in, std::size_t i, std::size_t j, bool directed,
                         const lpm::DyadCovariates* x = nullptr) {
  const auto& z = in.state.positions;
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
  double e = in.params.alpha;
  for (int k = 0; k < in.spec.covariates; ++k) e += in.params.beta[k] * x->value(i, j, static_cast<std::size_t>(k));
  if (in.spec.variant == lpm::Variant::projection) {
    double dot = 0.0, nj = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      dot += z(ii, c) * z(jj, c);
      nj += z(jj, c) * z(jj, c);
    }
    e += dot / std::sqrt(nj);
  } else {
    double d2 = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) d2 += (z(ii, c) - z(jj, c)) * (z(ii, c) - z(jj, c));
    e -= in.params.beta1 * std::sqrt(d2);
  }
  if (in.state.sender.size() > 0) {
    e += in.state.sender[ii];
    e += directed ? in.state.receiver[jj] : in.state.sender[jj];
  }
  return e;
}

// Product of Bernoulli masses, one dyad at a time.
inline double oracle_loglik(const lpm::Network& g, const Instance& in, const lpm::DyadCovariates* x = nullptr) {
  double ll = 0.0;
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || (!g.directed() && j < i)) continue;
      const double p = 1.0 / (1.0 + std::exp(-oracle_eta(in, i, j, g.directed(), x)));
      ll += g.edge(i, j) ? std::log(p) : std::log1p(-p);
    }
  }
  return ll;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix, eigenvalues ascending with
// matching eigenvector columns.
struct Eigen_ {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

inline Eigen_ jacobi_eigen(Eigen::MatrixXd a, int sweeps = 100) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-28) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = 0.5 * (a(q, q) - a(p, p)) / a(p, q);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  Eigen_ out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Standard error of the mean of a correlated series by non-overlapping batch means.
inline double batch_means_se(const std::vector<double>& v, std::size_t batches = 50) {
  const std::size_t len = v.size() / batches;
  std::vector<double> bm;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < len; ++k) s += v[b * len + k];
    bm.push_back(s / static_cast<double>(len));
  }
  const double m = mean(bm);
  double ss = 0.0;
  for (double x : bm) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Upper-triangle Euclidean distances, row-major order.
inline std::vector<double> pairwise_distances(const Eigen::MatrixXd& z) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = i + 1; j < z.rows(); ++j) out.push_back((z.row(i) - z.row(j)).norm());
  return out;
}

}  // namespace lpm_test
