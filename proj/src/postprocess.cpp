#include "lpm/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/SVD>

#include "lpm/error.hpp"

namespace lpm {

AlignmentResult procrustes_align(const Eigen::MatrixXd& a, const Eigen::MatrixXd& reference, bool allow_translation) {
  if (a.rows() != reference.rows() || a.cols() != reference.cols()) {
    throw DataError("Procrustes inputs must have the same shape");
  }
  const auto n = a.rows();
  const auto d = a.cols();
  if (n < d) throw DataError("Procrustes alignment needs at least d points");

  Eigen::RowVectorXd a_mean = Eigen::RowVectorXd::Zero(d);
  Eigen::RowVectorXd b_mean = Eigen::RowVectorXd::Zero(d);
  if (allow_translation) {
    a_mean = a.colwise().mean();
    b_mean = reference.colwise().mean();
  }
  const Eigen::MatrixXd ac = a.rowwise() - a_mean;
  const Eigen::MatrixXd bc = reference.rowwise() - b_mean;

  // min |Bc - Ac O|_F over orthogonal O is attained at O = U V^T for Ac^T Bc = U S V^T.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ac.transpose() * bc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  AlignmentResult out;
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  out.translation = (b_mean - a_mean * out.rotation).transpose();
  out.aligned = (a * out.rotation).rowwise() + out.translation.transpose();
  out.r2 = (reference - out.aligned).squaredNorm();
  return out;
}

PosteriorSample align_sample(const PosteriorSample& sample, const Eigen::MatrixXd& reference, bool allow_translation) {
  PosteriorSample out = sample;
  for (auto& draw : out.draws) {
    draw.state.positions = procrustes_align(draw.state.positions, reference, allow_translation).aligned;
  }
  return out;
}

PosteriorSample align_sample(const PosteriorSample& sample) {
  const auto ref = sample.draws.at(sample.map_index()).state.positions;
  return align_sample(sample, ref, sample.spec.translation_invariant());
}

LatentState posterior_mean_positions(const PosteriorSample& aligned) { return summarize_positions(aligned).mean; }

PositionSummary summarize_positions(const PosteriorSample& aligned) {
  if (aligned.draws.empty()) throw DataError("posterior sample is empty");
  const auto& first = aligned.draws.front().state;
  const double m = static_cast<double>(aligned.draws.size());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(first.positions.rows(), first.positions.cols());
  Eigen::MatrixXd sumsq = sum;
  Eigen::VectorXd s_sum = Eigen::VectorXd::Zero(first.sender.size()), s_sq = s_sum;
  Eigen::VectorXd r_sum = Eigen::VectorXd::Zero(first.receiver.size()), r_sq = r_sum;
  for (const auto& draw : aligned.draws) {
    sum += draw.state.positions;
    sumsq += draw.state.positions.array().square().matrix();
    s_sum += draw.state.sender;
    s_sq += draw.state.sender.array().square().matrix();
    r_sum += draw.state.receiver;
    r_sq += draw.state.receiver.array().square().matrix();
  }
  auto sd_of = [m](const auto& s, const auto& sq) {
    return ((sq.array() / m - (s.array() / m).square()).max(0.0).sqrt()).matrix().eval();
  };
  PositionSummary out;
  out.mean.positions = sum / m;
  out.mean.sender = s_sum / m;
  out.mean.receiver = r_sum / m;
  out.sd = sd_of(sum, sumsq);
  out.sender_sd = sd_of(s_sum, s_sq);
  out.receiver_sd = sd_of(r_sum, r_sq);
  return out;
}

GlobalParams posterior_mean_params(const PosteriorSample& sample) {
  if (sample.draws.empty()) throw DataError("posterior sample is empty");
  GlobalParams mean;
  mean.alpha = 0.0;
  mean.beta = Eigen::VectorXd::Zero(sample.draws.front().params.beta.size());
  mean.beta1 = 0.0;
  mean.sociality_variance = 0.0;
  for (const auto& draw : sample.draws) {
    mean.alpha += draw.params.alpha;
    mean.beta += draw.params.beta;
    mean.beta1 += draw.params.beta1;
    mean.sociality_variance += draw.params.sociality_variance;
  }
  const double m = static_cast<double>(sample.draws.size());
  mean.alpha /= m;
  mean.beta /= m;
  mean.beta1 /= m;
  mean.sociality_variance /= m;
  if (!sample.spec.free_scale) mean.beta1 = 1.0;
  return mean;
}

std::vector<int> complete_linkage_partition(const Eigen::MatrixXd& similarity, double cut) {
  const auto n = similarity.rows();
  // Lance-Williams update for complete linkage: d(a+b, c) = max(d(a,c), d(b,c)).
  Eigen::MatrixXd dist = (1.0 - similarity.array()).matrix();
  std::vector<bool> active(static_cast<std::size_t>(n), true);
  std::vector<int> owner(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) owner[static_cast<std::size_t>(i)] = static_cast<int>(i);
  while (true) {
    double best = cut;
    Eigen::Index ba = -1, bb = -1;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (!active[static_cast<std::size_t>(a)]) continue;
      for (Eigen::Index b = a + 1; b < n; ++b) {
        if (active[static_cast<std::size_t>(b)] && dist(a, b) < best) {
          best = dist(a, b);
          ba = a;
          bb = b;
        }
      }
    }
    if (ba < 0) break;
    for (Eigen::Index c = 0; c < n; ++c) {
      dist(ba, c) = dist(c, ba) = std::max(dist(ba, c), dist(bb, c));
    }
    active[static_cast<std::size_t>(bb)] = false;
    for (auto& o : owner) {
      if (o == static_cast<int>(bb)) o = static_cast<int>(ba);
    }
  }
  std::map<int, int> relabel;
  std::vector<int> out(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto [it, inserted] = relabel.emplace(owner[i], static_cast<int>(relabel.size()));
    out[i] = it->second;
  }
  return out;
}

ClusterSummary cluster_summary(const PosteriorSample& sample) {
  if (sample.draws.empty()) throw DataError("posterior sample is empty");
  const auto n = sample.draws.front().state.nodes();
  Eigen::MatrixXd co = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& draw : sample.draws) {
    const auto& alloc = draw.state.allocations;
    if (alloc.size() != n) throw DataError("posterior draws carry no cluster allocations");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (alloc[i] == alloc[j]) co(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 1.0;
      }
    }
  }
  ClusterSummary out;
  out.coallocation = co / static_cast<double>(sample.draws.size());
  out.partition = complete_linkage_partition(out.coallocation, 0.5);
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DataError("partitions must cover the same items");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [k, v] : joint) index += choose2(v);
  for (const auto& [k, v] : ra) sa += choose2(v);
  for (const auto& [k, v] : rb) sb += choose2(v);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sa * sb / total : 0.0;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace lpm
