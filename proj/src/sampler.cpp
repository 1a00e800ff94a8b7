#include <algorithm>
#include <cmath>
#include <limits>

#include "lpm/error.hpp"
#include "lpm/inference.hpp"
#include "lpm/mixture.hpp"

namespace lpm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void bump(BlockCounts& c, bool accepted) {
  ++c.proposed;
  if (accepted) ++c.accepted;
}

}  // namespace

Sampler::Sampler(const Network& g, ModelSpec spec, PriorSpec prior, SamplerConfig config, Initialization init,
                 const DyadCovariates* x)
    : g_(&g),
      spec_(spec),
      prior_(prior),
      config_(config),
      x_(x),
      rng_(config.seed),
      z_(init.state.positions),
      sender_(init.state.sender),
      receiver_(init.state.receiver),
      allocations_(init.state.allocations),
      params_(init.params) {
  config_.validate();
  prior_.validate();
  check_consistent(g, spec_, init.state, init.params, x);
  if (g.size() > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("network too large");

  const auto n = g.size();
  dyads_ = config_.case_control ? case_control_dyads(g, *config_.case_control, rng_) : full_dyads(g);
  incident_.assign(n, {});
  for (std::uint32_t d = 0; d < dyads_.size(); ++d) {
    incident_[dyads_[d].i].push_back(d);
    incident_[dyads_[d].j].push_back(d);
  }
  const auto p = static_cast<std::size_t>(params_.beta.size());
  xvals_.assign(dyads_.size() * p, 0.0);
  xb_.assign(dyads_.size(), 0.0);
  for (std::size_t d = 0; d < dyads_.size(); ++d) {
    for (std::size_t k = 0; k < p; ++k) {
      xvals_[d * p + k] = x_->value(dyads_[d].i, dyads_[d].j, k);
      xb_[d] += params_.beta[static_cast<Eigen::Index>(k)] * xvals_[d * p + k];
    }
  }

  scales_.positions.assign(n, config_.proposal_sd_positions);
  scales_.sender.assign(static_cast<std::size_t>(sender_.size()), config_.proposal_sd_globals);
  scales_.receiver.assign(static_cast<std::size_t>(receiver_.size()), config_.proposal_sd_globals);
  scales_.alpha = config_.proposal_sd_globals;
  scales_.beta.assign(p, config_.proposal_sd_globals);
  scales_.log_beta1 = config_.proposal_sd_globals;
  scales_.log_sociality_variance = config_.proposal_sd_globals;
  batch_positions_.assign(n, {});
  batch_sender_.assign(scales_.sender.size(), {});
  batch_receiver_.assign(scales_.receiver.size(), {});
  batch_beta_.assign(p, {});

  const double lp = target_log_likelihood() + log_prior(init.state, params_, prior_, spec_);
  if (!std::isfinite(lp)) throw NumericalError("initial log posterior is not finite");
}

double Sampler::kernel(const double* za, const double* zb, double beta1) const {
  const int d = spec_.dim;
  if (spec_.variant == Variant::projection) {
    double dot = 0.0, nb = 0.0;
    for (int k = 0; k < d; ++k) {
      dot += za[k] * zb[k];
      nb += zb[k] * zb[k];
    }
    return nb > 0.0 ? dot / std::sqrt(nb) : std::numeric_limits<double>::quiet_NaN();
  }
  double ss = 0.0;
  for (int k = 0; k < d; ++k) ss += (za[k] - zb[k]) * (za[k] - zb[k]);
  return -beta1 * std::sqrt(ss);
}

double Sampler::incident_log_lik(std::size_t node, const double* z) const {
  if (!config_.use_likelihood) return 0.0;
  const bool social = sender_.size() > 0;
  const bool directed = receiver_.size() > 0;
  double total = 0.0;
  for (auto d : incident_[node]) {
    const auto& dy = dyads_[d];
    const double* za = dy.i == node ? z : z_.row(dy.i).data();
    const double* zb = dy.j == node ? z : z_.row(dy.j).data();
    double e = params_.alpha + xb_[d] + kernel(za, zb, params_.beta1);
    if (social) e += sender_[dy.i] + (directed ? receiver_[dy.j] : sender_[dy.j]);
    total += dy.w * dyad_log_mass(dy.y, e);
  }
  return std::isnan(total) ? kNegInf : total;
}

double Sampler::incident_log_lik_effect(std::size_t node, Effect kind, double value) const {
  if (!config_.use_likelihood) return 0.0;
  const bool directed = receiver_.size() > 0;
  double total = 0.0;
  for (auto d : incident_[node]) {
    const auto& dy = dyads_[d];
    double ea = sender_[dy.i];
    double eb = directed ? receiver_[dy.j] : sender_[dy.j];
    if (kind == Effect::sender) {
      if (dy.i == node) ea = value;
      if (!directed && dy.j == node) eb = value;
    } else if (dy.j == node) {
      eb = value;
    }
    const double e = params_.alpha + xb_[d] + kernel(z_.row(dy.i).data(), z_.row(dy.j).data(), params_.beta1) + ea + eb;
    total += dy.w * dyad_log_mass(dy.y, e);
  }
  return total;
}

double Sampler::log_lik_with(double alpha, double beta1, std::size_t beta_index, double beta_shift) const {
  if (!config_.use_likelihood) return 0.0;
  const bool social = sender_.size() > 0;
  const bool directed = receiver_.size() > 0;
  const auto p = static_cast<std::size_t>(params_.beta.size());
  double total = 0.0;
  for (std::size_t d = 0; d < dyads_.size(); ++d) {
    const auto& dy = dyads_[d];
    double e = alpha + xb_[d] + kernel(z_.row(dy.i).data(), z_.row(dy.j).data(), beta1);
    if (beta_shift != 0.0) e += beta_shift * xvals_[d * p + beta_index];
    if (social) e += sender_[dy.i] + (directed ? receiver_[dy.j] : sender_[dy.j]);
    total += dy.w * dyad_log_mass(dy.y, e);
  }
  return std::isnan(total) ? kNegInf : total;
}

double Sampler::target_log_likelihood() const { return log_lik_with(params_.alpha, params_.beta1, 0, 0.0); }

double Sampler::node_log_conditional(std::size_t i, const Eigen::Ref<const Eigen::VectorXd>& z) const {
  const Eigen::VectorXd zc = z;
  return log_position_prior(zc, spec_, params_, prior_) + incident_log_lik(i, zc.data());
}

double Sampler::global_log_conditional(const GlobalParams& params) const {
  if (params.beta.size() != params_.beta.size()) throw ConfigError("covariate coefficient length mismatch");
  double ll = 0.0;
  if (config_.use_likelihood) {
    const auto p = static_cast<std::size_t>(params.beta.size());
    const bool social = sender_.size() > 0;
    const bool directed = receiver_.size() > 0;
    for (std::size_t d = 0; d < dyads_.size(); ++d) {
      const auto& dy = dyads_[d];
      double e = params.alpha + kernel(z_.row(dy.i).data(), z_.row(dy.j).data(), params.beta1);
      for (std::size_t k = 0; k < p; ++k) e += params.beta[static_cast<Eigen::Index>(k)] * xvals_[d * p + k];
      if (social) e += sender_[dy.i] + (directed ? receiver_[dy.j] : sender_[dy.j]);
      ll += dy.w * dyad_log_mass(dy.y, e);
    }
  }
  double lp = log_global_prior(spec_, params, prior_);
  if (spec_.has_sociality()) {
    LatentState effects;
    effects.sender = sender_;
    effects.receiver = receiver_;
    lp += log_sociality_prior(effects, params, prior_);
  }
  return ll + lp;
}

bool Sampler::accept(double log_ratio) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(uniform_(rng_)) < log_ratio;
}

std::vector<bool> Sampler::update_positions() {
  const auto n = g_->size();
  const int d = spec_.dim;
  std::vector<bool> flags(n, false);
  Eigen::VectorXd proposal(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double sd = scales_.positions[i];
    for (int k = 0; k < d; ++k) proposal[k] = z_(static_cast<Eigen::Index>(i), k) + sd * normal_(rng_);
    const Eigen::VectorXd current = z_.row(static_cast<Eigen::Index>(i)).transpose();
    const double log_ratio = node_log_conditional(i, proposal) - node_log_conditional(i, current);
    const bool ok = accept(log_ratio);
    if (ok) z_.row(static_cast<Eigen::Index>(i)) = proposal.transpose();
    flags[i] = ok;
    bump(batch_positions_[i], ok);
    if (recording_) bump(totals_["positions"], ok);
  }
  return flags;
}

std::vector<bool> Sampler::update_sociality() {
  std::vector<bool> flags;
  if (sender_.size() == 0) return flags;
  const double v = params_.sociality_variance;
  auto step = [&](Eigen::VectorXd& effects, std::vector<double>& sds, std::vector<BlockCounts>& batch, Effect kind) {
    for (Eigen::Index i = 0; i < effects.size(); ++i) {
      const auto node = static_cast<std::size_t>(i);
      const double cur = effects[i];
      const double prop = cur + sds[node] * normal_(rng_);
      const double log_ratio = incident_log_lik_effect(node, kind, prop) - incident_log_lik_effect(node, kind, cur) -
                               0.5 * (prop * prop - cur * cur) / v;
      const bool ok = accept(log_ratio);
      if (ok) effects[i] = prop;
      flags.push_back(ok);
      bump(batch[node], ok);
      if (recording_) bump(totals_["sociality"], ok);
    }
  };
  step(sender_, scales_.sender, batch_sender_, Effect::sender);
  if (receiver_.size() > 0) step(receiver_, scales_.receiver, batch_receiver_, Effect::receiver);
  return flags;
}

std::vector<bool> Sampler::update_globals() {
  std::vector<bool> flags;
  const double s = prior_.theta_variance;
  const double base_ll = log_lik_with(params_.alpha, params_.beta1, 0, 0.0);

  // alpha
  {
    const double prop = params_.alpha + scales_.alpha * normal_(rng_);
    const double ll = log_lik_with(prop, params_.beta1, 0, 0.0);
    const double log_ratio = ll - base_ll - 0.5 * (prop * prop - params_.alpha * params_.alpha) / s;
    const bool ok = accept(log_ratio);
    if (ok) params_.alpha = prop;
    flags.push_back(ok);
    bump(batch_alpha_, ok);
    if (recording_) bump(totals_["alpha"], ok);
  }
  double cur_ll = log_lik_with(params_.alpha, params_.beta1, 0, 0.0);

  const auto p = static_cast<std::size_t>(params_.beta.size());
  for (std::size_t k = 0; k < p; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double cur = params_.beta[kk];
    const double shift = scales_.beta[k] * normal_(rng_);
    const double prop = cur + shift;
    const double ll = log_lik_with(params_.alpha, params_.beta1, k, shift);
    const double log_ratio = ll - cur_ll - 0.5 * (prop * prop - cur * cur) / s;
    const bool ok = accept(log_ratio);
    if (ok) {
      params_.beta[kk] = prop;
      for (std::size_t d = 0; d < dyads_.size(); ++d) xb_[d] += shift * xvals_[d * p + k];
      cur_ll = ll;
    }
    flags.push_back(ok);
    bump(batch_beta_[k], ok);
    if (recording_) bump(totals_["beta"], ok);
  }

  if (spec_.free_scale) {
    // Random walk on phi = log beta1; the Jacobian adds phi to the target.
    const double phi = std::log(params_.beta1);
    const double phi_prop = phi + scales_.log_beta1 * normal_(rng_);
    const double prop = std::exp(phi_prop);
    const double ll = log_lik_with(params_.alpha, prop, 0, 0.0);
    const double log_ratio = ll - cur_ll - 0.5 * (prop * prop - params_.beta1 * params_.beta1) / s + (phi_prop - phi);
    const bool ok = accept(log_ratio);
    if (ok) {
      params_.beta1 = prop;
      cur_ll = ll;
    }
    flags.push_back(ok);
    bump(batch_beta1_, ok);
    if (recording_) bump(totals_["beta1"], ok);
  }

  if (spec_.has_sociality()) {
    // Only the effects' prior depends on their variance.
    LatentState effects;
    effects.sender = sender_;
    effects.receiver = receiver_;
    const double phi = std::log(params_.sociality_variance);
    const double phi_prop = phi + scales_.log_sociality_variance * normal_(rng_);
    GlobalParams proposed = params_;
    proposed.sociality_variance = std::exp(phi_prop);
    const double log_ratio = log_sociality_prior(effects, proposed, prior_) -
                             log_sociality_prior(effects, params_, prior_) + (phi_prop - phi);
    const bool ok = accept(log_ratio);
    if (ok) params_.sociality_variance = proposed.sociality_variance;
    flags.push_back(ok);
    bump(batch_socvar_, ok);
    if (recording_) bump(totals_["sociality_variance"], ok);
  }
  return flags;
}

void Sampler::update_mixture() {
  if (!spec_.has_mixture()) return;
  auto& mix = params_.mixture;
  const int groups = mix.groups();
  const auto n = g_->size();
  const int d = spec_.dim;

  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd probs = allocation_probabilities(z_.row(static_cast<Eigen::Index>(i)).transpose(), mix);
    double u = uniform_(rng_);
    int k = 0;
    for (; k < groups - 1; ++k) {
      u -= probs[k];
      if (u <= 0.0) break;
    }
    allocations_[i] = k;
  }

  std::vector<double> counts(static_cast<std::size_t>(groups), 0.0);
  for (int k : allocations_) counts[static_cast<std::size_t>(k)] += 1.0;

  Eigen::VectorXd lambda(groups);
  for (int k = 0; k < groups; ++k) {
    std::gamma_distribution<double> gamma(prior_.dirichlet_concentration + counts[static_cast<std::size_t>(k)], 1.0);
    lambda[k] = std::max(gamma(rng_), std::numeric_limits<double>::min());
  }
  mix.lambda = lambda / lambda.sum();

  for (int k = 0; k < groups; ++k) {
    const double nk = counts[static_cast<std::size_t>(k)];
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < n; ++i) {
      if (allocations_[i] == k) sum += z_.row(static_cast<Eigen::Index>(i)).transpose();
    }
    const double precision = nk / mix.sigma2[k] + 1.0 / prior_.center_variance;
    const Eigen::VectorXd mean = (sum / mix.sigma2[k]) / precision;
    const double sd = 1.0 / std::sqrt(precision);
    for (int c = 0; c < d; ++c) mix.mu(k, c) = mean[c] + sd * normal_(rng_);

    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (allocations_[i] == k) ss += (z_.row(static_cast<Eigen::Index>(i)) - mix.mu.row(k)).squaredNorm();
    }
    const double shape = prior_.cluster_var_shape + 0.5 * nk * d;
    const double scale = prior_.cluster_var_scale + 0.5 * ss;
    std::gamma_distribution<double> gamma(shape, 1.0);
    mix.sigma2[k] = scale / gamma(rng_);
  }
}

void Sampler::sweep() {
  update_positions();
  update_sociality();
  update_globals();
  update_mixture();
}

void Sampler::adapt(std::size_t batch_index) {
  const double tp = config_.target_acceptance_positions;
  const double ts = config_.target_acceptance_scalars;
  auto tune_all = [&](std::vector<double>& sds, std::vector<BlockCounts>& counts, double target) {
    for (std::size_t k = 0; k < sds.size(); ++k) {
      if (counts[k].proposed) sds[k] = adapt_scale(sds[k], counts[k].rate(), target, batch_index);
      counts[k] = {};
    }
  };
  auto tune = [&](double& sd, BlockCounts& counts, double target) {
    if (counts.proposed) sd = adapt_scale(sd, counts.rate(), target, batch_index);
    counts = {};
  };
  tune_all(scales_.positions, batch_positions_, tp);
  tune_all(scales_.sender, batch_sender_, ts);
  tune_all(scales_.receiver, batch_receiver_, ts);
  tune_all(scales_.beta, batch_beta_, ts);
  tune(scales_.alpha, batch_alpha_, ts);
  tune(scales_.log_beta1, batch_beta1_, ts);
  tune(scales_.log_sociality_variance, batch_socvar_, ts);
}

LatentState Sampler::state() const {
  LatentState s;
  s.positions = z_;
  s.allocations = allocations_;
  s.sender = sender_;
  s.receiver = receiver_;
  return s;
}

PosteriorSample Sampler::run() {
  PosteriorSample out;
  out.spec = spec_;
  out.prior = prior_;
  out.config = config_;
  out.draws.reserve(config_.expected_draws());
  recording_ = config_.burn_in == 0;
  std::size_t batch_index = 0;
  for (std::size_t t = 1; t <= config_.iterations; ++t) {
    sweep();
    if (t <= config_.burn_in) {
      if (config_.adapt && t % config_.adapt_batch == 0) adapt(++batch_index);
      if (t == config_.burn_in) recording_ = true;
      continue;
    }
    if ((t - config_.burn_in) % config_.thinning != 0) continue;
    Draw draw;
    draw.iteration = t;
    draw.state = state();
    draw.params = params_;
    draw.log_likelihood = log_likelihood(*g_, spec_, draw.state, draw.params, x_);
    draw.log_posterior = draw.log_likelihood + log_prior(draw.state, draw.params, prior_, spec_);
    out.draws.push_back(std::move(draw));
  }
  for (const auto& [block, counts] : totals_) out.acceptance[block] = counts.rate();
  return out;
}

PosteriorSample mcmc_fit(const Network& g, const ModelSpec& spec, const PriorSpec& prior, const SamplerConfig& config,
                         std::optional<Initialization> init, const DyadCovariates* x) {
  spec.validate();
  config.validate();
  if (!init) {
    InitOptions options;
    options.seed = config.seed ^ 0x9e3779b97f4a7c15ULL;
    init = mle_initialize(g, spec, x, options).init;
  }
  Sampler sampler(g, spec, prior, config, std::move(*init), x);
  return sampler.run();
}

}  // namespace lpm
