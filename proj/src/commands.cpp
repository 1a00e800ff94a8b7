#include "lpm/commands.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "lpm/error.hpp"
#include "lpm/postprocess.hpp"
#include "lpm/selection.hpp"

namespace lpm {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> model_keys = {"model", "dim", "groups", "free_scale", "directed", "seed"};
const std::set<std::string> prior_keys = {
    "position_variance", "theta_variance",    "dirichlet_concentration", "center_variance",
    "cluster_var_shape", "cluster_var_scale", "sociality_var_shape",     "sociality_var_scale"};
const std::set<std::string> sampler_keys = {
    "iterations",     "burn_in",        "thinning",   "proposal_sd_positions", "proposal_sd_globals",
    "adapt",          "adapt_batch",    "case_control", "use_likelihood"};

std::set<std::string> merge(std::initializer_list<std::set<std::string>> sets, std::set<std::string> extra) {
  for (const auto& s : sets) extra.insert(s.begin(), s.end());
  return extra;
}

struct Loaded {
  KeyValueConfig cfg;
  std::uint64_t seed = 1;
  std::uint64_t hash = 0;
  fs::path base;  // relative paths resolve against the config directory
};

Loaded load(const fs::path& config_path, const CommandOptions& options, const std::set<std::string>& allowed) {
  Loaded out;
  out.cfg = KeyValueConfig::load(config_path);
  out.cfg.check_keys(allowed);
  out.seed = options.seed ? *options.seed : out.cfg.get_u64("seed", 1);
  out.cfg.set("seed", std::to_string(out.seed));
  out.hash = out.cfg.hash();
  out.base = config_path.parent_path();
  return out;
}

fs::path resolve(const Loaded& l, const std::string& key, const std::optional<std::string>& fallback = std::nullopt) {
  fs::path p = l.cfg.get_string(key, fallback);
  if (p.is_relative()) p = l.base / p;
  return p.lexically_normal();
}

void require_distinct(const std::vector<fs::path>& paths) {
  for (std::size_t a = 0; a < paths.size(); ++a) {
    for (std::size_t b = a + 1; b < paths.size(); ++b) {
      if (fs::weakly_canonical(paths[a]) == fs::weakly_canonical(paths[b])) {
        throw ConfigError("paths must be distinct: " + paths[a].string());
      }
    }
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string());
}

Network read_network(const Loaded& l, const fs::path& input, const std::optional<fs::path>& node_map) {
  const bool directed = l.cfg.get_bool("directed", false);
  std::vector<std::string> labels;
  if (node_map) labels = load_node_mapping(*node_map);
  return load_edge_list(input, directed, labels);
}

Eigen::MatrixXd parse_centers(const std::string& text, int dim) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    KeyValueConfig tmp;
    tmp.set("c", row);
    rows.push_back(tmp.get_double_list("c"));
  }
  Eigen::MatrixXd mu(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t g = 0; g < rows.size(); ++g) {
    if (static_cast<int>(rows[g].size()) != dim) throw ConfigError("mixture_centers rows must have dim entries");
    for (int k = 0; k < dim; ++k) mu(static_cast<Eigen::Index>(g), k) = rows[g][static_cast<std::size_t>(k)];
  }
  return mu;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ModelSpec read_model_spec(const KeyValueConfig& cfg) {
  ModelSpec spec;
  spec.variant = parse_variant(cfg.get_string("model", std::string("distance")));
  spec.dim = static_cast<int>(cfg.get_int("dim", 2));
  spec.groups = static_cast<int>(cfg.get_int("groups", spec.has_mixture() ? 1 : 0));
  if (!spec.has_mixture()) spec.groups = 0;
  spec.free_scale = cfg.get_bool("free_scale", false);
  spec.validate();
  return spec;
}

PriorSpec read_prior(const KeyValueConfig& cfg) {
  PriorSpec p;
  p.position_variance = cfg.get_double("position_variance", p.position_variance);
  p.theta_variance = cfg.get_double("theta_variance", p.theta_variance);
  p.dirichlet_concentration = cfg.get_double("dirichlet_concentration", p.dirichlet_concentration);
  p.center_variance = cfg.get_double("center_variance", p.center_variance);
  p.cluster_var_shape = cfg.get_double("cluster_var_shape", p.cluster_var_shape);
  p.cluster_var_scale = cfg.get_double("cluster_var_scale", p.cluster_var_scale);
  p.sociality_var_shape = cfg.get_double("sociality_var_shape", p.sociality_var_shape);
  p.sociality_var_scale = cfg.get_double("sociality_var_scale", p.sociality_var_scale);
  p.validate();
  return p;
}

SamplerConfig read_sampler(const KeyValueConfig& cfg, std::uint64_t seed) {
  SamplerConfig s;
  auto count = [&](const char* key, std::size_t fallback) {
    const long long v = cfg.get_int(key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError(std::string("key '") + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
  };
  s.iterations = count("iterations", s.iterations);
  s.burn_in = count("burn_in", s.burn_in);
  s.thinning = count("thinning", s.thinning);
  s.adapt_batch = count("adapt_batch", s.adapt_batch);
  s.proposal_sd_positions = cfg.get_double("proposal_sd_positions", s.proposal_sd_positions);
  s.proposal_sd_globals = cfg.get_double("proposal_sd_globals", s.proposal_sd_globals);
  s.adapt = cfg.get_bool("adapt", s.adapt);
  s.use_likelihood = cfg.get_bool("use_likelihood", true);
  if (cfg.has("case_control")) s.case_control = count("case_control", 0);
  s.seed = seed;
  s.validate();
  return s;
}

void cmd_fit(const fs::path& config_path, const CommandOptions& options) {
  const auto l = load(config_path, options, merge({model_keys, prior_keys, sampler_keys}, {"input", "node_map", "output_dir"}));
  const ModelSpec spec = read_model_spec(l.cfg);
  const PriorSpec prior = read_prior(l.cfg);
  const SamplerConfig sampler = read_sampler(l.cfg, l.seed);

  const fs::path input = resolve(l, "input");
  const std::optional<fs::path> node_map =
      l.cfg.has("node_map") ? std::optional<fs::path>(resolve(l, "node_map")) : std::nullopt;
  const fs::path out_dir = resolve(l, "output_dir", std::string("fit_output"));
  const fs::path posterior_path = out_dir / "posterior.csv", summary_path = out_dir / "summary.csv",
                 diag_path = out_dir / "diagnostics.txt", map_path = out_dir / "node_map.csv",
                 coalloc_path = out_dir / "coallocation.csv";
  std::vector<fs::path> paths = {config_path, input, posterior_path, summary_path, diag_path, map_path, coalloc_path};
  if (node_map) paths.push_back(*node_map);
  require_distinct(paths);

  const Network g = read_network(l, input, node_map);
  const PosteriorSample sample = mcmc_fit(g, spec, prior, sampler);
  const PosteriorSample aligned = align_sample(sample);
  const PositionSummary summary = summarize_positions(aligned);
  std::optional<ClusterSummary> clusters;
  if (spec.has_mixture()) clusters = cluster_summary(sample);

  ensure_dir(out_dir);
  const std::string pre = provenance_line(l.seed, l.hash);
  write_posterior_csv(sample, posterior_path, pre);
  write_summary_csv(build_node_summaries(g, summary, clusters ? &clusters->partition : nullptr), summary_path, pre);
  write_node_mapping(g, map_path, pre);
  if (clusters) write_matrix_csv(clusters->coallocation, coalloc_path, pre);

  const ModelScore bic = bic_score(g, sample);
  const DicResult dic = dic_score(g, sample);
  const GlobalParams mean = posterior_mean_params(sample);
  std::ofstream diag(diag_path, std::ios::binary);
  if (!diag) throw DataError("cannot write " + diag_path.string());
  diag << pre;
  diag << "model " << to_string(spec.variant) << " dim " << spec.dim << " groups " << spec.groups << '\n';
  diag << "nodes " << g.size() << " edges " << g.edge_count() << " directed " << (g.directed() ? 1 : 0) << '\n';
  diag << "iterations " << sampler.iterations << " burn_in " << sampler.burn_in << " thinning " << sampler.thinning
       << " draws " << sample.draws.size() << '\n';
  for (const auto& [block, rate] : sample.acceptance) diag << "acceptance " << block << ' ' << format_double(rate) << '\n';
  diag << "posterior_mean alpha " << format_double(mean.alpha) << '\n';
  for (Eigen::Index k = 0; k < mean.beta.size(); ++k) diag << "posterior_mean beta " << k << ' ' << format_double(mean.beta[k]) << '\n';
  if (spec.free_scale) diag << "posterior_mean beta1 " << format_double(mean.beta1) << '\n';
  diag << "map_log_likelihood " << format_double(sample.draws[sample.map_index()].log_likelihood) << '\n';
  diag << "bic_likelihood " << format_double(bic.bic_likelihood) << '\n';
  diag << "bic_mixture " << format_double(bic.bic_mixture) << '\n';
  diag << "bic_total " << format_double(bic.bic_total) << '\n';
  diag << "dic " << format_double(dic.dic) << " p_d " << format_double(dic.effective_parameters) << '\n';
}

void cmd_simulate(const fs::path& config_path, const CommandOptions& options) {
  const auto l = load(config_path, options,
                      merge({model_keys, prior_keys}, {"nodes", "alpha", "beta1", "sociality_variance", "mixture_weights",
                                                       "mixture_centers", "mixture_variances", "output_dir"}));
  const ModelSpec spec = read_model_spec(l.cfg);
  const PriorSpec prior = read_prior(l.cfg);
  const long long nodes = l.cfg.get_int("nodes");
  if (nodes < 2) throw ConfigError("nodes must be at least 2");
  const bool directed = l.cfg.get_bool("directed", false);

  GlobalParams params;
  params.alpha = l.cfg.get_double("alpha", 1.0);
  params.beta1 = l.cfg.get_double("beta1", 1.0);
  params.sociality_variance = l.cfg.get_double("sociality_variance", 1.0);
  if (spec.has_mixture()) {
    params.mixture.mu = parse_centers(l.cfg.get_string("mixture_centers"), spec.dim);
    const auto groups = params.mixture.mu.rows();
    params.mixture.lambda = l.cfg.has("mixture_weights") ? to_vector(l.cfg.get_double_list("mixture_weights"))
                                                         : Eigen::VectorXd::Constant(groups, 1.0 / static_cast<double>(groups));
    params.mixture.sigma2 = l.cfg.has("mixture_variances") ? to_vector(l.cfg.get_double_list("mixture_variances"))
                                                           : Eigen::VectorXd::Constant(groups, 1.0);
    if (params.mixture.groups() != spec.groups || params.mixture.sigma2.size() != groups) {
      throw ConfigError("mixture settings must list exactly 'groups' components");
    }
    params.mixture.validate();
  }

  const fs::path out_dir = resolve(l, "output_dir", std::string("sim_output"));
  const fs::path edges_path = out_dir / "edges.csv", truth_path = out_dir / "truth.csv", map_path = out_dir / "node_map.csv";
  require_distinct({config_path, edges_path, truth_path, map_path});

  const Simulation sim = simulate_network(spec, static_cast<std::size_t>(nodes), directed, params, prior, l.seed);
  ensure_dir(out_dir);
  const std::string pre = provenance_line(l.seed, l.hash);
  write_edge_list(sim.network, edges_path, pre);
  write_truth_csv(sim, spec, truth_path, pre);
  write_node_mapping(sim.network, map_path, pre);
}

void cmd_select(const fs::path& config_path, const CommandOptions& options) {
  const auto l = load(config_path, options,
                      merge({model_keys, prior_keys, sampler_keys}, {"input", "node_map", "output", "groups_range", "dims_range", "threads"}));
  const ModelSpec spec = read_model_spec(l.cfg);
  const PriorSpec prior = read_prior(l.cfg);
  const SamplerConfig sampler = read_sampler(l.cfg, l.seed);

  ScanOptions scan_opts;
  scan_opts.groups = l.cfg.get_int_list("groups_range", std::vector<int>{std::max(spec.groups, 1)});
  scan_opts.dims = l.cfg.get_int_list("dims_range", std::vector<int>{spec.dim});
  scan_opts.master_seed = l.seed;
  scan_opts.threads = l.cfg.has("threads") && options.threads <= 1 ? static_cast<unsigned>(l.cfg.get_int("threads"))
                                                                    : options.threads;

  const fs::path input = resolve(l, "input");
  const std::optional<fs::path> node_map =
      l.cfg.has("node_map") ? std::optional<fs::path>(resolve(l, "node_map")) : std::nullopt;
  const fs::path report = resolve(l, "output", std::string("scan.csv"));
  std::vector<fs::path> paths = {config_path, input, report};
  if (node_map) paths.push_back(*node_map);
  require_distinct(paths);

  const Network g = read_network(l, input, node_map);
  const auto scores = scan(g, spec, prior, sampler, scan_opts);
  if (report.has_parent_path()) ensure_dir(report.parent_path());
  write_scan_csv(scores, report, provenance_line(l.seed, l.hash));
}

void cmd_layout(const fs::path& summary_path, const fs::path& output_path) {
  require_distinct({summary_path, output_path});
  const auto rows = read_summary_csv(summary_path);
  std::ifstream in(summary_path, std::ios::binary);
  std::string first;
  std::getline(in, first);
  std::string comment = "summary " + hex64(fnv1a64(summary_path.filename().string()));
  if (first.rfind("# ", 0) == 0) comment = first.substr(2);
  if (output_path.has_parent_path()) ensure_dir(output_path.parent_path());
  std::ofstream out(output_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + output_path.string());
  out << render_layout_svg(rows, comment);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Latent position models for networks"};
  app.require_subcommand(1);
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string summary, output;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Flat key=value config file")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto* fit = app.add_subcommand("fit", "Fit a latent position model");
  auto* simulate = app.add_subcommand("simulate", "Simulate a network");
  auto* select = app.add_subcommand("select", "Scan groups and dimensions by BIC");
  auto* layout = app.add_subcommand("layout", "Render a summary CSV as SVG");
  add_common(fit);
  add_common(simulate);
  add_common(select);
  layout->add_option("--summary", summary, "Summary CSV")->required();
  layout->add_option("--output", output, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error category=config message=\"" << e.what() << "\"\n";
    return 2;
  }

  try {
    CommandOptions opts{seed, threads};
    if (*fit) cmd_fit(config, opts);
    if (*simulate) cmd_simulate(config, opts);
    if (*select) cmd_select(config, opts);
    if (*layout) cmd_layout(summary, output);
  } catch (const Error& e) {
    std::string msg = e.what();
    for (auto& c : msg) if (c == '\n' || c == '"') c = '\'';
    std::cerr << "error category=" << to_string(e.kind()) << " message=\"" << msg << "\"\n";
    switch (e.kind()) {
      case ErrorKind::config: return 2;
      case ErrorKind::data: return 3;
      case ErrorKind::numerical: return 4;
    }
  } catch (const std::exception& e) {
    std::cerr << "error category=numerical message=\"" << e.what() << "\"\n";
    return 4;
  }
  return 0;
}

}  // namespace lpm
