#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lpm/error.hpp"
#include "lpm/mds.hpp"
#include "lpm/mixture.hpp"
#include "lpm/postprocess.hpp"
#include "lpm/selection.hpp"

namespace py = pybind11;
using namespace lpm;

namespace {

ModelSpec make_spec(const std::string& model, int dim, int groups, bool free_scale) {
  ModelSpec spec;
  spec.variant = parse_variant(model);
  spec.dim = dim;
  spec.groups = spec.has_mixture() ? std::max(groups, 1) : 0;
  spec.free_scale = free_scale;
  spec.validate();
  return spec;
}

SamplerConfig make_config(std::size_t iterations, std::size_t burn_in, std::size_t thinning, std::uint64_t seed,
                          std::optional<std::size_t> case_control) {
  SamplerConfig c;
  c.iterations = iterations;
  c.burn_in = burn_in;
  c.thinning = thinning;
  c.seed = seed;
  c.case_control = case_control;
  c.validate();
  return c;
}

py::dict sample_to_dict(const PosteriorSample& s) {
  const std::size_t m = s.draws.size();
  const auto n = static_cast<py::ssize_t>(s.draws.empty() ? 0 : s.draws.front().state.nodes());
  const auto d = static_cast<py::ssize_t>(s.spec.dim);
  py::array_t<double> positions({static_cast<py::ssize_t>(m), n, d});
  auto pos = positions.mutable_unchecked<3>();
  std::vector<double> alpha, beta1, loglik, logpost;
  for (std::size_t k = 0; k < m; ++k) {
    const auto& dr = s.draws[k];
    for (py::ssize_t i = 0; i < n; ++i)
      for (py::ssize_t j = 0; j < d; ++j) pos(static_cast<py::ssize_t>(k), i, j) = dr.state.positions(i, j);
    alpha.push_back(dr.params.alpha);
    beta1.push_back(dr.params.beta1);
    loglik.push_back(dr.log_likelihood);
    logpost.push_back(dr.log_posterior);
  }
  py::dict out;
  out["positions"] = positions;
  out["alpha"] = alpha;
  out["beta1"] = beta1;
  out["log_likelihood"] = loglik;
  out["log_posterior"] = logpost;
  out["acceptance"] = s.acceptance;
  out["model"] = to_string(s.spec.variant);
  if (!s.draws.empty()) {
    const auto aligned = align_sample(s);
    out["mean_positions"] = posterior_mean_positions(aligned).positions;
    if (s.spec.has_mixture()) {
      const auto cs = cluster_summary(s);
      out["coallocation"] = cs.coallocation;
      out["partition"] = cs.partition;
    }
    out["map_index"] = s.map_index();
  }
  return out;
}

Network make_network(std::size_t n, bool directed, const std::vector<Edge>& edges) { return Network(n, directed, edges); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Latent position and latent position cluster models for networks";

  static py::exception<Error> base(m, "LpmError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<DataError> data_error(m, "DataError", base.ptr());
  static py::exception<NumericalError> numerical_error(m, "NumericalError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const DataError& e) {
      data_error(e.what());
    } catch (const NumericalError& e) {
      numerical_error(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  py::class_<Network>(m, "Network")
      .def(py::init(&make_network), py::arg("nodes"), py::arg("directed"), py::arg("edges"))
      .def_property_readonly("nodes", &Network::size)
      .def_property_readonly("directed", &Network::directed)
      .def_property_readonly("edges", &Network::edges)
      .def_property_readonly("labels", &Network::labels)
      .def("edge_count", &Network::edge_count)
      .def("dyad_count", &Network::dyad_count)
      .def("has_edge", &Network::edge, py::arg("i"), py::arg("j"))
      .def("__repr__", [](const Network& g) {
        return "<Network nodes=" + std::to_string(g.size()) + " edges=" + std::to_string(g.edge_count()) +
               (g.directed() ? " directed>" : " undirected>");
      });

  m.def("load_edge_list", [](const std::filesystem::path& p, bool directed) { return load_edge_list(p, directed); },
        py::arg("path"), py::arg("directed") = false);

  m.def("geodesic_distances", &geodesic_distances, py::arg("network"));

  m.def(
      "classical_mds",
      [](const Eigen::MatrixXd& distances, int dim) {
        const auto r = classical_mds(distances, dim);
        return py::make_tuple(r.coordinates, r.eigenvalues, r.stress);
      },
      py::arg("distances"), py::arg("dim"));

  m.def(
      "log_likelihood",
      [](const Network& g, const Eigen::MatrixXd& positions, double alpha, const std::string& model, double beta1) {
        const auto spec = make_spec(model, static_cast<int>(positions.cols()), 1, beta1 != 1.0);
        LatentState state;
        state.positions = positions;
        GlobalParams params;
        params.alpha = alpha;
        params.beta1 = beta1;
        return log_likelihood(g, spec, state, params);
      },
      py::arg("network"), py::arg("positions"), py::arg("alpha"), py::arg("model") = "distance", py::arg("beta1") = 1.0);

  m.def(
      "fit",
      [](const Network& g, const std::string& model, int dim, int groups, bool free_scale, std::size_t iterations,
         std::size_t burn_in, std::size_t thinning, std::uint64_t seed, std::optional<std::size_t> case_control) {
        const auto spec = make_spec(model, dim, groups, free_scale);
        const auto config = make_config(iterations, burn_in, thinning, seed, case_control);
        PosteriorSample s;
        {
          py::gil_scoped_release release;
          s = mcmc_fit(g, spec, PriorSpec{}, config);
        }
        auto out = sample_to_dict(s);
        const auto bic = bic_score(g, s);
        out["bic"] = py::make_tuple(bic.bic_likelihood, bic.bic_mixture, bic.bic_total);
        out["dic"] = dic_score(g, s).dic;
        return out;
      },
      py::arg("network"), py::arg("model") = "distance", py::arg("dim") = 2, py::arg("groups") = 0,
      py::arg("free_scale") = false, py::arg("iterations") = 10000, py::arg("burn_in") = 2000, py::arg("thinning") = 10,
      py::arg("seed") = 1, py::arg("case_control") = py::none());

  m.def(
      "simulate",
      [](const std::string& model, std::size_t nodes, bool directed, double alpha, std::uint64_t seed,
         std::optional<Eigen::MatrixXd> positions, double position_variance, int dim) {
        const auto spec = make_spec(model, positions ? static_cast<int>(positions->cols()) : dim, 1, false);
        if (spec.has_mixture() && !positions) throw ConfigError("mixture models need explicit positions here");
        GlobalParams params;
        params.alpha = alpha;
        PriorSpec prior;
        prior.position_variance = position_variance;
        std::optional<LatentState> state;
        if (positions) {
          state = LatentState{};
          state->positions = *positions;
          if (spec.has_mixture()) state->allocations.assign(positions->rows(), 0);
          if (spec.has_sociality()) state->sender = Eigen::VectorXd::Zero(positions->rows());
        }
        const auto sim = simulate_network(spec, nodes, directed, params, prior, seed, state);
        return py::make_tuple(sim.network, sim.state.positions);
      },
      py::arg("model") = "distance", py::arg("nodes") = 20, py::arg("directed") = false, py::arg("alpha") = 0.0,
      py::arg("seed") = 1, py::arg("positions") = py::none(), py::arg("position_variance") = 1.0, py::arg("dim") = 2);

  m.def(
      "procrustes",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& reference, bool translation) {
        const auto r = procrustes_align(a, reference, translation);
        return py::make_tuple(r.aligned, r.rotation, r.translation, r.r2);
      },
      py::arg("a"), py::arg("reference"), py::arg("translation") = true);

  m.def("mixture_bic", &mixture_bic, py::arg("points"), py::arg("groups"), py::arg("seed") = 0);
  m.def("adjusted_rand_index", &adjusted_rand_index, py::arg("a"), py::arg("b"));

  m.def(
      "scan",
      [](const Network& g, const std::string& model, const std::vector<int>& groups, const std::vector<int>& dims,
         std::size_t iterations, std::size_t burn_in, std::size_t thinning, std::uint64_t seed, unsigned threads) {
        const auto spec = make_spec(model, dims.empty() ? 2 : dims.front(), groups.empty() ? 1 : groups.front(), false);
        const auto config = make_config(iterations, burn_in, thinning, seed, std::nullopt);
        ScanOptions opts;
        opts.groups = groups;
        opts.dims = dims;
        opts.master_seed = seed;
        opts.threads = threads;
        std::vector<ModelScore> scores;
        {
          py::gil_scoped_release release;
          scores = scan(g, spec, PriorSpec{}, config, opts);
        }
        py::list out;
        for (const auto& s : scores) {
          py::dict row;
          row["groups"] = s.groups;
          row["dim"] = s.dim;
          row["bic_likelihood"] = s.bic_likelihood;
          row["bic_mixture"] = s.bic_mixture;
          row["bic_total"] = s.bic_total;
          row["dic"] = s.dic;
          row["seed"] = s.seed;
          row["ok"] = s.ok;
          row["error"] = s.error;
          out.append(row);
        }
        return out;
      },
      py::arg("network"), py::arg("model") = "lpcm", py::arg("groups") = std::vector<int>{1, 2, 3},
      py::arg("dims") = std::vector<int>{2}, py::arg("iterations") = 5000, py::arg("burn_in") = 2000,
      py::arg("thinning") = 10, py::arg("seed") = 1, py::arg("threads") = 1);
}
