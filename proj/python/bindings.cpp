#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <map>
#include <string>

#include "rare/eval.hpp"
#include "rare/model.hpp"
#include "rare/pipeline.hpp"
#include "rare/prospect.hpp"
#include "rare/riskdist.hpp"
#include "rare/synthgen.hpp"

namespace py = pybind11;
using namespace rare;

namespace {

RatingDistribution to_dist(const std::array<double, kRatingLevels>& p) {
  RatingDistribution d;
  d.p = p;
  return d;
}

ProspectParams to_params(const std::array<double, kNumPtParams>& v) {
  return {v[0], v[1], v[2], v[3], v[4]};
}

RunConfig to_config(const std::map<std::string, std::string>& settings) {
  RunConfig config;
  for (const auto& [key, value] : settings) apply_setting(config, key, value);
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = std::string(kVersion);
  m.attr("COMMANDS") = commands();

  m.def("outcome", &outcome, py::arg("rating"), py::arg("reference"), py::arg("price"));
  m.def(
      "value",
      [](double x, double alpha, double beta, double lam) {
        return value(x, ProspectParams{alpha, beta, lam, 0.5, 0.5});
      },
      py::arg("x"), py::arg("alpha"), py::arg("beta"), py::arg("lam"));
  m.def("weight", py::overload_cast<double, double>(&weight), py::arg("p"), py::arg("exponent"));
  m.def(
      "prospect_value",
      [](const std::array<double, kRatingLevels>& dist, double reference, double price,
         const std::array<double, kNumPtParams>& params, const std::string& mode) {
        return prospect_value(to_dist(dist), reference, price, to_params(params),
                              parse_ablation_mode(mode));
      },
      py::arg("dist"), py::arg("reference"), py::arg("price"), py::arg("params"),
      py::arg("mode") = "full",
      "params is (alpha, beta, lambda, gamma, delta)");

  m.def(
      "weibull_interval_probs",
      [](double shape, double rate) { return weibull_interval_probs({shape, rate}).p; },
      py::arg("shape"), py::arg("rate"));
  m.def(
      "fit_weibull",
      [](const std::array<double, kRatingLevels>& target) {
        const auto w = fit_weibull(to_dist(target));
        return std::pair{w.shape, w.rate};
      },
      py::arg("target"));
  m.def(
      "resolve_distribution",
      [](const RatingCounts& counts) {
        const auto r = resolve_distribution(counts);
        return std::pair{r.dist.p, std::string(to_string(r.source))};
      },
      py::arg("counts"));

  m.def(
      "parameter_count",
      [](std::size_t n, std::size_t m_, std::size_t k) {
        return RareModel(n, m_, k, AblationMode::Full).parameter_count();
      },
      py::arg("n_users"), py::arg("n_items"), py::arg("k"));
  m.def("mnl_probability", [](const std::vector<double>& v) { return mnl_probability(v); },
        py::arg("values"));

  m.def("ndcg_at_k", &ndcg_at_k, py::arg("rank"), py::arg("k"));
  m.def("f1_at_k", &f1_at_k, py::arg("rank"), py::arg("k"));
  m.def(
      "spearman",
      [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); },
      py::arg("a"), py::arg("b"));

  m.def(
      "run",
      [](const std::string& command, const std::map<std::string, std::string>& settings) {
        const auto config = to_config(settings);
        py::gil_scoped_release release;
        run(command, config);
      },
      py::arg("command"), py::arg("settings") = std::map<std::string, std::string>{},
      "Runs a pipeline; settings use the command-line flag names without dashes.");
}
