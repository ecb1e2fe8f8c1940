#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ttevolve/config.hpp"
#include "ttevolve/langevin.hpp"
#include "ttevolve/quantum.hpp"
#include "ttevolve/runner.hpp"
#include "ttevolve/sampler.hpp"
#include "ttevolve/sketch.hpp"
#include "ttevolve/svg.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_core, m) {
  m.doc() = "particle evolution with tensor-train re-estimation by sketching";

  py::register_exception<ttv::ConfigError>(m, "ConfigError");
  py::register_exception<ttv::NumericalError>(m, "NumericalError");

  py::class_<ttv::TensorTrain<double>>(m, "TensorTrain")
      .def_property_readonly("dims", &ttv::TensorTrain<double>::dims)
      .def_property_readonly("ranks", &ttv::TensorTrain<double>::ranks)
      .def("__call__",
           [](const ttv::TensorTrain<double>& t, const std::vector<int>& idx) {
             return ttv::tt_eval(t, idx);
           })
      .def("norm2", [](const ttv::TensorTrain<double>& t) { return ttv::tt_norm2(t); });

  m.def(
      "random_tt",
      [](const std::vector<int>& dims, int rank, std::uint64_t seed) {
        ttv::RngStream rng(ttv::mix_seed(seed, 0x9b1d, 0));
        return ttv::random_tt<double>(dims, rank, rng);
      },
      py::arg("dims"), py::arg("rank"), py::arg("seed"));
  m.def("tt_add", &ttv::tt_add<double>);
  m.def("tt_scale",
        [](const ttv::TensorTrain<double>& t, double s) { return ttv::tt_scale(t, s); });
  m.def("tt_hadamard", &ttv::tt_hadamard<double>);
  m.def("tt_inner", &ttv::tt_inner<double>);
  m.def(
      "tt_round",
      [](const ttv::TensorTrain<double>& t, double tol, int max_rank) {
        return ttv::tt_round(t, tol, max_rank);
      },
      py::arg("tt"), py::arg("tol"), py::arg("max_rank") = -1);

  m.def(
      "sample_indices",
      [](const ttv::TensorTrain<double>& density, long long n, std::uint64_t seed) {
        return ttv::sample_tt_indices(density, n, seed).idx;
      },
      py::arg("density"), py::arg("n"), py::arg("seed"),
      "ancestral samples from a nonnegative train; one index row per sample");
  m.def(
      "estimate_from_indices",
      [](const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& idx,
         const std::vector<int>& dims, int sketch_size, double svd_threshold,
         std::uint64_t seed) {
        ttv::DiscreteDeltaEnsemble ens;
        ens.idx = idx;
        ens.dims = dims;
        const ttv::SketchFamily sketch = ttv::SketchFamily::random(dims, sketch_size, seed);
        return ttv::estimate_tt_from_particles(ens, sketch, svd_threshold);
      },
      py::arg("idx"), py::arg("dims"), py::arg("sketch_size"), py::arg("svd_threshold"),
      py::arg("seed"), "density estimation from index samples via sketched moments");

  m.def(
      "ising_ground_energy",
      [](int d, double field, bool periodic) {
        return ttv::lanczos_oracle(ttv::ising_chain(d, field, periodic)).first;
      },
      py::arg("d"), py::arg("field") = 1.0, py::arg("periodic") = true,
      "Lanczos ground energy of the transverse-field chain (d <= 16)");

  m.def("parse_config",
        [](const std::string& text) { return ttv::parse_config(text).canonical_json; });
  m.def("run_config",
        [](const std::string& path) { return ttv::run_experiment(ttv::load_config(path)); });
  m.def("plot_csv", &ttv::plot_csv, py::arg("csv_path"), py::arg("out_path"));
}
