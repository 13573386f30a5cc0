#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "molz/io.hpp"

namespace py = pybind11;
using namespace molz;

namespace {

py::dict prediction_dict(const PredictionRun& r) {
  const TransitionPrediction& p = r.prediction;
  py::dict d;
  d["eps"] = p.eps;
  d["crossing"] = r.crossing.z0;
  d["E_star"] = p.E_star;
  d["k_star"] = p.k_star;
  d["eta_plus"] = p.eta_plus;
  d["eta_naive"] = p.eta_naive;
  d["a_plus"] = p.a_plus;
  d["A_plus"] = p.A_plus;
  d["B_plus"] = p.B_plus;
  d["alpha_star"] = p.alpha_star;
  d["kappa_star"] = p.kappa_star;
  d["amplitude"] = p.amplitude;
  d["probability"] = p.probability;
  d["clipped_fraction"] = p.clipped_fraction;
  return d;
}

py::dict window_dict(const WindowStats& w) {
  py::dict d;
  d["mass"] = w.mass;
  d["mean_k"] = w.mean_k;
  d["var_k"] = w.var_k;
  d["mean_x"] = w.mean_x;
  d["fit_residual"] = w.fit.residual;
  d["excess_kurtosis"] = w.fit.excess_kurtosis;
  return d;
}

ExperimentConfig experiment_at(const std::string& config, std::optional<double> eps) {
  RunConfig c = parse_config(config);
  ExperimentConfig e = c.experiment;
  if (eps)
    e.eps = *eps;
  else if (!c.eps_list.empty())
    e.eps = c.eps_list.front();
  return e;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exponentially small non-adiabatic transitions: simulation, prediction and scattering";

  py::register_exception<Error>(m, "MolzError");

  py::class_<ElectronicModel>(m, "Model")
      .def_readonly("name", &ElectronicModel::name)
      .def_readonly("dim", &ElectronicModel::dim)
      .def_readonly("strip", &ElectronicModel::strip)
      .def("h", [](const ElectronicModel& mo, cplx z, double delta) { return CMat(mo.h(z, delta)); },
           py::arg("z"), py::arg("delta") = 0.0)
      .def("level_energy",
           [](const ElectronicModel& mo, int j, double x, double delta) { return level_energy(mo, j, x, delta); },
           py::arg("j"), py::arg("x"), py::arg("delta") = 0.0);

  m.def("make_model", &make_model, py::arg("name"), py::arg("params") = std::map<std::string, double>{});

  m.def(
      "find_crossing",
      [](const ElectronicModel& mo, int j, int n, double delta) {
        double s = std::min(mo.strip, 2.0);
        return find_complex_crossing(mo, j, n, delta, {-s, s, 1e-3, s}).z0;
      },
      py::arg("model"), py::arg("j") = 2, py::arg("n") = 1, py::arg("delta") = 0.0);

  m.def(
      "im_gamma",
      [](const ElectronicModel& mo, double E, double delta, int j, int n) {
        double s = std::min(mo.strip, 2.0);
        CrossingPoint cp = find_complex_crossing(mo, j, n, delta, {-s, s, 1e-3, s});
        return action_integral(mo, make_loop(cp, mo.strip), j, E, delta).gamma.imag();
      },
      py::arg("model"), py::arg("E"), py::arg("delta") = 0.0, py::arg("j") = 2, py::arg("n") = 1);

  py::class_<CoherentState>(m, "CoherentState")
      .def(py::init(&CoherentState::make), py::arg("A"), py::arg("B"), py::arg("eps"), py::arg("a"), py::arg("eta"),
           py::arg("m") = 0)
      .def_readonly("A", &CoherentState::A)
      .def_readonly("B", &CoherentState::B)
      .def_readonly("eps", &CoherentState::eps)
      .def_readonly("a", &CoherentState::a)
      .def_readonly("eta", &CoherentState::eta)
      .def_readonly("m", &CoherentState::m)
      .def("flow", [](const CoherentState& s, double t, double e_inf) { return flow(s, t, e_inf).state; },
           py::arg("t"), py::arg("e_inf") = 0.0)
      .def(
          "__call__",
          [](const CoherentState& s, py::array_t<double, py::array::c_style | py::array::forcecast> x) {
            py::array_t<cplx> out(x.size());
            auto xi = x.unchecked<1>();
            auto o = out.mutable_unchecked<1>();
            for (py::ssize_t i = 0; i < xi.shape(0); ++i) o(i) = evaluate_at(s, xi(i));
            return out;
          },
          py::arg("x"))
      .def("momentum_amplitude", [](const CoherentState& s, double k) { return momentum_amplitude(s, k); });

  m.def(
      "canonical_config", [](const std::string& config) { return config_json(parse_config(config)); },
      py::arg("config"), "Parse, validate and re-emit a JSON configuration.");

  m.def(
      "predict",
      [](const std::string& config, std::optional<double> eps) {
        return prediction_dict(predict_experiment(experiment_at(config, eps)));
      },
      py::arg("config"), py::arg("eps") = py::none());

  m.def(
      "evolve",
      [](const std::string& config, std::optional<double> eps) {
        ExperimentConfig e = experiment_at(config, eps);
        ExperimentReport r;
        {
          py::gil_scoped_release release;
          r = run_scattering_experiment(e);
        }
        py::dict d;
        d["status"] = r.status;
        d["N"] = r.grid.N;
        d["dt"] = r.dt;
        d["steps"] = r.steps;
        d["transmitted"] = window_dict(r.transmitted);
        d["incoming"] = window_dict(r.incoming);
        d["reflected_mass"] = r.reflected_mass;
        d["norm_drift"] = r.norm_drift;
        d["energy_drift"] = r.energy_drift;
        std::vector<double> t, up, low;
        for (const auto& s : r.series) {
          t.push_back(s.t);
          up.push_back(s.mass_upper);
          low.push_back(s.mass_lower);
        }
        d["t"] = t;
        d["mass_upper"] = up;
        d["mass_lower"] = low;
        return d;
      },
      py::arg("config"), py::arg("eps") = py::none());

  m.def(
      "s_matrix",
      [](const ElectronicModel& mo, double E, double eps, double delta) {
        SMatrix S = s_matrix(mo, E, eps, delta);
        py::dict d;
        d["S"] = CMat(S.S);
        d["symmetry_residual"] = S.symmetry_residual();
        d["flux_defect"] = S.flux_defect;
        return d;
      },
      py::arg("model"), py::arg("E"), py::arg("eps"), py::arg("delta") = 0.0);
}
