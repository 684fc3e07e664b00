#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mfspike/config.hpp"
#include "mfspike/estimator.hpp"
#include "mfspike/experiments.hpp"
#include "mfspike/flow.hpp"
#include "mfspike/model.hpp"
#include "mfspike/simulator.hpp"

namespace py = pybind11;
using namespace mfspike;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

EstimatorConfig make_config(const KernelSpec& kernel, double bandwidth,
                            double x_star,
                            std::optional<std::pair<std::uint32_t, std::uint32_t>>
                                observed,
                            double epsilon) {
  EstimatorConfig cfg;
  cfg.kernel = kernel;
  cfg.bandwidth = bandwidth;
  cfg.x_star = x_star;
  cfg.epsilon = epsilon;
  if (observed)
    cfg.observed = ObservedSet::range(observed->first, observed->second);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Event-driven simulation of mean-field spiking systems and "
      "kernel estimation of the spiking-rate function";

  py::class_<ModelSpec>(m, "ModelSpec")
      .def_readonly("n", &ModelSpec::n)
      .def_readonly("x0", &ModelSpec::x0)
      .def_readonly("horizon", &ModelSpec::horizon)
      .def("big_f", &ModelSpec::big_f, py::arg("x"))
      .def("rate", [](const ModelSpec& s, double x) { return s.rate.f(x); },
           py::arg("x"))
      .def("__repr__", [](const ModelSpec& s) {
        return "<ModelSpec n=" + std::to_string(s.n) + ">";
      });

  m.def(
      "model_from_json",
      [](const std::string& text) { return parse_model_config(text).model; },
      py::arg("json_text"),
      "Build a model from its JSON configuration (same schema as the CLI).");

  py::class_<KernelSpec>(m, "KernelSpec")
      .def_readonly("order", &KernelSpec::order)
      .def_readonly("support", &KernelSpec::support)
      .def_readonly("nonnegative", &KernelSpec::nonnegative)
      .def("__call__",
           [](const KernelSpec& k, double u) { return k(u); })
      .def("l2_norm", [](const KernelSpec& k) { return kernel_l2_norm(k); });

  m.def(
      "build_kernel",
      [](const std::string& shape, int order) {
        return build_kernel(shape, order);
      },
      py::arg("shape"), py::arg("order") = 0);

  py::class_<SystemTrajectory>(m, "Trajectory")
      .def_property_readonly("terminal_time", &SystemTrajectory::terminal_time)
      .def_property_readonly("seed", &SystemTrajectory::seed)
      .def_property_readonly("model", &SystemTrajectory::model)
      .def_property_readonly("n_events",
                             [](const SystemTrajectory& t) {
                               return t.events().size();
                             })
      .def("event_times",
           [](const SystemTrajectory& t) {
             std::vector<double> v;
             v.reserve(t.events().size());
             for (const auto& e : t.events()) v.push_back(e.time);
             return to_array(v);
           })
      .def("event_spikers",
           [](const SystemTrajectory& t) {
             py::array_t<std::uint32_t> out(
                 static_cast<py::ssize_t>(t.events().size()));
             auto* data = out.mutable_data();
             for (std::size_t i = 0; i < t.events().size(); ++i)
               data[i] = t.events()[i].spiker;
             return out;
           })
      .def("event_weights",
           [](const SystemTrajectory& t) {
             std::vector<double> v;
             v.reserve(t.events().size());
             for (const auto& e : t.events()) v.push_back(e.weight);
             return to_array(v);
           })
      .def("event_pre_potentials",
           [](const SystemTrajectory& t) {
             std::vector<double> v;
             v.reserve(t.events().size());
             for (const auto& e : t.events()) v.push_back(e.pre_potential);
             return to_array(v);
           })
      .def("potential", &SystemTrajectory::potential, py::arg("neuron"),
           py::arg("t"), py::arg("left_limit") = false)
      .def("save", &SystemTrajectory::save, py::arg("path"))
      .def_static("load", &SystemTrajectory::load, py::arg("path"));

  m.def(
      "simulate",
      [](const ModelSpec& model, std::uint64_t seed, const std::string& record,
         const std::string& path) {
        SimOptions opts;
        if (record == "snapshots")
          opts.record = RecordLevel::snapshots;
        else if (record != "events")
          throw std::invalid_argument("record must be 'events' or 'snapshots'");
        if (path == "fast")
          opts.path = SimPath::fast_linear;
        else if (path == "general")
          opts.path = SimPath::general;
        else if (path != "auto")
          throw std::invalid_argument("path must be 'auto', 'fast' or 'general'");
        return simulate(model, seed, opts);
      },
      py::arg("model"), py::arg("seed"), py::arg("record") = "events",
      py::arg("path") = "auto",
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "estimate_rate",
      [](const SystemTrajectory& traj, const KernelSpec& kernel,
         double bandwidth, double x_star,
         std::optional<std::pair<std::uint32_t, std::uint32_t>> observed,
         double epsilon) {
        const EstimateReport rep = estimate_rate(
            traj, make_config(kernel, bandwidth, x_star, observed, epsilon));
        py::dict out;
        out["estimate"] = rep.estimate;
        out["numerator"] = rep.numerator;
        out["denominator"] = rep.denominator;
        out["degenerate"] = rep.degenerate;
        out["warnings"] = rep.warnings;
        return out;
      },
      py::arg("trajectory"), py::arg("kernel"), py::arg("bandwidth"),
      py::arg("x_star"), py::arg("observed") = std::nullopt,
      py::arg("epsilon") = 0.1);

  m.def(
      "occupation_integral",
      [](const SystemTrajectory& traj, const KernelSpec& kernel,
         double bandwidth, double x_star) {
        return occupation_integral(
            traj, make_config(kernel, bandwidth, x_star, std::nullopt, 0.1));
      },
      py::arg("trajectory"), py::arg("kernel"), py::arg("bandwidth"),
      py::arg("x_star"), py::call_guard<py::gil_scoped_release>());

  m.def(
      "solve_limit_ode",
      [](const ModelSpec& model, double tol) {
        const FlowSolution sol = solve_limit_ode(model, tol);
        std::vector<double> t, x;
        for (const auto& p : sol.grid()) {
          t.push_back(p.t);
          x.push_back(p.x);
        }
        return py::make_tuple(to_array(t), to_array(x));
      },
      py::arg("model"), py::arg("tol") = 1e-9);

  m.def(
      "find_equilibria",
      [](const ModelSpec& model, double lo, double hi) {
        return find_equilibria(model, {lo, hi});
      },
      py::arg("model"), py::arg("lo"), py::arg("hi"));

  m.def("evaluate_big_f", &evaluate_big_f, py::arg("model"), py::arg("x"));
  m.def("clt_variance", &clt_variance, py::arg("model"), py::arg("x_star"),
        py::arg("kernel"));

  m.def(
      "extinction_lower_bound",
      [](int n, double r) {
        const ExtinctionBound b = extinction_lower_bound(n, r);
        return py::make_tuple(b.probability, b.log_probability);
      },
      py::arg("n"), py::arg("r"));

  m.def(
      "detect_extinction",
      [](const SystemTrajectory& traj, double quiet_horizon,
         double rate_epsilon) {
        const ExtinctionReport rep =
            detect_extinction(traj, quiet_horizon, rate_epsilon);
        py::dict out;
        out["extinct"] = rep.extinct;
        out["last_spike"] =
            rep.last_spike ? py::cast(*rep.last_spike) : py::none();
        out["terminal_rate"] = rep.terminal_rate;
        return out;
      },
      py::arg("trajectory"), py::arg("quiet_horizon") = -1.0,
      py::arg("rate_epsilon") = -1.0);
}
