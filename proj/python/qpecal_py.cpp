// Copyright 2026 The qpecal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qpecal/bench.hpp"
#include "qpecal/estimators.hpp"
#include "qpecal/protocol.hpp"
#include "qpecal/random_source.hpp"
#include "qpecal/signal_model.hpp"

namespace py = pybind11;
using namespace qpecal;

namespace {

std::string repr(const RoundRecord& r) {
  std::ostringstream out;
  out << "RoundRecord(k=" << r.round << ", sequence='" << to_string(r.sequence) << "', shots=" << r.shots
      << ", ones=" << r.ones << ")";
  return out.str();
}

// Sweep settings arrive as keyword arguments so the Python side mirrors the
// CLI's config keys instead of a second struct definition.
SweepConfig sweep_config(const py::kwargs& kw) {
  SweepConfig c;
  for (const auto& [key_obj, value] : kw) {
    const std::string key = py::cast<std::string>(key_obj);
    if (key == "protocol") {
      c.protocol = parse_protocol(py::cast<std::string>(value));
    } else if (key == "family") {
      c.family = parse_model_family(py::cast<std::string>(value));
      if (c.family == ModelFamily::Ramsey && !kw.contains("likelihood")) c.likelihood = ModelFamily::Ramsey;
    } else if (key == "likelihood") {
      c.likelihood = parse_model_family(py::cast<std::string>(value));
    } else if (key == "theta") {
      c.theta = py::cast<double>(value);
    } else if (key == "d") {
      c.d = py::cast<int>(value);
    } else if (key == "trials") {
      c.trials = py::cast<int>(value);
    } else if (key == "rounds") {
      c.max_round = py::cast<int>(value);
    } else if (key == "shots") {
      if (py::isinstance<py::int_>(value)) {
        c.shots = {py::cast<std::uint64_t>(value)};
      } else {
        c.shots = py::cast<std::vector<std::uint64_t>>(value);
      }
    } else if (key == "depolarizing") {
      c.noise.depolarizing = py::cast<double>(value);
    } else if (key == "readout_flip") {
      c.noise.readout_flip = py::cast<double>(value);
    } else if (key == "eps_th") {
      c.eps_th = py::cast<double>(value);
    } else if (key == "seed") {
      c.base_seed = py::cast<std::uint64_t>(value);
    } else if (key == "artificial_offset") {
      c.artificial_offset = py::cast<double>(value);
    } else if (key == "delta_max") {
      c.delta_max = py::cast<double>(value);
    } else if (key == "beta") {
      c.beta = py::cast<double>(value);
    } else if (key == "ramsey_span") {
      c.ramsey_span = py::cast<double>(value);
    } else if (key == "grid_points") {
      c.brpe.n_points = py::cast<std::size_t>(value);
    } else if (key == "threads") {
      c.threads = py::cast<int>(value);
    } else {
      throw py::key_error("unknown sweep setting '" + key + "'");
    }
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust phase estimation and its Bayesian variant for single-qubit calibration";

  py::enum_<ModelFamily>(m, "ModelFamily")
      .value("IDEAL", ModelFamily::Ideal)
      .value("CSPAM", ModelFamily::Cspam)
      .value("RAMSEY", ModelFamily::Ramsey);
  py::enum_<Sequence>(m, "Sequence").value("A", Sequence::A).value("B", Sequence::B);

  py::class_<SignalModel>(m, "SignalModel")
      .def_static("ideal", &SignalModel::ideal, py::arg("theta") = kPi / 2, py::arg("offset") = 0.0)
      .def_static("cspam", &SignalModel::cspam, py::arg("theta") = kPi / 2, py::arg("offset") = 0.0)
      .def_static("ramsey", &SignalModel::ramsey, py::arg("base_wait"), py::arg("offset") = 0.0)
      .def_readonly("family", &SignalModel::family)
      .def_readonly("nominal_angle", &SignalModel::nominal_angle)
      .def_readonly("artificial_offset", &SignalModel::artificial_offset)
      .def_readonly("base_wait", &SignalModel::base_wait);

  py::class_<RoundRecord>(m, "RoundRecord")
      .def(py::init([](int k, const std::string& seq, std::uint64_t shots, std::uint64_t ones) {
             if (ones > shots) throw py::value_error("ones exceeds shots");
             return RoundRecord{k, parse_sequence(seq), shots, ones};
           }),
           py::arg("k"), py::arg("sequence"), py::arg("shots"), py::arg("ones"))
      .def_readonly("k", &RoundRecord::round)
      .def_readonly("sequence", &RoundRecord::sequence)
      .def_readonly("shots", &RoundRecord::shots)
      .def_readonly("ones", &RoundRecord::ones)
      .def("__eq__", [](const RoundRecord& a, const RoundRecord& b) { return a == b; })
      .def("__repr__", &repr);

  py::class_<Schedule>(m, "Schedule")
      .def_readonly("K", &Schedule::max_round)
      .def_readonly("shots", &Schedule::shots)
      .def_readonly("circuit_wait_times", &Schedule::wait_times)
      .def_readonly("delta_max", &Schedule::delta_max)
      .def_property_readonly("total_shots", &Schedule::total_shots)
      .def_property_readonly("wait_times", [](const Schedule& s) {
        std::vector<double> t;
        for (int k = 0; k < s.round_count() && !s.wait_times.empty(); ++k) t.push_back(s.ramsey_wait(k));
        return t;
      });

  py::class_<EstimateReport>(m, "EstimateReport")
      .def_readonly("protocol", &EstimateReport::protocol)
      .def_readonly("estimate", &EstimateReport::estimate)
      .def_readonly("confidence", &EstimateReport::confidence)
      .def_readonly("D", &EstimateReport::concentration)
      .def_readonly("sigma_peaks", &EstimateReport::peak_spread)
      .def_readonly("peaks", &EstimateReport::peaks)
      .def_readonly("per_round", &EstimateReport::per_round)
      .def_readonly("shots_used", &EstimateReport::shots_used);

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("delta", &SweepRow::delta)
      .def_readonly("n_trials", &SweepRow::n_trials)
      .def_readonly("mean_abs_err", &SweepRow::mean_abs_err)
      .def_readonly("std_err", &SweepRow::std_err)
      .def_readonly("failures", &SweepRow::failures);

  py::class_<SweepResult>(m, "SweepResult")
      .def_property_readonly("protocol", [](const SweepResult& r) { return std::string(to_string(r.protocol)); })
      .def_readonly("rows", &SweepResult::rows)
      .def_readonly("mean_abs_err", &SweepResult::mean_abs_err)
      .def_readonly("total_shots", &SweepResult::total_shots)
      .def_readonly("failures", &SweepResult::failures);

  py::class_<ScalingRow>(m, "ScalingRow")
      .def_property_readonly("protocol", [](const ScalingRow& r) { return std::string(to_string(r.protocol)); })
      .def_readonly("m_k", &ScalingRow::m_k)
      .def_readonly("sigma_bar", &ScalingRow::sigma_bar)
      .def_readonly("std_err", &ScalingRow::std_err)
      .def_readonly("batch_sigmas", &ScalingRow::batch_sigmas);

  m.def(
      "outcome_probability",
      [](const SignalModel& model, double candidate, int k, Sequence seq) {
        return outcome_probability(model, candidate, sequence_spec(model, k, seq));
      },
      py::arg("model"), py::arg("candidate"), py::arg("k"), py::arg("sequence"));
  m.def(
      "circuit_probability",
      [](const SignalModel& model, double truth, int k, Sequence seq, double depolarizing, double readout_flip) {
        return circuit_probability(model, truth, sequence_spec(model, k, seq), NoiseConfig{depolarizing, readout_flip});
      },
      py::arg("model"), py::arg("truth"), py::arg("k"), py::arg("sequence"), py::arg("depolarizing") = 0.0,
      py::arg("readout_flip") = 0.0);

  m.def("build_gate_schedule", py::overload_cast<int, std::uint64_t>(&build_gate_schedule), py::arg("K"),
        py::arg("shots"));
  m.def("build_ramsey_schedule", &build_ramsey_schedule, py::arg("delta_max"), py::arg("beta"), py::arg("shots"));

  m.def(
      "simulate",
      [](const Schedule& schedule, const SignalModel& model, double truth, std::uint64_t seed, double depolarizing,
         double readout_flip) {
        const SimulatorBackend backend(model, truth, NoiseConfig{depolarizing, readout_flip}, schedule.max_round);
        return execute(schedule, backend, RandomSource(seed));
      },
      py::arg("schedule"), py::arg("model"), py::arg("truth"), py::arg("seed") = 1, py::arg("depolarizing") = 0.0,
      py::arg("readout_flip") = 0.0, "Simulated counts for every round and sequence of a schedule.");
  m.def("analytic_records", &analytic_records, py::arg("schedule"), py::arg("model"), py::arg("truth"));
  m.def(
      "load_replay", [](const std::string& path) { return load_replay(path); }, py::arg("path"));

  m.def(
      "rpe_estimate",
      [](const std::vector<RoundRecord>& rounds, const SignalModel& model) { return rpe_estimate(rounds, model); },
      py::arg("rounds"), py::arg("model") = SignalModel::ideal());
  m.def(
      "brpe_estimate",
      [](const std::vector<RoundRecord>& rounds, const SignalModel& model, std::optional<std::size_t> n_points,
         std::optional<double> lo, std::optional<double> hi) {
        BrpeConfig c;
        c.n_points = n_points;
        c.lo = lo;
        c.hi = hi;
        return brpe_estimate(rounds, model, c);
      },
      py::arg("rounds"), py::arg("model") = SignalModel::ideal(), py::arg("grid_points") = py::none(),
      py::arg("lo") = py::none(), py::arg("hi") = py::none());
  m.def(
      "brpe_posterior",
      [](const std::vector<RoundRecord>& rounds, const SignalModel& model, std::optional<std::size_t> n_points) {
        BrpeConfig c;
        c.n_points = n_points;
        const BrpeResult r = brpe_run(rounds, model, c);
        std::vector<double> x(r.posterior.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = r.posterior.point(i);
        return py::make_tuple(x, r.posterior.probabilities());
      },
      py::arg("rounds"), py::arg("model") = SignalModel::ideal(), py::arg("grid_points") = py::none(),
      "Grid points and normalized probabilities of the final posterior.");
  m.def("confidence_score", &confidence_score, py::arg("D"), py::arg("sigma"), py::arg("sigma_max"));

  m.def(
      "run_sweep",
      [](const py::kwargs& kw) {
        const SweepConfig c = sweep_config(kw);
        py::gil_scoped_release release;
        return run_sweep(c);
      },
      "Monte Carlo accuracy sweep; keyword settings mirror the CLI config.");
  m.def(
      "scaling_study",
      [](double offset, std::vector<std::uint64_t> shot_counts, int trials, int replicates, const py::kwargs& kw) {
        ScalingConfig c;
        c.base = sweep_config(kw);
        c.offset = offset;
        c.shot_counts = std::move(shot_counts);
        c.trials = trials;
        c.replicates = replicates;
        py::gil_scoped_release release;
        return scaling_study(c);
      },
      py::arg("offset") = 0.201, py::arg("shot_counts") = std::vector<std::uint64_t>{6, 7, 8, 9},
      py::arg("trials") = 1000, py::arg("replicates") = 5);
  m.def("delta_threshold", &delta_threshold, py::arg("result"), py::arg("eps_th") = 0.02);
  m.def("fidelity_error", &fidelity_error, py::arg("eps"));

  py::register_exception<EstimationError>(m, "EstimationError", PyExc_RuntimeError);
  py::register_exception<ReplayError>(m, "ReplayError", PyExc_ValueError);
}
