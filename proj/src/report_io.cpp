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

#include "qpecal/report_io.hpp"

#include <cmath>
#include <ostream>

#include "qpecal/format.hpp"

namespace qpecal {

namespace {

// JSON has no NaN; missing values become null.
nlohmann::json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

}  // namespace

nlohmann::json to_json(const EstimateReport& report) {
  return {
      {"protocol", report.protocol},
      {"estimate", number(report.estimate)},
      {"confidence", number(report.confidence)},
      {"D", number(report.concentration)},
      {"sigma_peaks", number(report.peak_spread)},
      {"peaks", report.peaks},
      {"per_round", report.per_round},
      {"shots_used", report.shots_used},
  };
}

nlohmann::json to_json(const SweepResult& result, double eps_th) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.rows) {
    rows.push_back({{"delta", row.delta},
                    {"n_trials", row.n_trials},
                    {"mean_abs_err", number(row.mean_abs_err)},
                    {"std_err", number(row.std_err)},
                    {"failures", row.failures}});
  }
  const auto threshold = delta_threshold(result, eps_th);
  return {
      {"protocol", to_string(result.protocol)},
      {"mean_abs_err", number(result.mean_abs_err)},
      {"fidelity_error", std::isfinite(result.mean_abs_err) ? number(fidelity_error(result.mean_abs_err)) : nullptr},
      {"delta_th", threshold ? nlohmann::json(*threshold) : nlohmann::json(nullptr)},
      {"total_shots", result.total_shots},
      {"failures", result.failures},
      {"rows", rows},
  };
}

nlohmann::json to_json(const ScalingRow& row) {
  return {{"protocol", to_string(row.protocol)},
          {"m_k", row.m_k},
          {"sigma_bar", number(row.sigma_bar)},
          {"std_err", number(row.std_err)},
          {"batch_sigmas", row.batch_sigmas},
          {"failures", row.failures}};
}

nlohmann::json to_json(const Schedule& schedule) {
  nlohmann::json out = {
      {"kind", schedule.kind == ScheduleKind::Gate ? "gate" : "ramsey"},
      {"K", schedule.max_round},
      {"shots_per_round", schedule.shots},
      {"total_shots", schedule.total_shots()},
  };
  if (schedule.kind == ScheduleKind::Ramsey) {
    std::vector<double> t;
    for (int k = 0; k <= schedule.max_round; ++k) t.push_back(schedule.ramsey_wait(k));
    out["delta_max_rad_s"] = schedule.delta_max;
    out["wait_times_s"] = t;
    out["circuit_wait_times_s"] = schedule.wait_times;
  }
  return out;
}

void write_posterior_csv(std::ostream& out, const PosteriorGrid& posterior) {
  out << "x,probability\n";
  const auto w = posterior.log_weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    out << format_double(posterior.point(i)) << ',' << format_double(std::exp(w[i])) << '\n';
  }
}

}  // namespace qpecal
