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

// JSON and CSV forms of estimator and benchmark outputs.

#pragma once

#include <iosfwd>
#include <span>

#include "json.hpp"
#include "qpecal/bench.hpp"
#include "qpecal/estimators.hpp"
#include "qpecal/protocol.hpp"

namespace qpecal {

nlohmann::json to_json(const EstimateReport& report);
nlohmann::json to_json(const SweepResult& result, double eps_th);
nlohmann::json to_json(const ScalingRow& row);
nlohmann::json to_json(const Schedule& schedule);

/// `x,probability` rows, one per grid point.
void write_posterior_csv(std::ostream& out, const PosteriorGrid& posterior);

}  // namespace qpecal
