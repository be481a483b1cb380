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

#include "qpecal/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "qpecal/bench.hpp"
#include "qpecal/estimators.hpp"
#include "qpecal/format.hpp"
#include "qpecal/protocol.hpp"
#include "qpecal/report_io.hpp"

namespace qpecal::cli {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * kPi;

enum class Kind { UInt, Double, String, UIntOrList, UIntList };

struct KeyDef {
  std::string name;
  Kind kind;
  json default_value;  // null means "unset" (optional or derived)
  std::vector<std::string> aliases;
  std::vector<std::string> choices;
  std::string help;
};

const std::vector<std::pair<std::string, Subcommand>>& subcommand_names() {
  static const std::vector<std::pair<std::string, Subcommand>> names = {
      {"sweep", Subcommand::Sweep},
      {"scaling", Subcommand::Scaling},
      {"estimate", Subcommand::Estimate},
      {"posterior", Subcommand::Posterior},
      {"ramsey-schedule", Subcommand::RamseySchedule},
  };
  return names;
}

std::string valid_subcommands() {
  std::string out;
  for (const auto& [name, sub] : subcommand_names()) out += (out.empty() ? "" : ", ") + name;
  return out;
}

std::vector<KeyDef> simulation_keys() {
  return {
      {"protocol", Kind::String, "both", {}, {"rpe", "brpe", "both"}, "estimators to run"},
      {"family", Kind::String, "ideal", {}, {"ideal", "cspam", "ramsey"}, "simulated error model"},
      {"likelihood", Kind::String, nullptr, {}, {"ideal", "cspam", "ramsey"},
       "BRPE likelihood family (default: ramsey for ramsey sweeps, else ideal)"},
      {"theta_rad", Kind::Double, kPi / 2, {"--theta"}, {}, "nominal gate angle"},
      {"rounds", Kind::UInt, nullptr, {"--K"}, {}, "max round index K (default 11, or the Ramsey schedule's K)"},
      {"depolarizing_p", Kind::Double, 0.0, {"--depolarizing"}, {}, "depolarizing probability per gate"},
      {"readout_flip_p", Kind::Double, 0.0, {"--readout-flip"}, {}, "readout crossover probability"},
      {"depolarizing_placement", Kind::String, "per_gate", {}, {"per_gate", "per_sequence"},
       "apply the depolarizing channel after every gate or once per sequence"},
      {"eps_th_rad", Kind::Double, 0.02, {"--eps-th"}, {}, "failure threshold on mean absolute error"},
      {"seed", Kind::UInt, 1, {}, {}, "base seed (env QPECAL_SEED overrides the default)"},
      {"artificial_offset_rad", Kind::Double, 0.0, {"--artificial-offset"}, {}, "offset applied to gate and model"},
      {"delta_max_rad_s", Kind::Double, nullptr, {"--delta-max"}, {}, "Ramsey max detuning (rad/s)"},
      {"beta_s", Kind::Double, nullptr, {"--beta"}, {}, "Ramsey wait-time bound (s)"},
      {"ramsey_span_rad_s", Kind::Double, nullptr, {"--ramsey-span"}, {},
       "half-width of swept detunings (default 0.6 delta_max)"},
      {"grid_points", Kind::UInt, nullptr, {}, {}, "BRPE grid size (default max(4096, 2^(K+4)))"},
      {"sigma_max", Kind::Double, nullptr, {}, {}, "confidence threshold on peak spread"},
      {"peak_rel_height", Kind::Double, 0.1, {}, {}, "minimum relative peak height"},
      {"threads", Kind::UInt, 0, {}, {}, "worker threads (0 = auto)"},
  };
}

std::vector<KeyDef> keys_for(Subcommand sub) {
  std::vector<KeyDef> keys;
  switch (sub) {
    case Subcommand::Sweep:
      keys = simulation_keys();
      keys.push_back({"shots", Kind::UIntOrList, 8, {"--M"}, {}, "shots per sequence per round (one or K+1 values)"});
      keys.push_back({"d", Kind::UInt, 40, {}, {}, "offset grid divisor"});
      keys.push_back({"trials", Kind::UInt, 1000, {"--N"}, {}, "trials per offset"});
      keys.push_back({"csv", Kind::String, nullptr, {}, {}, "results CSV path"});
      keys.push_back({"out", Kind::String, nullptr, {}, {}, "JSON summary path"});
      break;
    case Subcommand::Scaling:
      keys = simulation_keys();
      keys.push_back({"offset_rad", Kind::Double, 0.201, {"--offset"}, {}, "fixed offset"});
      keys.push_back({"shots_list", Kind::UIntList, json::array({6, 7, 8, 9}), {}, {}, "M_k values"});
      keys.push_back({"trials", Kind::UInt, 1000, {"--N"}, {}, "estimates per batch"});
      keys.push_back({"replicates", Kind::UInt, 5, {}, {}, "batches per M_k"});
      keys.push_back({"csv", Kind::String, nullptr, {}, {}, "scaling CSV path"});
      keys.push_back({"out", Kind::String, nullptr, {}, {}, "JSON summary path"});
      break;
    case Subcommand::Estimate:
    case Subcommand::Posterior:
      keys = {
          {"counts", Kind::String, nullptr, {}, {}, "replay CSV (k,sequence,shots,ones)"},
          {"protocol", Kind::String, "gate", {}, {"gate", "ramsey"}, "experiment kind"},
          {"likelihood", Kind::String, "ideal", {}, {"ideal", "cspam"}, "gate likelihood family"},
          {"theta_rad", Kind::Double, kPi / 2, {"--theta"}, {}, "nominal gate angle"},
          {"artificial_offset_rad", Kind::Double, 0.0, {"--artificial-offset"}, {}, "offset applied to the model"},
          {"delta_max_rad_s", Kind::Double, nullptr, {"--delta-max"}, {}, "Ramsey max detuning (rad/s)"},
          {"grid_points", Kind::UInt, nullptr, {}, {}, "BRPE grid size"},
          {"grid_lo", Kind::Double, nullptr, {}, {}, "grid lower bound"},
          {"grid_hi", Kind::Double, nullptr, {}, {}, "grid upper bound"},
          {"sigma_max", Kind::Double, nullptr, {}, {}, "confidence threshold on peak spread"},
          {"window", Kind::Double, nullptr, {}, {}, "concentration window"},
          {"peak_rel_height", Kind::Double, 0.1, {}, {}, "minimum relative peak height"},
          {"out", Kind::String, nullptr, {}, {},
           sub == Subcommand::Estimate ? "JSON report path" : "posterior CSV path (default stdout)"},
      };
      if (sub == Subcommand::Estimate) {
        keys.push_back({"estimator", Kind::String, "brpe", {}, {"rpe", "brpe"}, "post-processing"});
      }
      break;
    case Subcommand::RamseySchedule:
      keys = {
          {"delta_max_rad_s", Kind::Double, nullptr, {"--delta-max"}, {}, "max detuning (rad/s)"},
          {"beta_s", Kind::Double, nullptr, {"--beta"}, {}, "wait-time bound (s)"},
          {"shots", Kind::UInt, 9, {"--M"}, {}, "shots per sequence per round"},
          {"out", Kind::String, nullptr, {}, {}, "JSON schedule path"},
      };
      break;
  }
  return keys;
}

std::string flag_of(const std::string& key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

std::optional<std::uint64_t> parse_u64(std::string_view text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<double> parse_f64(std::string_view text) {
  double v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

json convert_flag(const KeyDef& key, const std::string& text) {
  auto fail = [&](const std::string& want) {
    return UsageError("field '" + key.name + "': expected " + want + ", got '" + text + "'");
  };
  switch (key.kind) {
    case Kind::UInt: {
      auto v = parse_u64(text);
      if (!v) throw fail("a non-negative integer");
      return *v;
    }
    case Kind::Double: {
      auto v = parse_f64(text);
      if (!v) throw fail("a number");
      return *v;
    }
    case Kind::String:
      return text;
    case Kind::UIntOrList:
    case Kind::UIntList: {
      json arr = json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        auto v = parse_u64(item);
        if (!v) throw fail("a comma-separated list of non-negative integers");
        arr.push_back(*v);
      }
      if (arr.empty()) throw fail("at least one value");
      if (key.kind == Kind::UIntOrList && arr.size() == 1) return arr[0];
      return arr;
    }
  }
  return nullptr;
}

json convert_file_value(const KeyDef& key, const json& v) {
  if (v.is_null()) return v;
  auto fail = [&](const std::string& want) {
    return UsageError("field '" + key.name + "': expected " + want + ", got " + v.dump());
  };
  auto as_uint = [&](const json& x) -> json {
    if (x.is_number_unsigned()) return x.get<std::uint64_t>();
    if (x.is_number_integer() && x.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(x.get<std::int64_t>());
    throw fail("a non-negative integer");
  };
  switch (key.kind) {
    case Kind::UInt:
      return as_uint(v);
    case Kind::Double:
      if (!v.is_number()) throw fail("a number");
      return v.get<double>();
    case Kind::String:
      if (!v.is_string()) throw fail("a string");
      return v;
    case Kind::UIntOrList:
    case Kind::UIntList: {
      if (!v.is_array()) {
        if (key.kind == Kind::UIntList) throw fail("a list of non-negative integers");
        return as_uint(v);
      }
      if (v.empty()) throw fail("a non-empty list");
      json arr = json::array();
      for (const auto& x : v) arr.push_back(as_uint(x));
      if (key.kind == Kind::UIntOrList && arr.size() == 1) return arr[0];
      return arr;
    }
  }
  return nullptr;
}

void check_choice(const KeyDef& key, const json& v) {
  if (key.choices.empty() || v.is_null()) return;
  const std::string s = v.get<std::string>();
  if (std::find(key.choices.begin(), key.choices.end(), s) == key.choices.end()) {
    std::string list;
    for (const auto& c : key.choices) list += (list.empty() ? "" : ", ") + c;
    throw UsageError("field '" + key.name + "': '" + s + "' is not one of " + list);
  }
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

template <typename T>
std::optional<T> opt(const json& s, const char* key) {
  if (!s.contains(key) || s.at(key).is_null()) return std::nullopt;
  return s.at(key).get<T>();
}

std::vector<std::uint64_t> shots_of(const json& v) {
  if (v.is_array()) return v.get<std::vector<std::uint64_t>>();
  return {v.get<std::uint64_t>()};
}

BrpeConfig brpe_config_of(const json& s) {
  BrpeConfig c;
  if (auto n = opt<std::uint64_t>(s, "grid_points")) c.n_points = static_cast<std::size_t>(*n);
  c.sigma_max = opt<double>(s, "sigma_max");
  c.window = opt<double>(s, "window");
  c.lo = opt<double>(s, "grid_lo");
  c.hi = opt<double>(s, "grid_hi");
  c.peak_rel_height = s.at("peak_rel_height").get<double>();
  return c;
}

SweepConfig sweep_config_of(const json& s) {
  SweepConfig c;
  c.protocol = parse_protocol(s.at("protocol").get<std::string>());
  c.family = parse_model_family(s.at("family").get<std::string>());
  c.likelihood = parse_model_family(s.at("likelihood").get<std::string>());
  c.theta = s.at("theta_rad").get<double>();
  c.max_round = static_cast<int>(s.at("rounds").get<std::uint64_t>());
  c.noise.depolarizing = s.at("depolarizing_p").get<double>();
  c.noise.readout_flip = s.at("readout_flip_p").get<double>();
  c.noise.placement = parse_depolarizing_placement(s.at("depolarizing_placement").get<std::string>());
  c.eps_th = s.at("eps_th_rad").get<double>();
  c.base_seed = s.at("seed").get<std::uint64_t>();
  c.artificial_offset = s.at("artificial_offset_rad").get<double>();
  c.delta_max = opt<double>(s, "delta_max_rad_s").value_or(0.0);
  c.beta = opt<double>(s, "beta_s").value_or(0.0);
  c.ramsey_span = opt<double>(s, "ramsey_span_rad_s").value_or(0.0);
  c.brpe = brpe_config_of(s);
  c.threads = static_cast<int>(s.at("threads").get<std::uint64_t>());
  if (s.contains("shots")) c.shots = shots_of(s.at("shots"));
  if (s.contains("d")) c.d = static_cast<int>(s.at("d").get<std::uint64_t>());
  if (s.contains("trials")) c.trials = static_cast<int>(s.at("trials").get<std::uint64_t>());
  return c;
}

ScalingConfig scaling_config_of(const json& s) {
  ScalingConfig c;
  c.base = sweep_config_of(s);
  c.offset = s.at("offset_rad").get<double>();
  c.shot_counts = s.at("shots_list").get<std::vector<std::uint64_t>>();
  c.trials = static_cast<int>(s.at("trials").get<std::uint64_t>());
  c.replicates = static_cast<int>(s.at("replicates").get<std::uint64_t>());
  return c;
}

// Fills derived defaults and checks the resolved settings against the
// modules' preconditions.
void finish_settings(Subcommand sub, json& s) {
  auto require = [&](const char* key) {
    if (s.at(key).is_null()) throw UsageError("missing required field '" + std::string(key) + "'");
  };
  try {
    switch (sub) {
      case Subcommand::Sweep:
      case Subcommand::Scaling: {
        const bool ramsey = s.at("family") == "ramsey";
        if (s.at("likelihood").is_null()) s["likelihood"] = ramsey ? "ramsey" : "ideal";
        if (ramsey) {
          require("delta_max_rad_s");
          require("beta_s");
          const Schedule schedule =
              build_ramsey_schedule(s.at("delta_max_rad_s").get<double>(), s.at("beta_s").get<double>(), 1);
          if (s.at("rounds").is_null()) s["rounds"] = static_cast<std::uint64_t>(schedule.max_round);
          if (s.at("ramsey_span_rad_s").is_null()) s["ramsey_span_rad_s"] = 0.6 * s.at("delta_max_rad_s").get<double>();
        } else if (s.at("rounds").is_null()) {
          s["rounds"] = std::uint64_t{11};
        }
        if (sub == Subcommand::Sweep) {
          sweep_config_of(s).validate();
        } else {
          scaling_config_of(s).validate();
        }
        break;
      }
      case Subcommand::Estimate:
      case Subcommand::Posterior: {
        require("counts");
        if (s.at("protocol") == "ramsey") {
          require("delta_max_rad_s");
          if (!(s.at("delta_max_rad_s").get<double>() > 0.0)) throw UsageError("field 'delta_max_rad_s' must be > 0");
        }
        if (!(s.at("theta_rad").get<double>() > 0.0)) throw UsageError("field 'theta_rad' must be > 0");
        resolve_brpe_config(brpe_config_of(s), SignalModel::ideal(), 0);
        break;
      }
      case Subcommand::RamseySchedule:
        require("delta_max_rad_s");
        require("beta_s");
        build_ramsey_schedule(s.at("delta_max_rad_s").get<double>(), s.at("beta_s").get<double>(),
                              s.at("shots").get<std::uint64_t>());
        break;
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
}

Subcommand lookup_subcommand(const std::string& name) {
  for (const auto& [n, sub] : subcommand_names()) {
    if (n == name) return sub;
  }
  throw UsageError("unknown subcommand '" + name + "'; valid subcommands: " + valid_subcommands());
}

CliConfig parse_impl(std::span<const std::string> args, const json* file_doc) {
  if (args.empty()) throw UsageError("missing subcommand; valid subcommands: " + valid_subcommands());
  if (args[0] == "--help" || args[0] == "-h") {
    CliConfig c;
    c.help_only = true;
    c.help_text = "usage: qpecal <subcommand> [options]\nsubcommands: " + valid_subcommands() + "\n";
    return c;
  }
  const Subcommand sub = lookup_subcommand(args[0]);
  const std::vector<KeyDef> keys = keys_for(sub);

  CLI::App app("qpecal " + args[0], "qpecal " + args[0]);
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> options;
  for (const auto& key : keys) {
    std::string names = flag_of(key.name);
    for (const auto& alias : key.aliases) names += "," + alias;
    options[key.name] = app.add_option(names, raw[key.name], key.help);
  }
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");
  std::string delta_max_hz;
  CLI::Option* hz_option = nullptr;
  if (std::any_of(keys.begin(), keys.end(), [](const KeyDef& k) { return k.name == "delta_max_rad_s"; })) {
    hz_option = app.add_option("--delta-max-hz", delta_max_hz, "max detuning in Hz (converted by 2 pi)");
  }

  std::vector<std::string> rest(args.begin() + 1, args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    CliConfig c;
    c.subcommand = sub;
    c.help_only = true;
    c.help_text = app.help();
    return c;
  } catch (const CLI::ParseError& e) {
    throw UsageError(args[0] + ": " + e.what());
  }

  json settings = json::object();
  for (const auto& key : keys) settings[key.name] = key.default_value;

  if (const char* env = std::getenv("QPECAL_SEED"); env && settings.contains("seed")) {
    auto v = parse_u64(env);
    if (!v) throw UsageError("QPECAL_SEED must be a non-negative integer, got '" + std::string(env) + "'");
    settings["seed"] = *v;
  }

  json file;
  if (file_doc) {
    file = *file_doc;
  } else if (!config_path.empty()) {
    file = load_config_file(config_path);
  }
  if (!file.is_null()) {
    if (!file.is_object()) throw UsageError("config document must be a JSON object");
    // Short symbolic names accepted in config files alongside the long ones.
    static const std::map<std::string, std::string> file_aliases = {{"N", "trials"}, {"M_k", "shots"}, {"K", "rounds"}};
    for (const auto& [raw_name, value] : file.items()) {
      auto alias = file_aliases.find(raw_name);
      const std::string name = alias != file_aliases.end() ? alias->second : raw_name;
      if (name == "subcommand") {
        if (value != args[0]) throw UsageError("config file is for subcommand " + value.dump() + ", not " + args[0]);
        continue;
      }
      auto it = std::find_if(keys.begin(), keys.end(), [&](const KeyDef& k) { return k.name == name; });
      if (it == keys.end()) throw UsageError("unknown key '" + name + "' for subcommand " + args[0]);
      settings[name] = convert_file_value(*it, value);
    }
  }

  for (const auto& key : keys) {
    if (options[key.name]->count() > 0) settings[key.name] = convert_flag(key, raw[key.name]);
  }
  if (hz_option && hz_option->count() > 0) {
    if (options["delta_max_rad_s"]->count() > 0) throw UsageError("give --delta-max or --delta-max-hz, not both");
    auto hz = parse_f64(delta_max_hz);
    if (!hz) throw UsageError("field 'delta_max_hz': expected a number, got '" + delta_max_hz + "'");
    settings["delta_max_rad_s"] = *hz * kTwoPi;
  }
  for (const auto& key : keys) check_choice(key, settings[key.name]);

  finish_settings(sub, settings);
  CliConfig c;
  c.subcommand = sub;
  c.settings = std::move(settings);
  return c;
}

// Output files are staged next to their destination and renamed into place
// only after every file has been written.
class OutputSet {
 public:
  ~OutputSet() {
    for (const auto& [tmp, dest] : staged_) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
    }
  }

  void stage(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    staged_.emplace_back(tmp, path);
    f << content;
    f.close();
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
  }

  void commit() {
    for (const auto& [tmp, dest] : staged_) std::filesystem::rename(tmp, dest);
    staged_.clear();
  }

 private:
  std::vector<std::pair<std::string, std::string>> staged_;
};

std::string fmt(double x) { return format_double(x); }

std::vector<RoundRecord> load_counts(const json& s) {
  try {
    return load_replay(s.at("counts").get<std::string>());
  } catch (const ReplayError& e) {
    throw DataError(e.what());
  }
}

SignalModel estimation_model(const json& s) {
  const double offset = s.at("artificial_offset_rad").get<double>();
  if (s.at("protocol") == "ramsey") return SignalModel::ramsey(1.0 / s.at("delta_max_rad_s").get<double>(), offset);
  return {parse_model_family(s.at("likelihood").get<std::string>()), s.at("theta_rad").get<double>(), offset, 0.0};
}

void print_report(std::ostream& out, const EstimateReport& r) {
  out << "estimator: " << r.protocol << "\n";
  out << "estimate: " << fmt(r.estimate) << "\n";
  out << "confidence: " << std::fixed << std::setprecision(4) << r.confidence << std::defaultfloat << "\n";
  if (r.protocol == "brpe") {
    out << "D: " << fmt(r.concentration) << "\n";
    out << "sigma_peaks: " << fmt(r.peak_spread) << "\n";
    out << "peaks:";
    for (double p : r.peaks) out << ' ' << fmt(p);
    out << "\n";
  }
  out << "shots_used: " << r.shots_used << "\n";
}

int run_sweep_cmd(const CliConfig& config, std::ostream& out) {
  const json& s = config.settings;
  const SweepConfig sweep = sweep_config_of(s);
  const auto results = run_sweep(sweep);
  OutputSet files;
  if (auto csv = opt<std::string>(s, "csv")) {
    std::ostringstream buf;
    write_sweep_csv(buf, results);
    files.stage(*csv, buf.str());
  }
  json summary = {{"config", config.echo()}, {"shots_per_trial", sweep.schedule().total_shots()}};
  json per = json::array();
  for (const auto& r : results) per.push_back(to_json(r, sweep.eps_th));
  summary["results"] = per;
  if (auto path = opt<std::string>(s, "out")) files.stage(*path, summary.dump(2) + "\n");
  files.commit();

  out << "sweep: family=" << s.at("family").get<std::string>() << " d=" << sweep.d << " N=" << sweep.trials
      << " K=" << sweep.max_round << " shots/trial=" << sweep.schedule().total_shots() << "\n";
  for (const auto& r : results) {
    const auto th = delta_threshold(r, sweep.eps_th);
    out << to_string(r.protocol) << ": mean_abs_err=" << fmt(r.mean_abs_err)
        << " delta_th=" << (th ? fmt(*th) : std::string("none")) << " failures=" << r.failures
        << " total_shots=" << r.total_shots << "\n";
  }
  return kExitOk;
}

int run_scaling_cmd(const CliConfig& config, std::ostream& out) {
  const json& s = config.settings;
  const ScalingConfig scaling = scaling_config_of(s);
  const auto rows = scaling_study(scaling);
  OutputSet files;
  if (auto csv = opt<std::string>(s, "csv")) {
    std::ostringstream buf;
    write_scaling_csv(buf, rows);
    files.stage(*csv, buf.str());
  }
  json arr = json::array();
  for (const auto& r : rows) arr.push_back(to_json(r));
  if (auto path = opt<std::string>(s, "out")) {
    files.stage(*path, json{{"config", config.echo()}, {"rows", arr}}.dump(2) + "\n");
  }
  files.commit();
  for (const auto& r : rows) {
    out << to_string(r.protocol) << " m_k=" << r.m_k << " sigma_bar=" << fmt(r.sigma_bar)
        << " std_err=" << fmt(r.std_err) << "\n";
  }
  return kExitOk;
}

int run_estimate_cmd(const CliConfig& config, std::ostream& out) {
  const json& s = config.settings;
  const auto records = load_counts(s);
  const SignalModel model = estimation_model(s);
  EstimateReport report;
  try {
    if (s.at("estimator") == "rpe") {
      report = rpe_estimate(records, model);
    } else {
      report = brpe_estimate(records, model, brpe_config_of(s));
    }
  } catch (const EstimationError& e) {
    throw DataError(e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  OutputSet files;
  if (auto path = opt<std::string>(s, "out")) {
    files.stage(*path, json{{"config", config.echo()}, {"report", to_json(report)}}.dump(2) + "\n");
  }
  files.commit();
  print_report(out, report);
  return kExitOk;
}

int run_posterior_cmd(const CliConfig& config, std::ostream& out) {
  const json& s = config.settings;
  const auto records = load_counts(s);
  const SignalModel model = estimation_model(s);
  std::optional<BrpeResult> result;
  try {
    result.emplace(brpe_run(records, model, brpe_config_of(s)));
  } catch (const EstimationError& e) {
    throw DataError(e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  std::ostringstream csv;
  write_posterior_csv(csv, result->posterior);
  if (auto path = opt<std::string>(s, "out")) {
    OutputSet files;
    files.stage(*path, csv.str());
    files.commit();
    print_report(out, result->report);
  } else {
    out << csv.str();
  }
  return kExitOk;
}

int run_ramsey_schedule_cmd(const CliConfig& config, std::ostream& out) {
  const json& s = config.settings;
  const Schedule schedule = build_ramsey_schedule(s.at("delta_max_rad_s").get<double>(), s.at("beta_s").get<double>(),
                                                  s.at("shots").get<std::uint64_t>());
  OutputSet files;
  if (auto path = opt<std::string>(s, "out")) {
    files.stage(*path, json{{"config", config.echo()}, {"schedule", to_json(schedule)}}.dump(2) + "\n");
  }
  files.commit();
  out << "K=" << schedule.max_round << "\n";
  for (int k = 0; k <= schedule.max_round; ++k) out << "t_" << k << "=" << fmt(schedule.ramsey_wait(k)) << " s\n";
  out << "total_shots=" << schedule.total_shots() << "\n";
  return kExitOk;
}

}  // namespace

std::string_view to_string(Subcommand subcommand) {
  for (const auto& [name, sub] : subcommand_names()) {
    if (sub == subcommand) return name;
  }
  return "?";
}

nlohmann::json CliConfig::echo() const {
  json e = settings;
  e["subcommand"] = std::string(to_string(subcommand));
  return e;
}

CliConfig parse_config(std::span<const std::string> args) { return parse_impl(args, nullptr); }

CliConfig parse_config(std::span<const std::string> args, const nlohmann::json& file) {
  return parse_impl(args, &file);
}

int dispatch(const CliConfig& config, std::ostream& out, std::ostream& err) {
  if (config.help_only) {
    out << config.help_text;
    return kExitOk;
  }
  try {
    switch (config.subcommand) {
      case Subcommand::Sweep:
        return run_sweep_cmd(config, out);
      case Subcommand::Scaling:
        return run_scaling_cmd(config, out);
      case Subcommand::Estimate:
        return run_estimate_cmd(config, out);
      case Subcommand::Posterior:
        return run_posterior_cmd(config, out);
      case Subcommand::RamseySchedule:
        return run_ramsey_schedule_cmd(config, out);
    }
  } catch (const UsageError& e) {
    err << "qpecal: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "qpecal: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "qpecal: error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CliConfig config;
  try {
    config = parse_config(args);
  } catch (const UsageError& e) {
    err << "qpecal: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "qpecal: error: " << e.what() << "\n";
    return kExitInternal;
  }
  return dispatch(config, out, err);
}

}  // namespace qpecal::cli
