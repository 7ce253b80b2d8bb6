#include "ctlqr/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "ctlqr/errors.hpp"
#include "ctlqr/system_io.hpp"

namespace ctlqr {

namespace {

using nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ordered_json config_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["system"] = cfg.system;
  j["horizon"] = cfg.horizon;
  j["dt"] = cfg.dt;
  j["noise_dt"] = cfg.noise_dt;
  j["gamma0"] = cfg.gamma0;
  j["growth"] = cfg.growth;
  j["replicates"] = cfg.replicates;
  j["base_seed"] = cfg.base_seed;
  j["coupled"] = cfg.coupled;
  j["oracle_safeguard"] = cfg.oracle_safeguard;
  j["ridge"] = cfg.ridge;
  j["initial_estimate_std"] = cfg.initial_estimate_std;
  j["blow_up_threshold"] = cfg.blow_up_threshold;
  j["max_resample"] = cfg.max_resample;
  if (cfg.checkpoints.empty()) {
    j["checkpoints"] = "auto";
  } else {
    j["checkpoints"] = cfg.checkpoints;
  }
  return j;
}

ExperimentConfig config_from(const ordered_json& j) {
  ExperimentConfig cfg;
  try {
    cfg.system = j.at("system").get<std::string>();
    cfg.horizon = j.at("horizon").get<double>();
    cfg.dt = j.at("dt").get<double>();
    cfg.noise_dt = j.at("noise_dt").get<double>();
    cfg.gamma0 = j.at("gamma0").get<double>();
    cfg.growth = j.at("growth").get<double>();
    cfg.replicates = j.at("replicates").get<int>();
    cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
    cfg.coupled = j.at("coupled").get<bool>();
    cfg.oracle_safeguard = j.at("oracle_safeguard").get<bool>();
    cfg.ridge = j.at("ridge").get<double>();
    cfg.initial_estimate_std = j.at("initial_estimate_std").get<double>();
    cfg.blow_up_threshold = j.at("blow_up_threshold").get<double>();
    cfg.max_resample = j.at("max_resample").get<int>();
    const auto& cp = j.at("checkpoints");
    if (cp.is_string()) {
      if (cp.get<std::string>() != "auto") {
        throw ConfigError("checkpoints must be \"auto\" or a list");
      }
    } else {
      cfg.checkpoints = cp.get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
  cfg.check();
  return cfg;
}

std::pair<Dynamics, CostSpec> resolve_system(const std::string& system) {
  if (system == "airplane") return airplane_model();
  try {
    return load_system(system);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void ExperimentConfig::check() const {
  if (system.empty()) throw ConfigError("system must be set");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (noise_dt < 0.0) throw ConfigError("noise_dt must be >= 0");
  if (!(gamma0 > 0.0)) throw ConfigError("gamma0 must be positive");
  if (!(growth > 1.0)) throw ConfigError("growth must exceed 1");
  if (!(horizon >= gamma0)) throw ConfigError("horizon must be >= gamma0");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (ridge < 0.0) throw ConfigError("ridge must be >= 0");
  if (initial_estimate_std < 0.0) {
    throw ConfigError("initial_estimate_std must be >= 0");
  }
  if (!(blow_up_threshold > 0.0)) {
    throw ConfigError("blow_up_threshold must be positive");
  }
  if (max_resample < 0) throw ConfigError("max_resample must be >= 0");
  for (double t : checkpoints) {
    if (!(t > 0.0) || t > horizon) {
      throw ConfigError("checkpoints must lie in (0, horizon]");
    }
  }
}

PolicyOptions ExperimentConfig::policy_options() const {
  PolicyOptions o;
  o.oracle_safeguard = oracle_safeguard;
  o.max_resample = max_resample;
  o.blow_up_threshold = blow_up_threshold;
  o.initial_estimate_std = initial_estimate_std;
  o.ridge = ridge;
  o.coupled = coupled;
  o.noise_dt = noise_dt;
  o.checkpoints = checkpoints;
  return o;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (key == "system") cfg.system = v;
    else if (key == "horizon") cfg.horizon = parse_double(key, v);
    else if (key == "dt") cfg.dt = parse_double(key, v);
    else if (key == "noise_dt") cfg.noise_dt = parse_double(key, v);
    else if (key == "gamma0") cfg.gamma0 = parse_double(key, v);
    else if (key == "growth") cfg.growth = parse_double(key, v);
    else if (key == "replicates") cfg.replicates = static_cast<int>(parse_u64(key, v));
    else if (key == "base_seed") cfg.base_seed = parse_u64(key, v);
    else if (key == "coupled") cfg.coupled = parse_bool(key, v);
    else if (key == "oracle_safeguard") cfg.oracle_safeguard = parse_bool(key, v);
    else if (key == "ridge") cfg.ridge = parse_double(key, v);
    else if (key == "initial_estimate_std") cfg.initial_estimate_std = parse_double(key, v);
    else if (key == "blow_up_threshold") cfg.blow_up_threshold = parse_double(key, v);
    else if (key == "max_resample") cfg.max_resample = static_cast<int>(parse_u64(key, v));
    else if (key == "checkpoints") {
      cfg.checkpoints.clear();
      if (v != "auto") {
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
          cfg.checkpoints.push_back(parse_double(key, trim(item)));
        }
      }
    } else {
      throw ConfigError("line " + std::to_string(number) + ": unknown key '" +
                        key + "'");
    }
  }
  cfg.check();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file", path);
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  out << "system = " << cfg.system << '\n'
      << "horizon = " << format_double(cfg.horizon) << '\n'
      << "dt = " << format_double(cfg.dt) << '\n'
      << "noise_dt = " << format_double(cfg.noise_dt) << '\n'
      << "gamma0 = " << format_double(cfg.gamma0) << '\n'
      << "growth = " << format_double(cfg.growth) << '\n'
      << "replicates = " << cfg.replicates << '\n'
      << "base_seed = " << cfg.base_seed << '\n'
      << "coupled = " << (cfg.coupled ? "true" : "false") << '\n'
      << "oracle_safeguard = " << (cfg.oracle_safeguard ? "true" : "false")
      << '\n'
      << "ridge = " << format_double(cfg.ridge) << '\n'
      << "initial_estimate_std = " << format_double(cfg.initial_estimate_std)
      << '\n'
      << "blow_up_threshold = " << format_double(cfg.blow_up_threshold)
      << '\n'
      << "max_resample = " << cfg.max_resample << '\n'
      << "checkpoints = ";
  if (cfg.checkpoints.empty()) {
    out << "auto";
  } else {
    for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
      out << (i ? "," : "") << format_double(cfg.checkpoints[i]);
    }
  }
  out << '\n';
}

std::string config_to_json(const ExperimentConfig& cfg) {
  return config_json(cfg).dump(2);
}

ExperimentConfig config_from_json(const std::string& json) {
  try {
    return config_from(ordered_json::parse(json));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
}

Dataset run_replicates(const ExperimentConfig& cfg, Execution execution) {
  cfg.check();
  const auto [dyn, cost] = resolve_system(cfg.system);
  const ValidationReport report = validate(dyn, cost);
  if (!report.pass()) {
    std::string why;
    for (const auto& f : report.failures) why += (why.empty() ? "" : "; ") + f;
    throw ConfigError("system fails validation: " + why);
  }
  const EpisodeSchedule sched = schedule(cfg.gamma0, cfg.growth, cfg.horizon);
  const PolicyOptions options = cfg.policy_options();

  Dataset data;
  data.config = cfg;
  data.runs.resize(static_cast<std::size_t>(cfg.replicates));
  auto run_one = [&](std::size_t i) {
    const std::uint64_t seed = cfg.base_seed + i;
    try {
      data.runs[i] = run_algorithm1(dyn, cost, sched, cfg.dt, seed, options);
    } catch (const std::exception& e) {
      RunRecord failed;
      failed.seed = seed;
      failed.dt = cfg.dt;
      failed.horizon = cfg.horizon;
      failed.status = RunRecord::Status::kAborted;
      failed.abort_reason = e.what();
      failed.events.push_back({0, SafeguardEvent::Kind::kAbort, e.what()});
      data.runs[i] = std::move(failed);
    }
  };
  const auto n = static_cast<std::int64_t>(cfg.replicates);
  if (execution == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
    for (std::int64_t i = 0; i < n; ++i) run_one(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < n; ++i) run_one(static_cast<std::size_t>(i));
  }
  return data;
}

std::string meta_json(const Dataset& data) {
  ordered_json j;
  j["artifact"] = "ctlqr";
  j["version"] = kArtifactVersion;
  j["config"] = config_json(data.config);
  ordered_json seeds = ordered_json::array();
  ordered_json status = ordered_json::array();
  for (const auto& run : data.runs) {
    seeds.push_back(run.seed);
    ordered_json s;
    s["seed"] = run.seed;
    s["status"] = run.ok() ? "ok" : "aborted";
    if (!run.ok()) s["reason"] = run.abort_reason;
    s["episodes"] = run.episodes.size();
    int resamples = 0;
    for (const auto& ev : run.events) {
      if (ev.kind == SafeguardEvent::Kind::kResample) ++resamples;
    }
    s["resamples"] = resamples;
    status.push_back(std::move(s));
  }
  j["seeds"] = std::move(seeds);
  j["replicates"] = std::move(status);
  j["config_format"] =
      "one 'key = value' per line with the config keys above; '#' starts a "
      "comment; checkpoints = auto | t1,t2,...";
  j["files"] = {
      {"regret.csv", {"replicate", "T", "regret", "normalized_regret"}},
      {"estimation.csv",
       {"replicate", "episode", "gamma_n", "est_error", "resamples"}}};
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_meta(const std::string& meta) {
  try {
    return config_from(ordered_json::parse(meta).at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad meta.json: ") + e.what());
  }
}

void emit_csv(const Dataset& data, const std::string& out_dir) {
  if (data.runs.empty()) throw ConfigError("dataset is empty");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory", out_dir);
  const std::filesystem::path dir(out_dir);

  auto open = [](const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write", path.string());
    return f;
  };

  {
    auto f = open(dir / "regret.csv");
    f << "replicate,T,regret,normalized_regret\n";
    for (std::size_t r = 0; r < data.runs.size(); ++r) {
      const RegretCurve& c = data.runs[r].regret;
      for (std::size_t i = 0; i < c.size(); ++i) {
        f << r << ',' << format_double(c.times[i]) << ','
          << format_double(c.regret[i]) << ','
          << format_double(c.normalized[i]) << '\n';
      }
    }
    if (!f) throw IoError("write failed", (dir / "regret.csv").string());
  }
  {
    auto f = open(dir / "estimation.csv");
    f << "replicate,episode,gamma_n,est_error,resamples\n";
    for (std::size_t r = 0; r < data.runs.size(); ++r) {
      for (const auto& ep : data.runs[r].episodes) {
        f << r << ',' << ep.index << ',' << format_double(ep.gamma_n) << ','
          << format_double(ep.estimation_error) << ',' << ep.resamples
          << '\n';
      }
    }
    if (!f) throw IoError("write failed", (dir / "estimation.csv").string());
  }
  {
    auto f = open(dir / "meta.json");
    f << meta_json(data);
    if (!f) throw IoError("write failed", (dir / "meta.json").string());
  }
}

}  // namespace ctlqr
