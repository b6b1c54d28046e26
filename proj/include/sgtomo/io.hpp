// io.hpp
// Config file parsing, trajectory CSV and summary JSON emission. Configs are
// JSON with strict field validation; unknown or ill-typed fields are
// reported by name. Output files carry the seed, a config hash and the
// library version so any run can be re-executed exactly.

#pragma once

#include <sgtomo/bench.hpp>

#include <json.hpp>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sgtomo {

inline constexpr const char* kVersion = "0.1.0";

// Schema violation: carries the offending field for exit-code-2 diagnostics.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& field, const std::string& reason)
      : std::runtime_error("config field '" + field + "': " + reason), field_name(field) {}
  std::string field_name;
};

// A parsed experiment config. Unset optional fields fall back to the
// experiment kind's defaults when resolved into an ExperimentSpec, and are
// omitted again on serialization, so parse -> serialize -> parse is lossless.
struct RunConfig {
  ExperimentKind kind = ExperimentKind::OneQubitLowCount;
  std::uint64_t seed = 1;
  std::optional<int> repetitions;
  std::optional<int> iterations;
  std::optional<double> lambda;
  std::optional<PhotonAccounting> accounting;
  std::optional<std::vector<double>> error_levels;
  std::optional<std::vector<int>> subset_sizes;
  std::optional<std::vector<int>> checkpoints;
  std::optional<int> pauli_subset_size;
  std::optional<GainSchedule> gains;
  std::optional<BenchmarkMode> benchmark_mode;
  std::optional<WaveplateErrorModel::Redraw> error_redraw;
  std::optional<std::vector<std::vector<Complex>>> targets;  // amplitude lists
  std::string output_directory = "runs/out";
  std::vector<std::string> output_formats = {"csv", "json"};

  bool operator==(const RunConfig& other) const = default;
};

namespace io_detail {

inline void expect_type(const nlohmann::json& j, const std::string& field, bool ok,
                        const char* wanted) {
  if (!ok) throw config_error(field, std::string("expected ") + wanted);
}

inline double get_number(const nlohmann::json& j, const std::string& field) {
  expect_type(j, field, j.is_number(), "a number");
  return j.get<double>();
}

inline int get_int(const nlohmann::json& j, const std::string& field) {
  expect_type(j, field, j.is_number_integer(), "an integer");
  return j.get<int>();
}

}  // namespace io_detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using nlohmann::json;
  if (!j.is_object()) throw config_error("<root>", "expected a JSON object");

  static const std::vector<std::string> known = {
      "experiment",      "seed",          "repetitions",     "iterations",
      "lambda",          "accounting",    "error_levels",    "subset_sizes",
      "checkpoints",     "pauli_subset_size", "gains",       "benchmark",
      "error_redraw",    "targets",       "output_directory", "output_formats"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw config_error(it.key(), "unknown field");
    }
  }

  RunConfig cfg;
  if (!j.contains("experiment")) throw config_error("experiment", "required field missing");
  io_detail::expect_type(j["experiment"], "experiment", j["experiment"].is_string(),
                         "a string");
  try {
    cfg.kind = experiment_from_name(j["experiment"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw config_error("experiment", e.what());
  }

  if (j.contains("seed")) {
    io_detail::expect_type(j["seed"], "seed", j["seed"].is_number_unsigned(),
                           "a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("repetitions")) cfg.repetitions = io_detail::get_int(j["repetitions"], "repetitions");
  if (j.contains("iterations")) cfg.iterations = io_detail::get_int(j["iterations"], "iterations");
  if (j.contains("lambda")) cfg.lambda = io_detail::get_number(j["lambda"], "lambda");
  if (j.contains("pauli_subset_size")) {
    cfg.pauli_subset_size = io_detail::get_int(j["pauli_subset_size"], "pauli_subset_size");
  }

  if (j.contains("accounting")) {
    io_detail::expect_type(j["accounting"], "accounting", j["accounting"].is_string(),
                           "a string");
    const std::string mode = j["accounting"].get<std::string>();
    if (mode == "per-expectation") cfg.accounting = PhotonAccounting::PerExpectation;
    else if (mode == "per-iteration-split") cfg.accounting = PhotonAccounting::PerIterationSplit;
    else throw config_error("accounting", "must be per-expectation or per-iteration-split");
  }

  auto parse_double_list = [&](const json& node, const std::string& field) {
    io_detail::expect_type(node, field, node.is_array(), "an array of numbers");
    std::vector<double> out;
    for (const auto& x : node) {
      io_detail::expect_type(x, field, x.is_number(), "an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  };
  auto parse_int_list = [&](const json& node, const std::string& field) {
    io_detail::expect_type(node, field, node.is_array(), "an array of integers");
    std::vector<int> out;
    for (const auto& x : node) {
      io_detail::expect_type(x, field, x.is_number_integer(), "an array of integers");
      out.push_back(x.get<int>());
    }
    return out;
  };

  if (j.contains("error_levels")) cfg.error_levels = parse_double_list(j["error_levels"], "error_levels");
  if (j.contains("subset_sizes")) cfg.subset_sizes = parse_int_list(j["subset_sizes"], "subset_sizes");
  if (j.contains("checkpoints")) cfg.checkpoints = parse_int_list(j["checkpoints"], "checkpoints");

  if (j.contains("gains")) {
    const json& g = j["gains"];
    io_detail::expect_type(g, "gains", g.is_object(), "an object {a, b, A, s, t}");
    GainSchedule gains;
    for (auto it = g.begin(); it != g.end(); ++it) {
      const std::string key = it.key();
      const double value = io_detail::get_number(it.value(), "gains." + key);
      if (key == "a") gains.a = value;
      else if (key == "b") gains.b = value;
      else if (key == "A") gains.A = value;
      else if (key == "s") gains.s = value;
      else if (key == "t") gains.t = value;
      else throw config_error("gains." + key, "unknown field");
    }
    try {
      gains.validate();
    } catch (const std::invalid_argument& e) {
      throw config_error("gains", e.what());
    }
    cfg.gains = gains;
  }

  if (j.contains("benchmark")) {
    io_detail::expect_type(j["benchmark"], "benchmark", j["benchmark"].is_string(), "a string");
    const std::string mode = j["benchmark"].get<std::string>();
    if (mode == "exact-truth") cfg.benchmark_mode = BenchmarkMode::ExactTruth;
    else if (mode == "simulated-long-sqt") cfg.benchmark_mode = BenchmarkMode::SimulatedLongSqt;
    else throw config_error("benchmark", "must be exact-truth or simulated-long-sqt");
  }

  if (j.contains("error_redraw")) {
    io_detail::expect_type(j["error_redraw"], "error_redraw", j["error_redraw"].is_string(),
                           "a string");
    const std::string mode = j["error_redraw"].get<std::string>();
    if (mode == "per-measurement") cfg.error_redraw = WaveplateErrorModel::Redraw::PerMeasurement;
    else if (mode == "per-run") cfg.error_redraw = WaveplateErrorModel::Redraw::PerRun;
    else throw config_error("error_redraw", "must be per-measurement or per-run");
  }

  if (j.contains("targets")) {
    const json& t = j["targets"];
    if (t.is_string()) {
      if (t.get<std::string>() != "default") {
        throw config_error("targets", "must be \"default\" or an array of amplitude lists");
      }
    } else {
      io_detail::expect_type(t, "targets", t.is_array(), "an array of amplitude lists");
      std::vector<std::vector<Complex>> targets;
      for (const auto& state : t) {
        io_detail::expect_type(state, "targets", state.is_array(), "an array of [re, im] pairs");
        std::vector<Complex> amps;
        for (const auto& amp : state) {
          if (!amp.is_array() || amp.size() != 2 || !amp[0].is_number() || !amp[1].is_number()) {
            throw config_error("targets", "each amplitude must be an [re, im] pair");
          }
          amps.emplace_back(amp[0].get<double>(), amp[1].get<double>());
        }
        targets.push_back(std::move(amps));
      }
      cfg.targets = std::move(targets);
    }
  }

  if (j.contains("output_directory")) {
    io_detail::expect_type(j["output_directory"], "output_directory",
                           j["output_directory"].is_string(), "a string");
    cfg.output_directory = j["output_directory"].get<std::string>();
  }
  if (j.contains("output_formats")) {
    io_detail::expect_type(j["output_formats"], "output_formats",
                           j["output_formats"].is_array(), "an array of strings");
    cfg.output_formats.clear();
    for (const auto& f : j["output_formats"]) {
      io_detail::expect_type(f, "output_formats", f.is_string(), "an array of strings");
      const std::string fmt = f.get<std::string>();
      if (fmt != "csv" && fmt != "json") throw config_error("output_formats", "unknown format " + fmt);
      cfg.output_formats.push_back(fmt);
    }
  }
  return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = experiment_name(cfg.kind);
  j["seed"] = cfg.seed;
  if (cfg.repetitions) j["repetitions"] = *cfg.repetitions;
  if (cfg.iterations) j["iterations"] = *cfg.iterations;
  if (cfg.lambda) j["lambda"] = *cfg.lambda;
  if (cfg.accounting) {
    j["accounting"] = *cfg.accounting == PhotonAccounting::PerExpectation
                          ? "per-expectation"
                          : "per-iteration-split";
  }
  if (cfg.error_levels) j["error_levels"] = *cfg.error_levels;
  if (cfg.subset_sizes) j["subset_sizes"] = *cfg.subset_sizes;
  if (cfg.checkpoints) j["checkpoints"] = *cfg.checkpoints;
  if (cfg.pauli_subset_size) j["pauli_subset_size"] = *cfg.pauli_subset_size;
  if (cfg.gains) {
    j["gains"] = {{"a", cfg.gains->a}, {"b", cfg.gains->b}, {"A", cfg.gains->A},
                  {"s", cfg.gains->s}, {"t", cfg.gains->t}};
  }
  if (cfg.benchmark_mode) {
    j["benchmark"] = *cfg.benchmark_mode == BenchmarkMode::ExactTruth ? "exact-truth"
                                                                       : "simulated-long-sqt";
  }
  if (cfg.error_redraw) {
    j["error_redraw"] = *cfg.error_redraw == WaveplateErrorModel::Redraw::PerMeasurement
                            ? "per-measurement"
                            : "per-run";
  }
  if (cfg.targets) {
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& amps : *cfg.targets) {
      nlohmann::json state = nlohmann::json::array();
      for (const Complex& a : amps) state.push_back({a.real(), a.imag()});
      targets.push_back(state);
    }
    j["targets"] = targets;
  }
  j["output_directory"] = cfg.output_directory;
  j["output_formats"] = cfg.output_formats;
  return j;
}

// Kind defaults overlaid with the config's explicit fields.
inline ExperimentSpec resolve_spec(const RunConfig& cfg) {
  ExperimentSpec spec = ExperimentSpec::defaults(cfg.kind, cfg.seed);
  if (cfg.repetitions) spec.repetitions = *cfg.repetitions;
  if (cfg.iterations) spec.iterations = *cfg.iterations;
  if (cfg.lambda) spec.lambda = *cfg.lambda;
  if (cfg.accounting) spec.accounting = *cfg.accounting;
  if (cfg.error_levels) spec.error_levels = *cfg.error_levels;
  if (cfg.subset_sizes) spec.subset_sizes = *cfg.subset_sizes;
  if (cfg.checkpoints) spec.checkpoints = *cfg.checkpoints;
  if (cfg.pauli_subset_size) spec.pauli_subset_size = *cfg.pauli_subset_size;
  if (cfg.gains) spec.gains = *cfg.gains;
  if (cfg.benchmark_mode) spec.benchmark_mode = *cfg.benchmark_mode;
  if (cfg.error_redraw) spec.error_redraw = *cfg.error_redraw;
  if (cfg.targets) {
    spec.targets.clear();
    for (const auto& amps : *cfg.targets) {
      Vector v(static_cast<Eigen::Index>(amps.size()));
      for (std::size_t i = 0; i < amps.size(); ++i) v(static_cast<Eigen::Index>(i)) = amps[i];
      try {
        spec.targets.emplace_back(std::move(v));
      } catch (const std::invalid_argument& e) {
        throw config_error("targets", e.what());
      }
    }
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error("<spec>", e.what());
  }
  return spec;
}

// Fully explicit config reproducing a resolved spec (written next to results
// so a run can be re-executed from its own output directory).
inline RunConfig resolved_config(const ExperimentSpec& spec, const RunConfig& cfg) {
  RunConfig out;
  out.kind = spec.kind;
  out.seed = spec.seed;
  out.repetitions = spec.repetitions;
  out.iterations = spec.iterations;
  out.lambda = spec.lambda;
  out.accounting = spec.accounting;
  if (!spec.error_levels.empty()) out.error_levels = spec.error_levels;
  if (!spec.subset_sizes.empty()) out.subset_sizes = spec.subset_sizes;
  if (!spec.checkpoints.empty()) out.checkpoints = spec.checkpoints;
  out.pauli_subset_size = spec.pauli_subset_size;
  out.gains = spec.gains;
  out.benchmark_mode = spec.benchmark_mode;
  out.error_redraw = spec.error_redraw;
  std::vector<std::vector<Complex>> targets;
  for (const PureState& t : spec.targets) {
    std::vector<Complex> amps;
    for (int i = 0; i < t.dim(); ++i) amps.push_back(t.amplitude(i));
    targets.push_back(std::move(amps));
  }
  out.targets = std::move(targets);
  out.output_directory = cfg.output_directory;
  out.output_formats = cfg.output_formats;
  return out;
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& resolved) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(resolved).dump())));
  return std::string(buf);
}

namespace io_detail {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return std::string(buf);
}

}  // namespace io_detail

// One row per trajectory point; the leading '#' lines carry provenance. The
// body below the column header is deterministic for a given config + seed;
// only the generated= line varies between reruns.
inline std::string trajectories_csv(const ExperimentResult& result, const std::string& hash) {
  std::ostringstream out;
  out << "# generated=" << io_detail::utc_timestamp() << "\n";
  out << "# experiment=" << experiment_name(result.spec.kind) << " seed=" << result.spec.seed
      << " config_hash=" << hash << " version=" << kVersion << "\n";
  out << "experiment,condition,trial,iteration,photons_cumulative,fidelity,alpha,beta,g\n";
  for (const CellResult& cell : result.cells) {
    if (cell.aborted) continue;
    for (const TrajectoryPoint& p : cell.trajectory) {
      out << experiment_name(result.spec.kind) << ',' << cell.condition << ',' << cell.trial
          << ',' << p.iteration << ',' << p.photons << ','
          << io_detail::format_double(p.fidelity) << ',' << io_detail::format_double(p.alpha)
          << ',' << io_detail::format_double(p.beta) << ',' << io_detail::format_double(p.g)
          << "\n";
    }
  }
  return out.str();
}

inline nlohmann::json summary_json(const ExperimentResult& result, const std::string& hash) {
  nlohmann::json j;
  j["experiment"] = experiment_name(result.spec.kind);
  j["dimension"] = result.spec.dim();
  j["seed"] = result.spec.seed;
  j["config_hash"] = hash;
  j["version"] = kVersion;
  nlohmann::json conditions = nlohmann::json::array();
  for (const ConditionSummary& s : result.summaries) {
    nlohmann::json c;
    c["condition"] = s.condition;
    c["cells"] = s.cells;
    c["aborted"] = s.aborted;
    c["final_fidelity_mean"] = s.final_fidelity_mean;
    c["final_fidelity_std"] = s.final_fidelity_std;
    c["final_fidelity_median"] = s.final_fidelity_median;
    c["final_photons_mean"] = s.final_photons_mean;
    nlohmann::json checkpoints = nlohmann::json::array();
    for (const CheckpointStat& stat : s.checkpoints) {
      checkpoints.push_back({{"iteration", stat.iteration},
                             {"photons_mean", stat.photons_mean},
                             {"fidelity_mean", stat.fidelity_mean},
                             {"fidelity_std", stat.fidelity_std},
                             {"fidelity_median", stat.fidelity_median},
                             {"count", stat.count}});
    }
    c["checkpoints"] = checkpoints;
    conditions.push_back(c);
  }
  j["conditions"] = conditions;
  nlohmann::json pairings = nlohmann::json::array();
  for (const PairingSummary& p : result.pairings) {
    pairings.push_back({{"condition_sgqt", p.condition_sgqt},
                        {"condition_sqt", p.condition_sqt},
                        {"pairs", p.pairs},
                        {"positive_reduction", p.positive_reduction},
                        {"undefined_pairs", p.undefined_pairs},
                        {"median_reduction", p.median_reduction},
                        {"mean_fidelity_sgqt", p.mean_fidelity_sgqt},
                        {"mean_fidelity_sqt", p.mean_fidelity_sqt},
                        {"median_fidelity_sgqt", p.median_fidelity_sgqt},
                        {"median_fidelity_sqt", p.median_fidelity_sqt}});
  }
  j["pairings"] = pairings;
  return j;
}

struct RunOutputs {
  std::filesystem::path directory;
  std::string config_hash_hex;
};

// Executes a config and writes trajectories.csv, summary.json and the
// resolved config.json into its output directory.
inline RunOutputs execute_and_write(const RunConfig& cfg,
                                    const std::optional<std::string>& out_override) {
  ExperimentSpec spec = resolve_spec(cfg);
  const RunConfig resolved = resolved_config(spec, cfg);
  const std::string hash = config_hash(resolved);

  ExperimentResult result = run_experiment(spec);

  std::filesystem::path dir = out_override ? *out_override : cfg.output_directory;
  std::filesystem::create_directories(dir);

  const bool want_csv = std::find(cfg.output_formats.begin(), cfg.output_formats.end(),
                                  "csv") != cfg.output_formats.end();
  const bool want_json = std::find(cfg.output_formats.begin(), cfg.output_formats.end(),
                                   "json") != cfg.output_formats.end();
  if (want_csv) {
    std::ofstream csv(dir / "trajectories.csv");
    if (!csv) throw std::runtime_error("cannot write " + (dir / "trajectories.csv").string());
    csv << trajectories_csv(result, hash);
  }
  if (want_json) {
    std::ofstream summary(dir / "summary.json");
    if (!summary) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
    summary << summary_json(result, hash).dump(2) << "\n";
  }
  nlohmann::json cj = config_to_json(resolved);
  std::ofstream config_out(dir / "config.json");
  if (!config_out) throw std::runtime_error("cannot write " + (dir / "config.json").string());
  config_out << cj.dump(2) << "\n";

  return RunOutputs{dir, hash};
}

}  // namespace sgtomo
