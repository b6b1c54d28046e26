// cli.hpp
// Subcommand implementations behind the command-line front end: run a config
// to an output directory, compare two run directories, list the bundled
// experiment kinds. Kept header-side so tests can drive the exact code paths
// the binary uses. Exit codes: 0 success, 1 runtime failure, 2 schema error.

#pragma once

#include <sgtomo/io.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace sgtomo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

inline int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir,
                   std::ostream& out, std::ostream& err) {
  std::ifstream in(config_path);
  if (!in) {
    err << "error: cannot read config file " << config_path << "\n";
    return kExitConfig;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();

  RunConfig cfg;
  try {
    cfg = parse_config_string(buffer.str());
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const RunOutputs outputs = execute_and_write(cfg, out_dir);
    out << "experiment " << experiment_name(cfg.kind) << " seed " << cfg.seed
        << " config_hash " << outputs.config_hash_hex << "\n";
    out << "results written to " << outputs.directory.string() << "\n";
    return kExitOk;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

namespace cli_detail {

inline std::optional<nlohmann::json> load_summary(const std::string& dir, std::ostream& err) {
  const std::filesystem::path path = std::filesystem::path(dir) / "summary.json";
  std::ifstream in(path);
  if (!in) {
    err << "error: cannot read " << path.string() << "\n";
    return std::nullopt;
  }
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    err << "error: corrupt summary " << path.string() << ": " << e.what() << "\n";
    return std::nullopt;
  }
}

// The arm whose fidelity-vs-photons curve represents a run directory.
inline std::optional<nlohmann::json> primary_condition(const nlohmann::json& summary) {
  if (!summary.contains("conditions") || !summary["conditions"].is_array()) return std::nullopt;
  for (const char* name : {"sgqt/all", "sqt/all"}) {
    for (const auto& c : summary["conditions"]) {
      if (c.value("condition", "") == name && !c.value("checkpoints", nlohmann::json::array()).empty()) {
        return c;
      }
    }
  }
  for (const char* name : {"sgqt/all", "sqt/all"}) {
    for (const auto& c : summary["conditions"]) {
      if (c.value("condition", "") == name) return c;
    }
  }
  return std::nullopt;
}

}  // namespace cli_detail

// Fidelity-vs-photons and infidelity-reduction table between two run
// directories; run A is treated as the candidate and B as the baseline.
inline int cmd_compare(const std::string& dir_a, const std::string& dir_b, std::ostream& out,
                       std::ostream& err) {
  auto summary_a = cli_detail::load_summary(dir_a, err);
  auto summary_b = cli_detail::load_summary(dir_b, err);
  if (!summary_a || !summary_b) return kExitRuntime;

  const int dim_a = summary_a->value("dimension", 0);
  const int dim_b = summary_b->value("dimension", 0);
  if (dim_a != dim_b || dim_a == 0) {
    err << "error: dimension mismatch between runs (" << dim_a << " vs " << dim_b << ")\n";
    return kExitRuntime;
  }

  auto cond_a = cli_detail::primary_condition(*summary_a);
  auto cond_b = cli_detail::primary_condition(*summary_b);
  if (!cond_a || !cond_b) {
    err << "error: summaries carry no comparable conditions\n";
    return kExitRuntime;
  }

  out << "A: " << summary_a->value("experiment", "?") << " [" << cond_a->value("condition", "?")
      << "]  B: " << summary_b->value("experiment", "?") << " ["
      << cond_b->value("condition", "?") << "]\n";
  out << "iteration  photons_A  fidelity_A  photons_B  fidelity_B  infidelity_reduction\n";

  auto checkpoints_a = cond_a->value("checkpoints", nlohmann::json::array());
  auto checkpoints_b = cond_b->value("checkpoints", nlohmann::json::array());
  int rows = 0;
  for (const auto& ca : checkpoints_a) {
    for (const auto& cb : checkpoints_b) {
      if (ca.value("iteration", -1) != cb.value("iteration", -2)) continue;
      const double fa = ca.value("fidelity_median", 0.0);
      const double fb = cb.value("fidelity_median", 0.0);
      char reduction[32] = "n/a";
      if (fb < 1.0) {
        std::snprintf(reduction, sizeof(reduction), "%+.4f", infidelity_reduction(fa, fb));
      }
      char line[256];
      std::snprintf(line, sizeof(line), "%9d  %9.1f  %10.6f  %9.1f  %10.6f  %s\n",
                    ca.value("iteration", 0), ca.value("photons_mean", 0.0), fa,
                    cb.value("photons_mean", 0.0), fb, reduction);
      out << line;
      ++rows;
    }
  }

  const double final_a = cond_a->value("final_fidelity_median", 0.0);
  const double final_b = cond_b->value("final_fidelity_median", 0.0);
  char final_reduction[32] = "n/a";
  if (final_b < 1.0) {
    std::snprintf(final_reduction, sizeof(final_reduction), "%+.4f",
                  infidelity_reduction(final_a, final_b));
  }
  out << "final      median_A=" << io_detail::format_double(final_a)
      << "  median_B=" << io_detail::format_double(final_b)
      << "  infidelity_reduction=" << final_reduction << "\n";
  if (rows == 0) {
    out << "(no matching photon checkpoints; finals compared only)\n";
  }
  return kExitOk;
}

inline int cmd_list_experiments(std::ostream& out) {
  out << "one-qubit-low-count     single-qubit optimizer vs standard tomography at ~7 "
         "photons per iteration, matched photon budgets\n";
  out << "one-qubit-error-sweep   single-qubit comparison under Gaussian waveplate-angle "
         "errors at four levels\n";
  out << "two-qubit-subset-sweep  Bell-state convergence for 2, 4, 6 and 8 Pauli "
         "measurements per iteration\n";
  out << "two-qubit-low-count     Bell-state optimizer vs standard tomography at matched "
         "photon budgets\n";
  out << "two-qubit-error-sweep   Bell-state comparison under waveplate-angle errors with "
         "matched measurement counts\n";
  return kExitOk;
}

}  // namespace sgtomo::cli
