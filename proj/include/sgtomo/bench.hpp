// bench.hpp
// Experiment definitions and statistics: low-count and waveplate-error
// comparisons between the self-guided optimizer and the standard-tomography
// baseline, for one and two qubits, plus the measurements-per-iteration
// sweep. Cells (target x condition x repetition) run on independently seeded
// backends and may execute in parallel; aggregation is a deterministic
// single-threaded reduce.

#pragma once

#include <sgtomo/measure.hpp>
#include <sgtomo/qcore.hpp>
#include <sgtomo/self_guided.hpp>
#include <sgtomo/standard.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace sgtomo {

enum class ExperimentKind {
  OneQubitLowCount,
  OneQubitErrorSweep,
  TwoQubitSubsetSweep,
  TwoQubitLowCount,
  TwoQubitErrorSweep,
};

inline const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::OneQubitLowCount: return "one-qubit-low-count";
    case ExperimentKind::OneQubitErrorSweep: return "one-qubit-error-sweep";
    case ExperimentKind::TwoQubitSubsetSweep: return "two-qubit-subset-sweep";
    case ExperimentKind::TwoQubitLowCount: return "two-qubit-low-count";
    case ExperimentKind::TwoQubitErrorSweep: return "two-qubit-error-sweep";
  }
  throw std::invalid_argument("unknown experiment kind");
}

inline ExperimentKind experiment_from_name(const std::string& name) {
  for (ExperimentKind kind :
       {ExperimentKind::OneQubitLowCount, ExperimentKind::OneQubitErrorSweep,
        ExperimentKind::TwoQubitSubsetSweep, ExperimentKind::TwoQubitLowCount,
        ExperimentKind::TwoQubitErrorSweep}) {
    if (name == experiment_name(kind)) return kind;
  }
  throw std::invalid_argument("unknown experiment kind: " + name);
}

enum class BenchmarkMode { ExactTruth, SimulatedLongSqt };

// Seed of the three pinned single-qubit targets used by the one-qubit
// experiments when no explicit targets are supplied.
inline constexpr std::uint64_t kPinnedTargetSeed = 12345;

// (F_sgqt - F_sqt) / (1 - F_sqt): fraction of the baseline infidelity
// removed. Undefined when the baseline is already perfect.
inline double infidelity_reduction(double f_sgqt, double f_sqt) {
  if (f_sqt >= 1.0) {
    throw std::invalid_argument("infidelity reduction undefined for F_sqt >= 1");
  }
  return (f_sgqt - f_sqt) / (1.0 - f_sqt);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0,
                              std::uint64_t d = 0) {
  std::uint64_t x = a ^ (b * 0x9E3779B97F4A7C15ULL) ^ (c * 0xBF58476D1CE4E5B9ULL) ^
                    (d * 0x94D049BB133111EBULL);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

inline std::vector<PureState> pinned_one_qubit_targets() {
  std::mt19937_64 rng(kPinnedTargetSeed);
  std::vector<PureState> targets;
  for (int i = 0; i < 3; ++i) targets.push_back(haar_random_state(2, rng));
  return targets;
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::OneQubitLowCount;
  std::vector<PureState> targets;
  int repetitions = 10;
  int iterations = 40;
  double lambda = 3.5;  // Poisson mean per expectation / Pauli measurement
  PhotonAccounting accounting = PhotonAccounting::PerIterationSplit;
  std::vector<double> error_levels;  // sweep kinds only, degrees
  std::vector<int> subset_sizes;     // subset sweep only
  int pauli_subset_size = 8;
  GainSchedule gains = GainSchedule::standard();
  BenchmarkMode benchmark_mode = BenchmarkMode::ExactTruth;
  std::vector<int> checkpoints;  // iterations whose budgets the SQT arm matches
  WaveplateErrorModel::Redraw error_redraw = WaveplateErrorModel::Redraw::PerMeasurement;
  std::uint64_t seed = 1;

  int dim() const {
    return kind == ExperimentKind::OneQubitLowCount ||
                   kind == ExperimentKind::OneQubitErrorSweep
               ? 2
               : 4;
  }

  // Number of measurement settings one optimizer run consumes; the
  // matched-measurement SQT arms repeat their set to the same total.
  int measurements_per_iteration() const {
    return dim() == 2 ? 2 : pauli_subset_size;
  }

  static ExperimentSpec defaults(ExperimentKind kind, std::uint64_t seed = 1) {
    ExperimentSpec spec;
    spec.kind = kind;
    spec.seed = seed;
    switch (kind) {
      case ExperimentKind::OneQubitLowCount:
        spec.targets = pinned_one_qubit_targets();
        spec.iterations = 40;
        spec.lambda = 3.5;
        spec.accounting = PhotonAccounting::PerIterationSplit;
        spec.gains = GainSchedule{0.3, 0.35, 0.0, 0.602, 0.101};
        spec.checkpoints = {4, 8, 14, 22, 30, 40};
        break;
      case ExperimentKind::OneQubitErrorSweep:
        spec.targets = pinned_one_qubit_targets();
        spec.iterations = 40;
        spec.lambda = 2500.0;
        spec.accounting = PhotonAccounting::PerExpectation;
        spec.error_levels = WaveplateErrorModel::default_levels();
        spec.gains = GainSchedule{0.3, 0.35, 0.0, 0.602, 0.101};
        break;
      case ExperimentKind::TwoQubitSubsetSweep:
        spec.targets = {singlet_state()};
        spec.iterations = 100;
        spec.lambda = 1000.0;
        spec.accounting = PhotonAccounting::PerExpectation;
        spec.subset_sizes = {2, 4, 6, 8};
        spec.gains = GainSchedule::asymptotic();
        break;
      case ExperimentKind::TwoQubitLowCount:
        spec.targets = {singlet_state()};
        spec.iterations = 100;
        spec.lambda = 1.0;
        spec.accounting = PhotonAccounting::PerIterationSplit;
        spec.gains = GainSchedule::asymptotic();
        spec.checkpoints = {20, 40, 60, 80, 100};
        break;
      case ExperimentKind::TwoQubitErrorSweep:
        spec.targets = {singlet_state()};
        spec.iterations = 100;
        spec.lambda = 2500.0;
        spec.accounting = PhotonAccounting::PerExpectation;
        spec.error_levels = WaveplateErrorModel::default_levels();
        spec.gains = GainSchedule::asymptotic();
        break;
    }
    return spec;
  }

  void validate() const {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (targets.empty()) throw std::invalid_argument("at least one target required");
    for (const PureState& t : targets) {
      if (t.dim() != dim()) throw std::invalid_argument("target dimension mismatch");
    }
    gains.validate();
    const bool sweep = kind == ExperimentKind::OneQubitErrorSweep ||
                       kind == ExperimentKind::TwoQubitErrorSweep;
    if (sweep) {
      if (error_levels.empty()) throw std::invalid_argument("error sweep needs levels");
      WaveplateErrorModel model{error_levels.front(), error_levels};
      model.validate();
    }
    if (kind == ExperimentKind::TwoQubitSubsetSweep && subset_sizes.empty()) {
      throw std::invalid_argument("subset sweep needs subset sizes");
    }
    for (int m : subset_sizes) {
      if (m < 1 || m > kNumTwoQubitPaulis) {
        throw std::invalid_argument("subset sizes must be in [1, 16]");
      }
    }
    const bool low_count = kind == ExperimentKind::OneQubitLowCount ||
                           kind == ExperimentKind::TwoQubitLowCount;
    if (low_count && checkpoints.empty()) {
      throw std::invalid_argument("low-count experiments need matched-budget checkpoints");
    }
    for (int c : checkpoints) {
      if (c < 1 || c > iterations) {
        throw std::invalid_argument("checkpoints must be in [1, iterations]");
      }
    }
  }
};

struct TrajectoryPoint {
  int iteration = 0;
  std::uint64_t photons = 0;
  double fidelity = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double g = 0.0;
};

struct CellResult {
  std::string condition;
  int target_index = 0;
  int trial = 0;
  bool is_sgqt = true;
  std::vector<TrajectoryPoint> trajectory;
  bool aborted = false;
  std::string diagnostic;
};

struct CheckpointStat {
  int iteration = 0;
  double photons_mean = 0.0;
  double fidelity_mean = 0.0;
  double fidelity_std = 0.0;
  double fidelity_median = 0.0;
  int count = 0;
};

struct ConditionSummary {
  std::string condition;
  int cells = 0;
  int aborted = 0;
  double final_fidelity_mean = 0.0;
  double final_fidelity_std = 0.0;
  double final_fidelity_median = 0.0;
  double final_photons_mean = 0.0;
  std::vector<CheckpointStat> checkpoints;
};

struct PairingSummary {
  std::string condition_sgqt;
  std::string condition_sqt;
  int pairs = 0;
  int positive_reduction = 0;
  int undefined_pairs = 0;  // baseline fidelity exactly 1
  double median_reduction = 0.0;
  double mean_fidelity_sgqt = 0.0;
  double mean_fidelity_sqt = 0.0;
  double median_fidelity_sgqt = 0.0;
  double median_fidelity_sqt = 0.0;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<CellResult> cells;
  std::vector<ConditionSummary> summaries;
  std::vector<PairingSummary> pairings;
};

// Matched-budget standard-tomography arm: one SQT run per checkpoint budget,
// the budget split uniformly across the set. Budgets below the set's minimum
// (one full acquisition at the minimum usable rate) are skipped.
struct MatchedBudgetPoint {
  int iteration = 0;
  std::uint64_t budget = 0;
  bool skipped = false;
  std::uint64_t photons_used = 0;
  double fidelity = 0.0;
};

inline std::vector<MatchedBudgetPoint> matched_budget_sqt(
    const DensityMatrix& truth, const DensityMatrix& benchmark, const TomographySet& set,
    std::span<const std::pair<int, std::uint64_t>> checkpoints, std::uint64_t seed,
    const std::optional<WaveplateErrorModel>& errors = std::nullopt) {
  const std::uint64_t min_budget = set.dim() == 2 ? 28 : 16;
  std::vector<MatchedBudgetPoint> out;
  for (std::size_t j = 0; j < checkpoints.size(); ++j) {
    const auto [iteration, budget] = checkpoints[j];
    MatchedBudgetPoint point;
    point.iteration = iteration;
    point.budget = budget;
    if (budget < min_budget) {
      point.skipped = true;
      out.push_back(point);
      continue;
    }
    const double lambda = static_cast<double>(budget) / static_cast<double>(set.size());
    MeasurementBackend backend(truth, PhotonBudgetConfig::sampled(lambda), errors,
                               mix_seed(seed, 0x5154u, j));
    const SqtResult result = run_sqt(backend, set, benchmark);
    point.photons_used = result.photons_used;
    point.fidelity = result.fidelity_to_benchmark;
    out.push_back(point);
  }
  return out;
}

namespace detail {

inline int max_workers() {
  if (const char* env = std::getenv("SGTOMO_MAX_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const int workers = std::min<std::size_t>(max_workers(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double sum = 0.0;
  for (double x : v) sum += (x - mean) * (x - mean);
  return std::sqrt(sum / static_cast<double>(v.size() - 1));
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Everything a single cell needs, precomputed so cells can run on any thread.
namespace detail {

struct CellPlan {
  std::string condition;
  int target_index = 0;
  int trial = 0;
  bool is_sgqt = true;
  double sigma = 0.0;   // error sweeps
  int subset_size = 8;  // two-qubit objectives
  std::uint64_t backend_seed = 0;
  std::uint64_t optimizer_seed = 0;
  int sqt_repetitions = 0;  // matched-measurement arm (error sweeps)
  int paired_sgqt_cell = -1;
};

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const int dim = spec.dim();
  TomographySet set = dim == 2 ? TomographySet::one_qubit() : TomographySet::two_qubit();

  // Benchmarks per target: ground truth by default, or a simulated
  // long-integration SQT estimate of it.
  std::vector<DensityMatrix> benchmarks;
  for (std::size_t t = 0; t < spec.targets.size(); ++t) {
    DensityMatrix truth = DensityMatrix::pure(spec.targets[t]);
    if (spec.benchmark_mode == BenchmarkMode::SimulatedLongSqt) {
      const double lambda = 2e5 / static_cast<double>(set.size());
      MeasurementBackend backend(truth, PhotonBudgetConfig::sampled(lambda), std::nullopt,
                                 mix_seed(spec.seed, 0xBE9Cu, t));
      benchmarks.push_back(run_sqt(backend, set, truth).estimate);
    } else {
      benchmarks.push_back(truth);
    }
  }

  // Plan the SGQT cells.
  std::vector<detail::CellPlan> plans;
  const bool error_sweep = spec.kind == ExperimentKind::OneQubitErrorSweep ||
                           spec.kind == ExperimentKind::TwoQubitErrorSweep;
  const std::vector<double> sigmas = error_sweep ? spec.error_levels : std::vector<double>{0.0};
  const std::vector<int> sizes = spec.kind == ExperimentKind::TwoQubitSubsetSweep
                                     ? spec.subset_sizes
                                     : std::vector<int>{spec.pauli_subset_size};

  for (std::size_t t = 0; t < spec.targets.size(); ++t) {
    for (double sigma : sigmas) {
      for (int msize : sizes) {
        for (int trial = 0; trial < spec.repetitions; ++trial) {
          detail::CellPlan plan;
          plan.target_index = static_cast<int>(t);
          plan.trial = trial;
          plan.sigma = sigma;
          plan.subset_size = msize;
          plan.is_sgqt = true;
          plan.condition = "sgqt";
          if (spec.targets.size() > 1) plan.condition += "/target=" + std::to_string(t);
          if (error_sweep) {
            plan.condition += "/sigma=" + std::to_string(static_cast<int>(sigma));
          }
          if (spec.kind == ExperimentKind::TwoQubitSubsetSweep) {
            plan.condition += "/m=" + std::to_string(msize);
          }
          plan.backend_seed = mix_seed(spec.seed, 1, t * 1000 + trial,
                                       static_cast<std::uint64_t>(sigma * 64) + msize);
          plan.optimizer_seed = mix_seed(spec.seed, 2, t * 1000 + trial,
                                         static_cast<std::uint64_t>(sigma * 64) + msize);
          plans.push_back(plan);
        }
      }
    }
  }

  // Matched SQT arms pair one-to-one with SGQT cells, except for the subset
  // sweep, which has no baseline arm.
  const bool has_sqt_arm = spec.kind != ExperimentKind::TwoQubitSubsetSweep;
  const std::size_t n_sgqt = plans.size();
  if (has_sqt_arm) {
    for (std::size_t i = 0; i < n_sgqt; ++i) {
      detail::CellPlan plan = plans[i];
      plan.is_sgqt = false;
      plan.condition = "sqt" + plan.condition.substr(4);
      plan.paired_sgqt_cell = static_cast<int>(i);
      if (error_sweep) {
        const int total = spec.iterations * spec.measurements_per_iteration();
        plan.sqt_repetitions = std::max(1, total / static_cast<int>(set.size()));
      }
      plan.backend_seed = mix_seed(plan.backend_seed, 0x5154u);
      plans.push_back(plan);
    }
  }

  std::vector<CellResult> cells(plans.size());

  auto run_sgqt_cell = [&](const detail::CellPlan& plan) {
    CellResult cell;
    cell.condition = plan.condition;
    cell.target_index = plan.target_index;
    cell.trial = plan.trial;
    cell.is_sgqt = true;
    std::optional<WaveplateErrorModel> errors;
    if (plan.sigma > 0.0) {
      errors = WaveplateErrorModel{plan.sigma, spec.error_levels, spec.error_redraw};
    }
    DensityMatrix truth = DensityMatrix::pure(spec.targets[plan.target_index]);
    MeasurementBackend backend(truth,
                               PhotonBudgetConfig{spec.lambda, spec.accounting}, errors,
                               plan.backend_seed);
    SgqtConfig config;
    config.iterations = spec.iterations;
    config.gains = spec.gains;
    config.objective =
        dim == 2 ? Objective::ProjectorExpectation : Objective::PartialFidelity;
    config.pauli_subset_size = plan.subset_size;
    config.rng_seed = plan.optimizer_seed;
    try {
      RunRecord record = run_sgqt(config, backend, benchmarks[plan.target_index]);
      cell.aborted = record.aborted;
      cell.diagnostic = record.diagnostic;
      if (!record.aborted) {
        cell.trajectory.reserve(record.rows.size());
        for (const IterationRow& row : record.rows) {
          cell.trajectory.push_back(TrajectoryPoint{row.k, row.photons_cumulative,
                                                    row.benchmark_fidelity, row.alpha,
                                                    row.beta, row.g});
        }
      }
    } catch (const std::exception& e) {
      cell.aborted = true;
      cell.diagnostic = e.what();
    }
    return cell;
  };

  auto run_sqt_cell = [&](const detail::CellPlan& plan, const CellResult& paired) {
    CellResult cell;
    cell.condition = plan.condition;
    cell.target_index = plan.target_index;
    cell.trial = plan.trial;
    cell.is_sgqt = false;
    std::optional<WaveplateErrorModel> errors;
    if (plan.sigma > 0.0) {
      errors = WaveplateErrorModel{plan.sigma, spec.error_levels, spec.error_redraw};
    }
    DensityMatrix truth = DensityMatrix::pure(spec.targets[plan.target_index]);
    const DensityMatrix& benchmark = benchmarks[plan.target_index];
    try {
      if (plan.sqt_repetitions > 0) {
        // Matched-measurement arm: repeat the set to the optimizer's total
        // measurement count at the same photon rate, pool, then estimate.
        MeasurementBackend backend(truth, PhotonBudgetConfig::sampled(spec.lambda), errors,
                                   plan.backend_seed);
        std::vector<CountVector> acquisitions;
        acquisitions.reserve(plan.sqt_repetitions);
        for (int r = 0; r < plan.sqt_repetitions; ++r) {
          acquisitions.push_back(acquire_counts(backend, set));
        }
        const CountVector merged = merge_counts(acquisitions);
        const MleResult mle = mle_estimate(merged, set);
        cell.trajectory.push_back(TrajectoryPoint{spec.iterations,
                                                  backend.photons_consumed(),
                                                  fidelity(mle.estimate, benchmark), 0.0,
                                                  0.0, 0.0});
      } else {
        // Matched-budget arm: one run per checkpoint of the paired SGQT cell.
        if (paired.aborted) {
          cell.aborted = true;
          cell.diagnostic = "paired optimizer cell aborted";
          return cell;
        }
        std::vector<std::pair<int, std::uint64_t>> budget_points;
        for (int k : spec.checkpoints) {
          budget_points.emplace_back(k, paired.trajectory[k].photons);
        }
        const std::vector<MatchedBudgetPoint> points = matched_budget_sqt(
            truth, benchmark, set, budget_points, plan.backend_seed, errors);
        for (const MatchedBudgetPoint& p : points) {
          if (p.skipped) continue;
          cell.trajectory.push_back(
              TrajectoryPoint{p.iteration, p.photons_used, p.fidelity, 0.0, 0.0, 0.0});
        }
        if (cell.trajectory.empty()) {
          cell.aborted = true;
          cell.diagnostic = "all checkpoint budgets below the set minimum";
        }
      }
    } catch (const std::exception& e) {
      cell.aborted = true;
      cell.diagnostic = e.what();
    }
    return cell;
  };

  // SGQT cells first (SQT budget arms need their photon trajectories).
  detail::parallel_for(n_sgqt, [&](std::size_t i) { cells[i] = run_sgqt_cell(plans[i]); });
  if (plans.size() > n_sgqt) {
    detail::parallel_for(plans.size() - n_sgqt, [&](std::size_t j) {
      const std::size_t i = n_sgqt + j;
      cells[i] = run_sqt_cell(plans[i], cells[plans[i].paired_sgqt_cell]);
    });
  }

  ExperimentResult result;
  result.spec = spec;
  result.cells = std::move(cells);

  // Per-condition summaries, exact condition strings plus pooled arms.
  auto summarize = [&](const std::string& name, auto&& filter) {
    ConditionSummary summary;
    summary.condition = name;
    std::vector<double> finals, photons;
    std::vector<std::vector<double>> ckpt_fid;
    std::vector<std::vector<double>> ckpt_photons;
    std::vector<int> ckpt_iter;
    for (const CellResult& cell : result.cells) {
      if (!filter(cell)) continue;
      ++summary.cells;
      if (cell.aborted || cell.trajectory.empty()) {
        ++summary.aborted;
        continue;
      }
      finals.push_back(cell.trajectory.back().fidelity);
      photons.push_back(static_cast<double>(cell.trajectory.back().photons));
      for (const TrajectoryPoint& p : cell.trajectory) {
        if (!cell.is_sgqt ||
            std::find(spec.checkpoints.begin(), spec.checkpoints.end(), p.iteration) !=
                spec.checkpoints.end()) {
          auto it = std::find(ckpt_iter.begin(), ckpt_iter.end(), p.iteration);
          std::size_t idx;
          if (it == ckpt_iter.end()) {
            ckpt_iter.push_back(p.iteration);
            ckpt_fid.emplace_back();
            ckpt_photons.emplace_back();
            idx = ckpt_iter.size() - 1;
          } else {
            idx = static_cast<std::size_t>(it - ckpt_iter.begin());
          }
          ckpt_fid[idx].push_back(p.fidelity);
          ckpt_photons[idx].push_back(static_cast<double>(p.photons));
        }
      }
    }
    summary.final_fidelity_mean = detail::mean_of(finals);
    summary.final_fidelity_std = detail::std_of(finals, summary.final_fidelity_mean);
    summary.final_fidelity_median = detail::median_of(finals);
    summary.final_photons_mean = detail::mean_of(photons);
    for (std::size_t c = 0; c < ckpt_iter.size(); ++c) {
      CheckpointStat stat;
      stat.iteration = ckpt_iter[c];
      stat.photons_mean = detail::mean_of(ckpt_photons[c]);
      stat.fidelity_mean = detail::mean_of(ckpt_fid[c]);
      stat.fidelity_std = detail::std_of(ckpt_fid[c], stat.fidelity_mean);
      stat.fidelity_median = detail::median_of(ckpt_fid[c]);
      stat.count = static_cast<int>(ckpt_fid[c].size());
      summary.checkpoints.push_back(stat);
    }
    std::sort(summary.checkpoints.begin(), summary.checkpoints.end(),
              [](const CheckpointStat& a, const CheckpointStat& b) {
                return a.iteration < b.iteration;
              });
    return summary;
  };

  std::vector<std::string> condition_names;
  for (const CellResult& cell : result.cells) {
    if (std::find(condition_names.begin(), condition_names.end(), cell.condition) ==
        condition_names.end()) {
      condition_names.push_back(cell.condition);
    }
  }
  for (const std::string& name : condition_names) {
    result.summaries.push_back(
        summarize(name, [&](const CellResult& c) { return c.condition == name; }));
  }
  result.summaries.push_back(
      summarize("sgqt/all", [](const CellResult& c) { return c.is_sgqt; }));
  if (has_sqt_arm) {
    result.summaries.push_back(
        summarize("sqt/all", [](const CellResult& c) { return !c.is_sgqt; }));
  }

  // Paired comparisons: SGQT final fidelity against the SQT arm's final
  // checkpoint, per sweep level (or overall for the low-count kinds).
  if (has_sqt_arm) {
    auto pair_group = [&](const std::string& sgqt_name, const std::string& sqt_name,
                          auto&& group_filter) {
      PairingSummary pairing;
      pairing.condition_sgqt = sgqt_name;
      pairing.condition_sqt = sqt_name;
      std::vector<double> reductions, f_sgqt, f_sqt;
      for (std::size_t j = n_sgqt; j < plans.size(); ++j) {
        const CellResult& sqt_cell = result.cells[j];
        const CellResult& sgqt_cell = result.cells[plans[j].paired_sgqt_cell];
        if (!group_filter(sgqt_cell)) continue;
        if (sqt_cell.aborted || sgqt_cell.aborted || sqt_cell.trajectory.empty() ||
            sgqt_cell.trajectory.empty()) {
          continue;
        }
        const double fa = sgqt_cell.trajectory.back().fidelity;
        const double fb = sqt_cell.trajectory.back().fidelity;
        f_sgqt.push_back(fa);
        f_sqt.push_back(fb);
        ++pairing.pairs;
        if (fb >= 1.0) {
          ++pairing.undefined_pairs;
          continue;
        }
        const double reduction = infidelity_reduction(fa, fb);
        reductions.push_back(reduction);
        if (reduction > 0.0) ++pairing.positive_reduction;
      }
      pairing.median_reduction = detail::median_of(reductions);
      pairing.mean_fidelity_sgqt = detail::mean_of(f_sgqt);
      pairing.mean_fidelity_sqt = detail::mean_of(f_sqt);
      pairing.median_fidelity_sgqt = detail::median_of(f_sgqt);
      pairing.median_fidelity_sqt = detail::median_of(f_sqt);
      return pairing;
    };

    if (error_sweep) {
      for (double sigma : sigmas) {
        const std::string suffix = "/sigma=" + std::to_string(static_cast<int>(sigma));
        result.pairings.push_back(pair_group(
            "sgqt" + suffix, "sqt" + suffix, [&](const CellResult& c) {
              return c.condition.find(suffix) != std::string::npos;
            }));
      }
    } else {
      result.pairings.push_back(
          pair_group("sgqt/all", "sqt/all", [](const CellResult&) { return true; }));
    }
  }

  return result;
}

}  // namespace sgtomo
