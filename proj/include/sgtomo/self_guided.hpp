// self_guided.hpp
// Self-guided tomography: an SPSA ascent over projective measurements. Each
// iteration probes the measured objective at |phi_k +- beta_k Delta_k| for a
// Rademacher direction Delta_k, forms the difference-quotient gradient and
// steps by alpha_k g_k Delta_k. One-qubit runs ascend the projector
// expectation; two-qubit runs ascend a partial fidelity averaged over a
// random Pauli subset.

#pragma once

#include <sgtomo/measure.hpp>
#include <sgtomo/qcore.hpp>

#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sgtomo {

// Perturbations below the floor would divide the partial-fidelity ratio by
// noise; such Paulis are excluded from subsets and skipped in evaluation.
inline constexpr double kDenominatorFloor = 1e-3;

struct degenerate_perturbation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct objective_undefined_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Gain sequences alpha_k = a/(k+1+A)^s and beta_k = b/(k+1)^t.
struct GainSchedule {
  double a = 3.0;
  double b = 0.1;
  double A = 0.0;
  double s = 0.602;
  double t = 0.101;

  double alpha(int k) const { return a / std::pow(k + 1.0 + A, s); }
  double beta(int k) const { return b / std::pow(k + 1.0, t); }

  // The workhorse constants; s and t found to perform well in practice.
  static GainSchedule standard() { return GainSchedule{}; }
  // Asymptotically optimal exponents.
  static GainSchedule asymptotic() { return GainSchedule{3.0, 0.1, 0.0, 1.0, 1.0 / 6.0}; }

  void validate() const {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("gains require a, b > 0");
    if (!(A >= 0.0)) throw std::invalid_argument("gains require A >= 0");
    if (!(0.0 < t && t < s && s <= 1.0)) {
      throw std::invalid_argument("gains require 0 < t < s <= 1");
    }
  }
};

// Rademacher direction over the 2d real parameters (Re, Im per amplitude).
struct Perturbation {
  Eigen::VectorXd delta;

  static Perturbation rademacher(int dim, std::mt19937_64& rng) {
    Perturbation p;
    p.delta.resize(2 * dim);
    for (int i = 0; i < 2 * dim; ++i) {
      p.delta(i) = (rng() & 1u) ? 1.0 : -1.0;
    }
    return p;
  }
};

// |phi + step * delta| followed by renormalization. The unnormalized sum can
// cancel to zero for large steps; that surfaces as a degenerate-perturbation
// error so the caller can retry with a fresh direction.
inline PureState perturb(const PureState& phi, const Perturbation& delta, double step) {
  if (!std::isfinite(step)) throw std::invalid_argument("perturbation step must be finite");
  if (delta.delta.size() != 2 * phi.dim()) {
    throw std::invalid_argument("perturbation length must be 2 * dim");
  }
  Vector v(phi.dim());
  for (int i = 0; i < phi.dim(); ++i) {
    v(i) = phi.amplitude(i) + Complex(step * delta.delta(2 * i), step * delta.delta(2 * i + 1));
  }
  if (v.norm() < 1e-14) {
    throw degenerate_perturbation_error("perturbed state vector vanished");
  }
  return PureState(std::move(v));
}

// (E+ - E-) / (2 beta_k).
inline double gradient_estimate(double e_plus, double e_minus, double beta_k) {
  if (!(beta_k > 0.0)) throw std::invalid_argument("gradient estimate requires beta_k > 0");
  return (e_plus - e_minus) / (2.0 * beta_k);
}

// |phi_{k+1}| = |phi_k + alpha_k g_k Delta_k|.
inline PureState sgqt_step(const PureState& phi, const Perturbation& delta, double g_k,
                           double alpha_k) {
  return perturb(phi, delta, alpha_k * g_k);
}

// Random Pauli subset for the partial-fidelity objective: |size| distinct
// indices drawn without replacement with weights <phi|P_i|phi>^2; indices
// whose predicted magnitude sits below the floor are ineligible. Returns all
// eligible indices when fewer than |size| remain.
inline std::vector<int> sample_pauli_subset(const PureState& phi, int size,
                                            std::mt19937_64& rng) {
  if (phi.dim() != 4) throw std::invalid_argument("Pauli subsets require two qubits");
  if (size < 1 || size > kNumTwoQubitPaulis) {
    throw std::invalid_argument("subset size must be in [1, 16]");
  }
  std::vector<int> eligible;
  std::vector<double> weight;
  for (int i = 0; i < kNumTwoQubitPaulis; ++i) {
    const double e = pauli_expectation(phi, two_qubit_pauli(i));
    if (std::abs(e) >= kDenominatorFloor) {
      eligible.push_back(i);
      weight.push_back(e * e);
    }
  }
  if (static_cast<int>(eligible.size()) <= size) return eligible;

  std::vector<int> chosen;
  chosen.reserve(size);
  for (int pick = 0; pick < size; ++pick) {
    const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    std::uniform_real_distribution<double> unif(0.0, total);
    double u = unif(rng);
    std::size_t idx = 0;
    while (idx + 1 < weight.size() && u > weight[idx]) {
      u -= weight[idx];
      ++idx;
    }
    chosen.push_back(eligible[idx]);
    eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(idx));
    weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return chosen;
}

// Partial-fidelity evaluation with measured numerators supplied by the
// caller, so one set of physical measurements serves both +- probe states.
// The value is the weighted average of the measured-over-predicted ratios
// m_i / c_i with weights c_i^2, where c_i = <P_i>_anchor is the prediction
// at the state the subset was weight-sampled at:
//
//   F(phi) = sum_i m_i <P_i>_phi / sum_i c_i^2.
//
// At phi == anchor this is the c^2-weighted ratio average (and the plain
// average whenever the selected |c_i| are equal, e.g. at stabilizer states);
// with the full eligible set it equals the true overlap fidelity. Anchoring
// the weights where the subset was sampled keeps the expected +- difference
// aligned with the true fidelity gradient and bounds it: probe-state
// denominators make the ratio reward shrinking predictions and inject 1/c^2
// gradient spikes, which stalls the ascent. Terms whose anchor prediction
// sits below the floor are skipped; losing every term leaves the objective
// undefined.
inline double partial_fidelity_from(std::span<const double> measured_numerators,
                                    const PureState& anchor, const PureState& phi,
                                    std::span<const int> subset) {
  if (measured_numerators.size() != subset.size()) {
    throw std::invalid_argument("one measured numerator per subset index required");
  }
  if (subset.empty()) throw std::invalid_argument("partial fidelity requires |M| >= 1");
  double numerator = 0.0;
  double weight = 0.0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const PauliOp pauli = two_qubit_pauli(subset[i]);
    const double predicted = pauli_expectation(anchor, pauli);
    if (std::abs(predicted) < kDenominatorFloor) continue;
    numerator += measured_numerators[i] * pauli_expectation(phi, pauli);
    weight += predicted * predicted;
  }
  if (weight == 0.0) {
    throw objective_undefined_error("all partial-fidelity terms skipped (denominators below floor)");
  }
  return numerator / weight;
}

// Measures Tr(rho_f P_i) for each subset index, then averages the
// measured-over-predicted ratios at phi.
inline double partial_fidelity(MeasurementBackend& backend, const PureState& phi,
                               std::span<const int> subset) {
  std::vector<double> numerators;
  numerators.reserve(subset.size());
  for (int index : subset) numerators.push_back(backend.measure_pauli(two_qubit_pauli(index)));
  return partial_fidelity_from(numerators, phi, phi, subset);
}

enum class Objective { ProjectorExpectation, PartialFidelity };

struct SgqtConfig {
  int iterations = 100;
  GainSchedule gains = GainSchedule::standard();
  std::optional<PureState> initial_state;  // defaults to |0...0>
  Objective objective = Objective::ProjectorExpectation;
  int pauli_subset_size = 8;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (pauli_subset_size < 1 || pauli_subset_size > kNumTwoQubitPaulis) {
      throw std::invalid_argument("pauli_subset_size must be in [1, 16]");
    }
    gains.validate();
  }
};

// Per-iteration trajectory. Row 0 is the starting point; row k >= 1 carries
// the gains and gradient of the step that produced it, the cumulative photon
// cost, the benchmark fidelity of the estimate, and (two-qubit runs) the
// Pauli subset shared by the +- evaluations of that step.
struct IterationRow {
  int k = 0;
  PureState estimate;
  double alpha = 0.0;
  double beta = 0.0;
  double g = 0.0;
  std::uint64_t photons_cumulative = 0;
  double benchmark_fidelity = 0.0;
  std::uint64_t zero_photon_events = 0;
  std::vector<int> pauli_subset;
};

struct RunRecord {
  std::vector<IterationRow> rows;
  bool aborted = false;
  std::string diagnostic;

  const PureState& final_estimate() const { return rows.back().estimate; }
  std::uint64_t photons_total() const { return rows.back().photons_cumulative; }
  double final_fidelity() const { return rows.back().benchmark_fidelity; }
};

// The full optimization loop. Deterministic given (config seed, backend
// seed); the benchmark state is used for bookkeeping only and never feeds
// back into the ascent.
inline RunRecord run_sgqt(const SgqtConfig& config, MeasurementBackend& backend,
                          const DensityMatrix& benchmark) {
  config.validate();
  if (config.objective == Objective::PartialFidelity && backend.dim() != 4) {
    throw std::invalid_argument("partial-fidelity objective requires a two-qubit backend");
  }
  if (benchmark.dim() != backend.dim()) {
    throw std::invalid_argument("benchmark dimension mismatch");
  }
  PureState phi = config.initial_state.value_or(PureState::basis(backend.dim(), 0));
  if (phi.dim() != backend.dim()) {
    throw std::invalid_argument("initial state dimension mismatch");
  }

  std::mt19937_64 rng(config.rng_seed);
  RunRecord record;
  record.rows.reserve(config.iterations + 1);
  record.rows.push_back(IterationRow{0, phi, 0.0, 0.0, 0.0, backend.photons_consumed(),
                                     expectation(benchmark, phi),
                                     backend.zero_photon_events(),
                                     {}});

  for (int k = 0; k < config.iterations; ++k) {
    const double alpha_k = config.gains.alpha(k);
    const double beta_k = config.gains.beta(k);

    bool stepped = false;
    for (int attempt = 0; attempt < 4 && !stepped; ++attempt) {
      const Perturbation delta = Perturbation::rademacher(backend.dim(), rng);
      try {
        double e_plus = 0.0;
        double e_minus = 0.0;
        std::vector<int> subset;
        const PureState probe_plus = perturb(phi, delta, beta_k);
        const PureState probe_minus = perturb(phi, delta, -beta_k);
        if (config.objective == Objective::ProjectorExpectation) {
          e_plus = backend.measure_expectation(probe_plus);
          e_minus = backend.measure_expectation(probe_minus);
        } else {
          subset = sample_pauli_subset(phi, config.pauli_subset_size, rng);
          std::vector<double> numerators;
          numerators.reserve(subset.size());
          for (int index : subset) {
            numerators.push_back(backend.measure_pauli(two_qubit_pauli(index)));
          }
          e_plus = partial_fidelity_from(numerators, phi, probe_plus, subset);
          e_minus = partial_fidelity_from(numerators, phi, probe_minus, subset);
        }
        const double g_k = gradient_estimate(e_plus, e_minus, beta_k);
        phi = sgqt_step(phi, delta, g_k, alpha_k);
        record.rows.push_back(IterationRow{k + 1, phi, alpha_k, beta_k, g_k,
                                           backend.photons_consumed(),
                                           expectation(benchmark, phi),
                                           backend.zero_photon_events(),
                                           std::move(subset)});
        stepped = true;
      } catch (const degenerate_perturbation_error& e) {
        if (attempt == 3) {
          record.aborted = true;
          record.diagnostic = "degenerate perturbation persisted after 3 retries at iteration " +
                              std::to_string(k) + ": " + e.what();
          return record;
        }
      }
    }
  }
  return record;
}

}  // namespace sgtomo
