// measure.hpp
// Simulated measurement backends. A backend owns the true state, a photon
// budget, an optional waveplate-error model and an RNG; it is the only source
// of randomness in the pipeline besides the optimizer's perturbation draws.
// Sampling model: N ~ Poisson(lambda) photons per measurement, outcomes
// binomial (projectors) or multinomial (local Pauli eigenbases).

#pragma once

#include <sgtomo/optics.hpp>
#include <sgtomo/qcore.hpp>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace sgtomo {

struct Counts {
  std::uint64_t successes = 0;
  std::uint64_t total = 0;

  double frequency() const {
    return total == 0 ? 0.5 : static_cast<double>(successes) / static_cast<double>(total);
  }
};

enum class PhotonAccounting { PerExpectation, PerIterationSplit };

// Poisson mean per expectation-value measurement. lambda = infinity switches
// the backend to ideal mode (exact expectations, no photon cost). The
// accounting mode records how an iteration budget maps onto lambda: in
// PerIterationSplit the configured lambda is the per-measurement share of a
// budget split across the measurements of one iteration.
struct PhotonBudgetConfig {
  double mean_photons_per_expectation = std::numeric_limits<double>::infinity();
  PhotonAccounting accounting_mode = PhotonAccounting::PerExpectation;

  static PhotonBudgetConfig ideal() { return PhotonBudgetConfig{}; }
  static PhotonBudgetConfig sampled(double lambda,
                                    PhotonAccounting mode = PhotonAccounting::PerExpectation) {
    PhotonBudgetConfig cfg{lambda, mode};
    cfg.validate();
    return cfg;
  }

  bool is_ideal() const { return std::isinf(mean_photons_per_expectation); }
  void validate() const {
    if (!(mean_photons_per_expectation >= 0.0)) {
      throw std::invalid_argument("mean photons per expectation must be >= 0");
    }
  }
};

// Zero-mean Gaussian error (degrees) applied to analysis waveplate settings.
// Offsets are redrawn per measurement setting by default; PerRun freezes one
// offset per (arm, plate) for the backend's lifetime.
struct WaveplateErrorModel {
  enum class Redraw { PerMeasurement, PerRun };

  double sigma_degrees = 0.0;
  std::vector<double> levels = default_levels();
  Redraw redraw = Redraw::PerMeasurement;

  static std::vector<double> default_levels() { return {1.0, 2.0, 4.0, 8.0}; }

  void validate() const {
    if (!(sigma_degrees >= 0.0)) {
      throw std::invalid_argument("waveplate error sigma must be >= 0");
    }
    for (std::size_t i = 1; i < levels.size(); ++i) {
      if (!(levels[i] > levels[i - 1])) {
        throw std::invalid_argument("waveplate error levels must be strictly increasing");
      }
    }
  }
};

namespace detail {

struct LocalBasis {
  PureState plus;
  PureState minus;
  double eig_plus = 1.0;
  double eig_minus = -1.0;
};

// Eigenbasis of a single-qubit Pauli factor. The identity is measured in the
// Z basis with both outcomes counting +1.
inline LocalBasis pauli_eigenbasis(int factor) {
  const double r = 1.0 / std::sqrt(2.0);
  auto mk = [](Complex a, Complex b) {
    Vector v(2);
    v << a, b;
    return PureState(std::move(v));
  };
  switch (factor) {
    case 0: return {PureState::basis(2, 0), PureState::basis(2, 1), 1.0, 1.0};
    case 1: return {mk({r, 0}, {r, 0}), mk({r, 0}, {-r, 0}), 1.0, -1.0};
    case 2: return {mk({r, 0}, {0, r}), mk({r, 0}, {0, -r}), 1.0, -1.0};
    case 3: return {PureState::basis(2, 0), PureState::basis(2, 1), 1.0, -1.0};
    default: throw std::invalid_argument("Pauli factor index must be 0..3");
  }
}

}  // namespace detail

// Oracle mapping projectors and Pauli observables to sampled outcome
// frequencies under the configured photon budget and error model. Mutable
// (RNG + counters): one instance per run, not shared across threads.
class MeasurementBackend {
 public:
  MeasurementBackend(DensityMatrix true_state, PhotonBudgetConfig photons,
                     std::optional<WaveplateErrorModel> errors, std::uint64_t rng_seed)
      : true_state_(std::move(true_state)),
        photons_(photons),
        errors_(std::move(errors)),
        rng_(rng_seed) {
    photons_.validate();
    if (errors_) errors_->validate();
    if (errors_active() && errors_->redraw == WaveplateErrorModel::Redraw::PerRun) {
      std::normal_distribution<double> gauss(0.0, errors_->sigma_degrees);
      for (auto& arm : fixed_offsets_) {
        arm[0] = gauss(rng_);
        arm[1] = gauss(rng_);
      }
    }
  }

  int dim() const { return true_state_.dim(); }
  const DensityMatrix& true_state() const { return true_state_; }
  const PhotonBudgetConfig& photon_config() const { return photons_; }
  std::uint64_t photons_consumed() const { return photons_consumed_; }
  std::uint64_t zero_photon_events() const { return zero_photon_events_; }

  bool errors_active() const { return errors_.has_value() && errors_->sigma_degrees > 0.0; }

  // Sampled estimate of <psi|rho|psi>. Zero-photon draws return the
  // uninformative 0.5 and are tallied rather than retried, so photon
  // accounting stays unbiased.
  double measure_expectation(const PureState& projector) {
    const double p = effective_projector_probability(projector);
    if (photons_.is_ideal()) return p;
    return sample_counts(p).frequency();
  }

  // Separable two-qubit projector, one analysis waveplate pair per arm.
  double measure_expectation(const PureState& arm1, const PureState& arm2) {
    const double p = effective_projector_probability(arm1, arm2);
    if (photons_.is_ideal()) return p;
    return sample_counts(p).frequency();
  }

  // Raw (successes, photons) pair behind measure_expectation; a zero-photon
  // event yields (0, 0).
  Counts sample_projector_counts(const PureState& projector) {
    const double p = effective_projector_probability(projector);
    if (photons_.is_ideal()) return ideal_counts(p);
    return sample_counts(p);
  }

  Counts sample_projector_counts(const PureState& arm1, const PureState& arm2) {
    const double p = effective_projector_probability(arm1, arm2);
    if (photons_.is_ideal()) return ideal_counts(p);
    return sample_counts(p);
  }

  // Sampled estimate of Tr(rho P) from outcomes in the local eigenbasis of P.
  // The identity is known a priori: exactly 1 at zero photon cost. Zero-photon
  // draws return the uninformative 0 and are tallied.
  double measure_pauli(const PauliOp& p) {
    if (p.dimension != dim()) {
      throw std::invalid_argument("measure_pauli: dimension mismatch");
    }
    if (p.is_identity()) return 1.0;
    return dim() == 2 ? measure_pauli_1q(p) : measure_pauli_2q(p);
  }

 private:
  // Photons used when representing an exact probability as counts (ideal
  // backends feeding estimators that want (n, N) pairs).
  static constexpr std::uint64_t kIdealShots = 100'000'000;

  static Counts ideal_counts(double p) {
    return Counts{static_cast<std::uint64_t>(std::llround(p * static_cast<double>(kIdealShots))),
                  kIdealShots};
  }

  WaveplateAngles perturbed_angles(const WaveplateAngles& requested, int arm) {
    if (errors_->redraw == WaveplateErrorModel::Redraw::PerRun) {
      return WaveplateAngles{requested.qwp_degrees + fixed_offsets_[arm][0],
                             requested.hwp_degrees + fixed_offsets_[arm][1]};
    }
    std::normal_distribution<double> gauss(0.0, errors_->sigma_degrees);
    const double dq = gauss(rng_);
    const double dh = gauss(rng_);
    return WaveplateAngles{requested.qwp_degrees + dq, requested.hwp_degrees + dh};
  }

  // Projector the analysis optics actually realize for a requested state.
  PureState distorted_projector(const PureState& requested, int arm) {
    const WaveplateAngles ideal = projector_to_waveplate_angles(requested);
    return projector_from_waveplate_angles(perturbed_angles(ideal, arm));
  }

  std::pair<PureState, PureState> distorted_basis(const PureState& requested_plus, int arm) {
    const WaveplateAngles ideal = projector_to_waveplate_angles(requested_plus);
    return basis_from_waveplate_angles(perturbed_angles(ideal, arm));
  }

  double effective_projector_probability(const PureState& projector) {
    if (projector.dim() != dim()) {
      throw std::invalid_argument("measurement projector dimension mismatch");
    }
    if (!errors_active()) return expectation(true_state_, projector);
    if (dim() != 2) {
      throw std::invalid_argument(
          "waveplate errors on two qubits require a separable projector (per-arm form)");
    }
    return expectation(true_state_, distorted_projector(projector, 0));
  }

  double effective_projector_probability(const PureState& arm1, const PureState& arm2) {
    if (dim() != 4 || arm1.dim() != 2 || arm2.dim() != 2) {
      throw std::invalid_argument("per-arm projector form requires a two-qubit backend");
    }
    if (!errors_active()) return expectation(true_state_, tensor(arm1, arm2));
    return expectation(true_state_,
                       tensor(distorted_projector(arm1, 0), distorted_projector(arm2, 1)));
  }

  // Poisson draw; a degenerate lambda = 0 budget never yields photons.
  std::uint64_t draw_photons() {
    const double lambda = photons_.mean_photons_per_expectation;
    std::uint64_t n = 0;
    if (lambda > 0.0) {
      std::poisson_distribution<std::uint64_t> poisson(lambda);
      n = poisson(rng_);
    }
    photons_consumed_ += n;
    if (n == 0) ++zero_photon_events_;
    return n;
  }

  Counts sample_counts(double p) {
    const double clamped = detail::clamp_probability(p);
    const std::uint64_t n_photons = draw_photons();
    if (n_photons == 0) return Counts{0, 0};
    std::binomial_distribution<std::uint64_t> binomial(n_photons, clamped);
    return Counts{binomial(rng_), n_photons};
  }

  double measure_pauli_1q(const PauliOp& p) {
    detail::LocalBasis basis = detail::pauli_eigenbasis(p.index);
    if (errors_active()) {
      auto [plus, minus] = distorted_basis(basis.plus, 0);
      basis.plus = std::move(plus);
      basis.minus = std::move(minus);
    }
    const double prob_plus = expectation(true_state_, basis.plus);
    if (photons_.is_ideal()) {
      return basis.eig_plus * prob_plus + basis.eig_minus * (1.0 - prob_plus);
    }
    const Counts c = sample_counts(prob_plus);
    if (c.total == 0) return 0.0;
    const double n_plus = static_cast<double>(c.successes);
    const double n_minus = static_cast<double>(c.total - c.successes);
    return (basis.eig_plus * n_plus + basis.eig_minus * n_minus) /
           static_cast<double>(c.total);
  }

  double measure_pauli_2q(const PauliOp& p) {
    detail::LocalBasis b1 = detail::pauli_eigenbasis(p.first_factor());
    detail::LocalBasis b2 = detail::pauli_eigenbasis(p.second_factor());
    if (errors_active()) {
      // The identity arm counts both ports as +1, so its setting is
      // irrelevant and no offsets are drawn for it.
      if (p.first_factor() != 0) {
        auto [plus, minus] = distorted_basis(b1.plus, 0);
        b1.plus = std::move(plus);
        b1.minus = std::move(minus);
      }
      if (p.second_factor() != 0) {
        auto [plus, minus] = distorted_basis(b2.plus, 1);
        b2.plus = std::move(plus);
        b2.minus = std::move(minus);
      }
    }

    std::array<double, 4> prob{};
    std::array<double, 4> eig{};
    const PureState* s1[2] = {&b1.plus, &b1.minus};
    const PureState* s2[2] = {&b2.plus, &b2.minus};
    const double e1[2] = {b1.eig_plus, b1.eig_minus};
    const double e2[2] = {b2.eig_plus, b2.eig_minus};
    double total_prob = 0.0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const int k = 2 * i + j;
        prob[k] = expectation(true_state_, tensor(*s1[i], *s2[j]));
        eig[k] = e1[i] * e2[j];
        total_prob += prob[k];
      }
    }
    for (double& q : prob) q /= total_prob;  // kill roundoff drift

    if (photons_.is_ideal()) {
      double value = 0.0;
      for (int k = 0; k < 4; ++k) value += prob[k] * eig[k];
      return value;
    }

    const std::uint64_t n_photons = draw_photons();
    if (n_photons == 0) return 0.0;
    const std::array<std::uint64_t, 4> outcome = sample_multinomial(n_photons, prob);
    double value = 0.0;
    for (int k = 0; k < 4; ++k) value += static_cast<double>(outcome[k]) * eig[k];
    return value / static_cast<double>(n_photons);
  }

  std::array<std::uint64_t, 4> sample_multinomial(std::uint64_t n,
                                                  const std::array<double, 4>& prob) {
    std::array<std::uint64_t, 4> out{};
    std::uint64_t remaining = n;
    double prob_left = 1.0;
    for (int k = 0; k < 3 && remaining > 0; ++k) {
      const double cond = std::clamp(prob[k] / std::max(prob_left, 1e-300), 0.0, 1.0);
      std::binomial_distribution<std::uint64_t> binomial(remaining, cond);
      out[k] = binomial(rng_);
      remaining -= out[k];
      prob_left -= prob[k];
    }
    out[3] = remaining;
    return out;
  }

  DensityMatrix true_state_;
  PhotonBudgetConfig photons_;
  std::optional<WaveplateErrorModel> errors_;
  std::mt19937_64 rng_;
  std::uint64_t photons_consumed_ = 0;
  std::uint64_t zero_photon_events_ = 0;
  std::array<std::array<double, 2>, 2> fixed_offsets_{};
};

}  // namespace sgtomo
