#include <sgtomo/measure.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sgtomo;

namespace {

PureState ket_plus() {
  Vector v(2);
  v << Complex(1, 0), Complex(1, 0);
  return PureState(std::move(v));
}

DensityMatrix rho0() { return DensityMatrix::pure(PureState::basis(2, 0)); }

// E[1/N ; N > 0] for N ~ Poisson(lambda), via the log-space PMF so large
// means do not underflow.
double poisson_inverse_moment(double lambda) {
  const int lo = std::max(1, static_cast<int>(lambda - 12.0 * std::sqrt(lambda) - 5.0));
  const int hi = static_cast<int>(lambda + 12.0 * std::sqrt(lambda) + 30.0);
  double sum = 0.0;
  for (int k = lo; k <= hi; ++k) {
    const double log_pmf = -lambda + k * std::log(lambda) - std::lgamma(k + 1.0);
    sum += std::exp(log_pmf) / k;
  }
  return sum;
}

}  // namespace

TEST(Backend, IdealModeMatchesExactExpectation) {
  MeasurementBackend backend(rho0(), PhotonBudgetConfig::ideal(), std::nullopt, 1);
  EXPECT_DOUBLE_EQ(backend.measure_expectation(PureState::basis(2, 0)), 1.0);
  EXPECT_DOUBLE_EQ(backend.measure_expectation(ket_plus()), 0.5);
  EXPECT_EQ(backend.photons_consumed(), 0u);

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    PureState target = haar_random_state(2, rng);
    PureState probe = haar_random_state(2, rng);
    MeasurementBackend b(DensityMatrix::pure(target), PhotonBudgetConfig::ideal(),
                         std::nullopt, 2);
    EXPECT_DOUBLE_EQ(b.measure_expectation(probe),
                     expectation(DensityMatrix::pure(target), probe));
  }
}

TEST(Backend, CertainOutcomeIsExactWheneverPhotonsArrive) {
  MeasurementBackend backend(rho0(), PhotonBudgetConfig::sampled(3.5), std::nullopt, 7);
  int zero_photon = 0;
  for (int i = 0; i < 2000; ++i) {
    const double f = backend.measure_expectation(PureState::basis(2, 0));
    if (f == 0.5 && backend.zero_photon_events() > static_cast<std::uint64_t>(zero_photon)) {
      ++zero_photon;
      continue;
    }
    EXPECT_DOUBLE_EQ(f, 1.0);
  }
  // P(N=0) = e^{-3.5} is about 3%; the tally must reflect the events seen.
  EXPECT_GT(zero_photon, 0);
  EXPECT_EQ(backend.zero_photon_events(), static_cast<std::uint64_t>(zero_photon));
}

// Monte-Carlo oracle: for p = 1/2 the zero-photon fallback equals the mean,
// so Var(f) = p(1-p) E[1/N; N>0]; the empirical mean must sit within 3 sigma.
TEST(Backend, SampledFrequencyMatchesAnalyticVariance) {
  const double lambda = 3.5;
  MeasurementBackend backend(rho0(), PhotonBudgetConfig::sampled(lambda), std::nullopt, 11);
  const int calls = 100000;
  double sum = 0.0;
  for (int i = 0; i < calls; ++i) sum += backend.measure_expectation(ket_plus());
  const double mean = sum / calls;
  const double var_single = 0.25 * poisson_inverse_moment(lambda);
  const double sigma_mean = std::sqrt(var_single / calls);
  EXPECT_NEAR(mean, 0.5, 3.0 * sigma_mean);
}

TEST(Backend, PhotonAccountingIsExact) {
  MeasurementBackend backend(rho0(), PhotonBudgetConfig::sampled(5.0), std::nullopt, 13);
  std::uint64_t total = 0;
  for (int i = 0; i < 500; ++i) {
    std::uint64_t before = backend.photons_consumed();
    Counts c = backend.sample_projector_counts(ket_plus());
    EXPECT_EQ(backend.photons_consumed() - before, c.total);
    EXPECT_LE(c.successes, c.total);
    total += c.total;
  }
  EXPECT_EQ(backend.photons_consumed(), total);
}

TEST(Backend, SameSeedReproducesBitIdenticalSequences) {
  auto run = [](std::uint64_t seed) {
    MeasurementBackend backend(rho0(), PhotonBudgetConfig::sampled(3.5),
                               WaveplateErrorModel{2.0}, seed);
    std::vector<double> out;
    for (int i = 0; i < 200; ++i) out.push_back(backend.measure_expectation(ket_plus()));
    out.push_back(static_cast<double>(backend.photons_consumed()));
    return out;
  };
  EXPECT_EQ(run(99), run(99));
  EXPECT_NE(run(99), run(100));
}

TEST(Backend, ZeroSigmaIsBitIdenticalToNoErrorModel) {
  auto run = [](std::optional<WaveplateErrorModel> errors) {
    MeasurementBackend backend(rho0(), PhotonBudgetConfig::sampled(3.5), errors, 17);
    std::vector<double> out;
    for (int i = 0; i < 200; ++i) out.push_back(backend.measure_expectation(ket_plus()));
    return out;
  };
  EXPECT_EQ(run(std::nullopt), run(WaveplateErrorModel{0.0}));
}

TEST(Backend, LambdaZeroNeverYieldsPhotons) {
  MeasurementBackend backend(rho0(), PhotonBudgetConfig::sampled(0.0), std::nullopt, 19);
  for (int i = 0; i < 10; ++i) {
    EXPECT_DOUBLE_EQ(backend.measure_expectation(PureState::basis(2, 0)), 0.5);
  }
  EXPECT_EQ(backend.photons_consumed(), 0u);
  EXPECT_EQ(backend.zero_photon_events(), 10u);
}

TEST(Backend, WaveplateErrorsDegradeAlignedProjector) {
  double previous_mean = 1.0;
  for (double sigma : WaveplateErrorModel::default_levels()) {
    MeasurementBackend backend(rho0(), PhotonBudgetConfig::ideal(),
                               WaveplateErrorModel{sigma}, 23);
    double sum = 0.0;
    for (int i = 0; i < 400; ++i) sum += backend.measure_expectation(PureState::basis(2, 0));
    const double mean = sum / 400.0;
    EXPECT_LT(mean, previous_mean);
    EXPECT_GT(mean, 0.5);
    previous_mean = mean;
  }
}

TEST(Backend, PerRunErrorsAreFrozenPerMeasurementErrorsAreNot) {
  WaveplateErrorModel frozen{4.0};
  frozen.redraw = WaveplateErrorModel::Redraw::PerRun;
  MeasurementBackend backend(rho0(), PhotonBudgetConfig::ideal(), frozen, 29);
  const double first = backend.measure_expectation(ket_plus());
  for (int i = 0; i < 20; ++i) {
    EXPECT_DOUBLE_EQ(backend.measure_expectation(ket_plus()), first);
  }

  MeasurementBackend fresh(rho0(), PhotonBudgetConfig::ideal(), WaveplateErrorModel{4.0}, 29);
  const double a = fresh.measure_expectation(ket_plus());
  const double b = fresh.measure_expectation(ket_plus());
  EXPECT_NE(a, b);
}

TEST(Backend, PauliIdentityIsFreeAndExact) {
  MeasurementBackend backend(DensityMatrix::pure(singlet_state()),
                             PhotonBudgetConfig::sampled(100.0), std::nullopt, 31);
  EXPECT_DOUBLE_EQ(backend.measure_pauli(two_qubit_pauli(0, 0)), 1.0);
  EXPECT_EQ(backend.photons_consumed(), 0u);
}

TEST(Backend, PauliIdealValues) {
  MeasurementBackend singlet(DensityMatrix::pure(singlet_state()),
                             PhotonBudgetConfig::ideal(), std::nullopt, 37);
  EXPECT_NEAR(singlet.measure_pauli(two_qubit_pauli(1, 1)), -1.0, 1e-12);
  EXPECT_NEAR(singlet.measure_pauli(two_qubit_pauli(2, 2)), -1.0, 1e-12);
  EXPECT_NEAR(singlet.measure_pauli(two_qubit_pauli(3, 3)), -1.0, 1e-12);
  EXPECT_NEAR(singlet.measure_pauli(two_qubit_pauli(0, 3)), 0.0, 1e-12);

  MeasurementBackend mixed(DensityMatrix::maximally_mixed(4), PhotonBudgetConfig::ideal(),
                           std::nullopt, 41);
  for (int flat = 1; flat < kNumTwoQubitPaulis; ++flat) {
    EXPECT_NEAR(mixed.measure_pauli(two_qubit_pauli(flat)), 0.0, 1e-12);
  }

  MeasurementBackend one_qubit(rho0(), PhotonBudgetConfig::ideal(), std::nullopt, 43);
  EXPECT_NEAR(one_qubit.measure_pauli(single_qubit_pauli(3)), 1.0, 1e-12);
  EXPECT_NEAR(one_qubit.measure_pauli(single_qubit_pauli(1)), 0.0, 1e-12);
}

// Perfect anticorrelation: every sampled ZZ value on the singlet is exactly -1
// whenever photons arrive, so the empirical mean pins to the boundary.
TEST(Backend, PauliSampledSingletAnticorrelation) {
  MeasurementBackend backend(DensityMatrix::pure(singlet_state()),
                             PhotonBudgetConfig::sampled(1000.0), std::nullopt, 47);
  double sum = 0.0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) sum += backend.measure_pauli(two_qubit_pauli(3, 3));
  EXPECT_NEAR(sum / trials, -1.0, 1e-12);
}

// Stochastic case: XX on |00> has symmetric outcomes; the analytic variance of
// one trial is E[1/N], giving a 3-sigma band for the empirical mean.
TEST(Backend, PauliSampledMeanWithinThreeSigma) {
  const double lambda = 1000.0;
  MeasurementBackend backend(
      DensityMatrix::pure(tensor(PureState::basis(2, 0), PureState::basis(2, 0))),
      PhotonBudgetConfig::sampled(lambda), std::nullopt, 53);
  double sum = 0.0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) sum += backend.measure_pauli(two_qubit_pauli(1, 1));
  const double sigma_mean = std::sqrt(poisson_inverse_moment(lambda) / trials);
  EXPECT_NEAR(sum / trials, 0.0, 3.0 * sigma_mean);
}

TEST(Backend, SeparableProjectorFormMatchesTensor) {
  std::mt19937_64 rng(59);
  DensityMatrix rho = DensityMatrix::pure(haar_random_state(4, rng));
  MeasurementBackend backend(rho, PhotonBudgetConfig::ideal(), std::nullopt, 61);
  for (int trial = 0; trial < 20; ++trial) {
    PureState a = haar_random_state(2, rng);
    PureState b = haar_random_state(2, rng);
    EXPECT_DOUBLE_EQ(backend.measure_expectation(a, b),
                     backend.measure_expectation(tensor(a, b)));
  }
}

TEST(Backend, TwoQubitErrorsRequireSeparableForm) {
  MeasurementBackend backend(DensityMatrix::pure(singlet_state()),
                             PhotonBudgetConfig::ideal(), WaveplateErrorModel{2.0}, 67);
  EXPECT_THROW(backend.measure_expectation(singlet_state()), std::invalid_argument);
  // Per-arm form works and stays a probability.
  const double p = backend.measure_expectation(PureState::basis(2, 0), PureState::basis(2, 1));
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
}

TEST(Backend, ConfigValidation) {
  EXPECT_THROW(PhotonBudgetConfig::sampled(-1.0), std::invalid_argument);
  WaveplateErrorModel bad_levels{1.0, {2.0, 1.0}};
  EXPECT_THROW(bad_levels.validate(), std::invalid_argument);
  WaveplateErrorModel bad_sigma{-0.5};
  EXPECT_THROW(bad_sigma.validate(), std::invalid_argument);
}
