#include <sgtomo/optics.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sgtomo;

namespace {

PureState ket_h() { return PureState::basis(2, 0); }
PureState ket_v() { return PureState::basis(2, 1); }

PureState ket_d() {
  Vector v(2);
  v << Complex(1, 0), Complex(1, 0);
  return PureState(std::move(v));
}

// Relative phase between the V and H components, in radians.
double relative_phase(const PureState& psi) {
  return std::arg(psi.amplitude(1) / psi.amplitude(0));
}

}  // namespace

TEST(Jones, HalfWaveplatePreparesDiagonal) {
  PureState out = jones_matrix(PlateKind::HWP, 22.5).apply(ket_h());
  EXPECT_NEAR(fidelity(out, ket_d()), 1.0, 1e-14);
}

TEST(Jones, HalfWaveplateEigenstates) {
  PureState out = jones_matrix(PlateKind::HWP, 0.0).apply(ket_v());
  EXPECT_NEAR((out.amplitudes() + ket_v().amplitudes()).norm(), 0.0, 1e-15);

  // +1 eigenvector of HWP(theta) is the linear polarization at theta.
  for (double theta : {10.0, 33.0, 61.5, 120.0}) {
    Vector lin(2);
    lin << Complex(std::cos(theta * kDegToRad), 0),
        Complex(std::sin(theta * kDegToRad), 0);
    PureState at_theta(std::move(lin));
    PureState mapped = jones_matrix(PlateKind::HWP, theta).apply(at_theta);
    EXPECT_NEAR((mapped.amplitudes() - at_theta.amplitudes()).norm(), 0.0, 1e-13);
  }
}

TEST(Jones, UnitaryAndInvolutive) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  for (int trial = 0; trial < 100; ++trial) {
    for (PlateKind kind : {PlateKind::HWP, PlateKind::QWP}) {
      JonesMatrix j = jones_matrix(kind, angle(rng));
      EXPECT_LT((j.m * j.m.adjoint() - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff(),
                1e-12);
    }
    // HWP(theta)^2 = identity (diag(1,-1) retarder squares exactly).
    JonesMatrix h = jones_matrix(PlateKind::HWP, angle(rng));
    EXPECT_LT((h.m * h.m - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Jones, QuarterWaveplateEigenvalues) {
  JonesMatrix q = jones_matrix(PlateKind::QWP, 30.0);
  Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(q.m);
  std::array<Complex, 2> vals = {es.eigenvalues()(0), es.eigenvalues()(1)};
  std::sort(vals.begin(), vals.end(),
            [](Complex a, Complex b) { return a.imag() < b.imag(); });
  EXPECT_NEAR(std::abs(vals[0] - Complex(1, 0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(vals[1] - Complex(0, 1)), 0.0, 1e-12);
}

// The phase plate of the pair source: an HWP between two 45-degree QWPs
// advances the relative H/V phase by 4 degrees per degree of HWP rotation.
TEST(Jones, PhasePlateSlopeIsFour) {
  auto composite_phase = [](double theta_deg) {
    const Eigen::Matrix2cd chain = jones_matrix(PlateKind::QWP, 45.0).m *
                                   jones_matrix(PlateKind::HWP, theta_deg).m *
                                   jones_matrix(PlateKind::QWP, 45.0).m;
    Vector v = chain * ket_d().amplitudes();
    PureState out(std::move(v));
    EXPECT_NEAR(std::abs(out.amplitude(0)), std::abs(out.amplitude(1)), 1e-12);
    return relative_phase(out);
  };

  double prev = composite_phase(0.0);
  for (double theta = 0.5; theta <= 20.0; theta += 0.5) {
    double cur = composite_phase(theta);
    double dphi = cur - prev;
    while (dphi > std::numbers::pi) dphi -= 2.0 * std::numbers::pi;
    while (dphi < -std::numbers::pi) dphi += 2.0 * std::numbers::pi;
    EXPECT_NEAR(dphi / (0.5 * kDegToRad), 4.0, 1e-9);
    prev = cur;
  }
}

TEST(WaveplateAngles, HorizontalIsIdentitySetting) {
  WaveplateAngles angles = projector_to_waveplate_angles(ket_h());
  EXPECT_NEAR(angles.qwp_degrees, 0.0, 1e-12);
  EXPECT_NEAR(angles.hwp_degrees, 0.0, 1e-12);
}

TEST(WaveplateAngles, DiagonalRoundTrip) {
  WaveplateAngles angles = projector_to_waveplate_angles(ket_d());
  PureState realized = projector_from_waveplate_angles(angles);
  EXPECT_NEAR(fidelity(realized, ket_d()), 1.0, 1e-10);
}

TEST(WaveplateAngles, HaarRandomRoundTrips) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    PureState psi = haar_random_state(2, rng);
    WaveplateAngles angles = projector_to_waveplate_angles(psi);
    PureState realized = projector_from_waveplate_angles(angles);
    EXPECT_NEAR(fidelity(realized, psi), 1.0, 1e-9);

    auto [b0, b1] = basis_from_waveplate_angles(angles);
    EXPECT_NEAR(std::abs(b0.overlap(b1)), 0.0, 1e-12);
  }
}

TEST(BellSource, PhaseSelectsBellStates) {
  PureState singlet = bell_state(BellSourceModel{45.0, 0.0});
  EXPECT_NEAR(fidelity(singlet, singlet_state()), 1.0, 1e-12);

  PureState psi_plus = bell_state(BellSourceModel{30.0, -30.0});
  Vector plus = Vector::Zero(4);
  plus(1) = plus(2) = Complex(1.0 / std::sqrt(2.0), 0.0);
  EXPECT_NEAR(fidelity(psi_plus, PureState(std::move(plus))), 1.0, 1e-12);

  // Split between plate angle and residual phase.
  PureState s2 = bell_state(BellSourceModel{40.0, 5.0});
  EXPECT_NEAR(fidelity(s2, singlet_state()), 1.0, 1e-12);
}

// Overlap with the singlet follows sin^2(2(theta+epsilon)) across the sweep.
TEST(BellSource, SingletOverlapSweep) {
  const PureState target = singlet_state();
  for (double theta = 0.0; theta <= 90.0; theta += 2.5) {
    PureState out = bell_state(BellSourceModel{theta, 0.0});
    const double expected = std::pow(std::sin(2.0 * theta * kDegToRad), 2);
    EXPECT_NEAR(fidelity(out, target), expected, 1e-12);
  }
}
