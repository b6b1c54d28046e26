// optics.hpp
// Jones-calculus polarization optics: half- and quarter-waveplate matrices,
// inversion of a projector into analysis waveplate angles, and the
// phase-controlled entangled-pair source model.

#pragma once

#include <sgtomo/qcore.hpp>

#include <cmath>
#include <numbers>

namespace sgtomo {

inline constexpr double kDegToRad = std::numbers::pi / 180.0;

enum class PlateKind { HWP, QWP };

// Waveplate at angle theta from horizontal. Unitary; HWP squares to the
// identity up to global phase.
struct JonesMatrix {
  Eigen::Matrix2cd m;
  PlateKind kind = PlateKind::HWP;
  double angle_degrees = 0.0;

  PureState apply(const PureState& psi) const {
    if (psi.dim() != 2) throw std::invalid_argument("JonesMatrix acts on one qubit");
    Vector v = m * psi.amplitudes();
    return PureState(std::move(v));
  }
};

// HWP(theta) = R(theta) diag(1,-1) R(-theta): eigenvalue +1 along the fast
// axis at angle theta. QWP(theta) = R(theta) diag(1,i) R(-theta).
inline JonesMatrix jones_matrix(PlateKind kind, double theta_degrees) {
  const double th = theta_degrees * kDegToRad;
  const double c = std::cos(th), s = std::sin(th);
  Eigen::Matrix2cd rot;
  rot << Complex(c, 0), Complex(-s, 0), Complex(s, 0), Complex(c, 0);
  Eigen::Matrix2cd retard = Eigen::Matrix2cd::Identity();
  retard(1, 1) = kind == PlateKind::HWP ? Complex(-1, 0) : Complex(0, 1);
  JonesMatrix out;
  out.m = rot * retard * rot.adjoint();
  out.kind = kind;
  out.angle_degrees = theta_degrees;
  return out;
}

struct WaveplateAngles {
  double qwp_degrees = 0.0;
  double hwp_degrees = 0.0;
};

// State transmitted by an H-port polarizer preceded by HWP(h) then, against
// the beam, QWP(q): the projector realized by analysis settings (q, h).
inline PureState projector_from_waveplate_angles(const WaveplateAngles& angles) {
  const Eigen::Matrix2cd chain =
      jones_matrix(PlateKind::HWP, angles.hwp_degrees).m *
      jones_matrix(PlateKind::QWP, angles.qwp_degrees).m;
  Vector v = chain.adjoint() * PureState::basis(2, 0).amplitudes();
  return PureState(std::move(v));
}

// Both PBS output ports share the analysis plates, so the realized
// measurement basis stays orthonormal for any (q, h).
inline std::pair<PureState, PureState> basis_from_waveplate_angles(
    const WaveplateAngles& angles) {
  const Eigen::Matrix2cd chain =
      jones_matrix(PlateKind::HWP, angles.hwp_degrees).m *
      jones_matrix(PlateKind::QWP, angles.qwp_degrees).m;
  Vector v0 = chain.adjoint() * PureState::basis(2, 0).amplitudes();
  Vector v1 = chain.adjoint() * PureState::basis(2, 1).amplitudes();
  return {PureState(std::move(v0)), PureState(std::move(v1))};
}

// Analysis angles (q, h) such that QWP(q) then HWP(h) then an H-projector
// transmits |psi> with probability one. The QWP at the polarization-ellipse
// orientation flattens the state to linear polarization; the HWP rotates
// that line onto horizontal.
inline WaveplateAngles projector_to_waveplate_angles(const PureState& psi) {
  if (psi.dim() != 2) {
    throw std::invalid_argument("projector_to_waveplate_angles requires one qubit");
  }
  const Complex a = psi.amplitude(0), b = psi.amplitude(1);
  const double s1 = std::norm(a) - std::norm(b);
  const double s2 = 2.0 * (std::conj(a) * b).real();
  const double q = 0.5 * std::atan2(s2, s1);

  Vector lin = jones_matrix(PlateKind::QWP, q / kDegToRad).m * psi.amplitudes();
  // Strip the global phase via the larger component; what remains is real.
  const Complex anchor = std::norm(lin(0)) >= std::norm(lin(1)) ? lin(0) : lin(1);
  lin *= std::conj(anchor) / std::abs(anchor);
  const double u = std::atan2(lin(1).real(), lin(0).real());
  return WaveplateAngles{q / kDegToRad, 0.5 * u / kDegToRad};
}

// Phase-plate model of the entangled-pair source: HWP at theta between two
// 45-degree QWPs applies phi = 4(theta + epsilon) between the |01> and |10>
// components; epsilon is the residual phase of the whole system.
struct BellSourceModel {
  double theta_degrees = 0.0;
  double epsilon_degrees = 0.0;
};

// (|01> + e^{i phi} |10>)/sqrt(2) with phi = 4(theta + epsilon).
// theta + epsilon = 45 degrees gives the singlet.
inline PureState bell_state(const BellSourceModel& source) {
  const double phi = 4.0 * (source.theta_degrees + source.epsilon_degrees) * kDegToRad;
  Vector v = Vector::Zero(4);
  v(1) = Complex(1.0 / std::sqrt(2.0), 0.0);
  v(2) = std::exp(Complex(0.0, phi)) / std::sqrt(2.0);
  return PureState(std::move(v));
}

}  // namespace sgtomo
