// qcore.hpp
// Exact complex linear algebra for one- and two-qubit states: pure states,
// density matrices, the Pauli basis, tensor products, fidelities and
// Bloch-vector conversions. Deterministic dense double-precision algebra;
// all sampling lives in measure.hpp.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace sgtomo {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kUnitNormTol = 1e-12;
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kClampTol = 1e-9;

namespace detail {

inline bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

// Roundoff just outside the valid range is clamped; anything worse is a bug
// upstream, not noise, and gets reported as such.
inline double clamp_range(double value, double lo, double hi, const char* what) {
  if (value < lo - kClampTol || value > hi + kClampTol) {
    throw std::runtime_error(std::string(what) + " out of range beyond roundoff: " +
                             std::to_string(value));
  }
  return std::min(hi, std::max(lo, value));
}

inline double clamp_probability(double p) { return clamp_range(p, 0.0, 1.0, "probability"); }

inline double clamp_pauli_value(double v) {
  return clamp_range(v, -1.0, 1.0, "Pauli expectation");
}

}  // namespace detail

// Normalized complex amplitude vector over dimension d = 2^n.
class PureState {
 public:
  explicit PureState(Vector amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() < 2 || !detail::is_power_of_two(amplitudes_.size())) {
      throw std::invalid_argument("PureState dimension must be a power of two >= 2");
    }
    const double norm = amplitudes_.norm();
    if (norm < 1e-14) {
      throw std::invalid_argument("PureState amplitudes are numerically zero");
    }
    amplitudes_ /= norm;
  }

  // Computational basis state |index> in dimension dim.
  static PureState basis(int dim, int index) {
    if (index < 0 || index >= dim) {
      throw std::invalid_argument("basis index out of range");
    }
    Vector v = Vector::Zero(dim);
    v(index) = Complex(1.0, 0.0);
    return PureState(std::move(v));
  }

  int dim() const { return static_cast<int>(amplitudes_.size()); }
  int num_qubits() const {
    int n = 0;
    for (int d = dim(); d > 1; d >>= 1) ++n;
    return n;
  }
  const Vector& amplitudes() const { return amplitudes_; }
  Complex amplitude(int i) const { return amplitudes_(i); }

  // <this|other>
  Complex overlap(const PureState& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("overlap: dimension mismatch");
    return amplitudes_.dot(other.amplitudes_);
  }

 private:
  Vector amplitudes_;
};

// d x d Hermitian, PSD, trace-one matrix. Invariants are checked on
// construction; instances are immutable afterwards.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix elements) {
    if (elements.rows() != elements.cols() || elements.rows() < 2 ||
        !detail::is_power_of_two(elements.rows())) {
      throw std::invalid_argument("DensityMatrix must be square with power-of-two dimension");
    }
    const double herm_err = (elements - elements.adjoint()).cwiseAbs().maxCoeff();
    if (herm_err > kHermitianTol) {
      throw std::invalid_argument("DensityMatrix is not Hermitian: max asymmetry " +
                                  std::to_string(herm_err));
    }
    const double trace_err = std::abs(elements.trace() - Complex(1.0, 0.0));
    if (trace_err > kHermitianTol) {
      throw std::invalid_argument("DensityMatrix trace differs from one by " +
                                  std::to_string(trace_err));
    }
    elements_ = 0.5 * (elements + elements.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(elements_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPsdTol) {
      throw std::invalid_argument("DensityMatrix has eigenvalue below -1e-10: " +
                                  std::to_string(es.eigenvalues().minCoeff()));
    }
  }

  static DensityMatrix pure(const PureState& psi) {
    const Vector& a = psi.amplitudes();
    return DensityMatrix(a * a.adjoint());
  }

  static DensityMatrix maximally_mixed(int dim) {
    return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  int dim() const { return static_cast<int>(elements_.rows()); }
  const Matrix& elements() const { return elements_; }

 private:
  Matrix elements_;
};

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline const char* pauli_name(int i) {
  static constexpr const char* names[4] = {"I", "X", "Y", "Z"};
  if (i < 0 || i > 3) throw std::invalid_argument("Pauli factor index must be 0..3");
  return names[i];
}

// 2x2 Pauli matrix, factor index 0..3 = I, X, Y, Z.
inline Matrix single_qubit_pauli_matrix(int i) {
  Matrix m(2, 2);
  const Complex z(0.0, 0.0), one(1.0, 0.0), im(0.0, 1.0);
  switch (i) {
    case 0: m << one, z, z, one; break;
    case 1: m << z, one, one, z; break;
    case 2: m << z, -im, im, z; break;
    case 3: m << one, z, z, -one; break;
    default: throw std::invalid_argument("Pauli factor index must be 0..3");
  }
  return m;
}

// Hermitian, unitary observable from the Pauli basis. One-qubit ops carry
// index 0..3; two-qubit ops carry index 4*i + j for P_i (x) P_j.
struct PauliOp {
  int index = 0;
  int dimension = 2;
  Matrix matrix;

  bool is_identity() const { return index == 0; }
  int first_factor() const { return dimension == 2 ? index : index / 4; }
  int second_factor() const {
    if (dimension != 4) throw std::logic_error("second_factor requires a two-qubit Pauli");
    return index % 4;
  }
  std::string name() const {
    if (dimension == 2) return pauli_name(index);
    return std::string(pauli_name(first_factor())) + pauli_name(second_factor());
  }
};

inline PauliOp single_qubit_pauli(int i) {
  return PauliOp{i, 2, single_qubit_pauli_matrix(i)};
}

inline Matrix tensor(const Matrix& a, const Matrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

inline PureState tensor(const PureState& a, const PureState& b) {
  Vector v = Eigen::kroneckerProduct(a.amplitudes(), b.amplitudes()).eval();
  return PureState(std::move(v));
}

inline PauliOp two_qubit_pauli(int i, int j) {
  if (i < 0 || i > 3 || j < 0 || j > 3) {
    throw std::invalid_argument("two-qubit Pauli factor indices must be 0..3");
  }
  return PauliOp{4 * i + j, 4,
                 tensor(single_qubit_pauli_matrix(i), single_qubit_pauli_matrix(j))};
}

inline PauliOp two_qubit_pauli(int flat) { return two_qubit_pauli(flat / 4, flat % 4); }

inline constexpr int kNumTwoQubitPaulis = 16;

// <psi|rho|psi>, the Born-rule probability of projecting rho onto psi.
inline double expectation(const DensityMatrix& rho, const PureState& psi) {
  if (rho.dim() != psi.dim()) {
    throw std::invalid_argument("expectation: dimension mismatch");
  }
  const Complex raw = psi.amplitudes().dot(rho.elements() * psi.amplitudes());
  return detail::clamp_probability(raw.real());
}

// Tr(rho P). The imaginary part is a roundoff residue and must stay below 1e-10.
inline double pauli_expectation(const DensityMatrix& rho, const PauliOp& p) {
  if (rho.dim() != p.dimension) {
    throw std::invalid_argument("pauli_expectation: dimension mismatch");
  }
  const Complex tr = (rho.elements() * p.matrix).trace();
  if (std::abs(tr.imag()) > 1e-10) {
    throw std::runtime_error("pauli_expectation: imaginary residue " +
                             std::to_string(tr.imag()));
  }
  return detail::clamp_pauli_value(tr.real());
}

// <psi|P|psi> without building the density matrix.
inline double pauli_expectation(const PureState& psi, const PauliOp& p) {
  if (psi.dim() != p.dimension) {
    throw std::invalid_argument("pauli_expectation: dimension mismatch");
  }
  const Complex raw = psi.amplitudes().dot(p.matrix * psi.amplitudes());
  return detail::clamp_pauli_value(raw.real());
}

namespace detail {

// Eigenvalues below this are eigensolver residue on rank-deficient inputs;
// taking their square root would inject O(1e-8) noise into fidelities.
inline constexpr double kSpectrumTruncation = 1e-13;

inline Eigen::VectorXd truncated_sqrt(const Eigen::VectorXd& vals) {
  Eigen::VectorXd out = vals;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out(i) = out(i) > kSpectrumTruncation ? std::sqrt(out(i)) : 0.0;
  }
  return out;
}

inline Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Eigen::VectorXd vals = truncated_sqrt(es.eigenvalues());
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2. Symmetric in its arguments
// and equal to <phi|b|phi> when a = |phi><phi|.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  const Matrix sa = detail::psd_sqrt(a.elements());
  Matrix m = sa * b.elements() * sa;
  m = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const double tr = detail::truncated_sqrt(es.eigenvalues()).sum();
  return detail::clamp_probability(tr * tr);
}

inline double fidelity(const PureState& psi, const DensityMatrix& rho) {
  return expectation(rho, psi);
}

inline double fidelity(const DensityMatrix& rho, const PureState& psi) {
  return expectation(rho, psi);
}

inline double fidelity(const PureState& a, const PureState& b) {
  return detail::clamp_probability(std::norm(a.overlap(b)));
}

// Bloch coordinates of a single-qubit pure state; always unit norm.
inline BlochVector bloch_from_state(const PureState& psi) {
  if (psi.dim() != 2) throw std::invalid_argument("bloch_from_state requires one qubit");
  const Complex a = psi.amplitude(0), b = psi.amplitude(1);
  const Complex cross = std::conj(a) * b;
  return BlochVector{2.0 * cross.real(), 2.0 * cross.imag(),
                     std::norm(a) - std::norm(b)};
}

inline PureState state_from_bloch(const BlochVector& v) {
  if (std::abs(v.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("state_from_bloch requires a unit vector, |v| = " +
                                std::to_string(v.norm()));
  }
  const double theta = std::acos(std::clamp(v.z, -1.0, 1.0));
  const double phi = std::atan2(v.y, v.x);
  Vector amps(2);
  amps << Complex(std::cos(theta / 2.0), 0.0),
      std::exp(Complex(0.0, phi)) * std::sin(theta / 2.0);
  return PureState(std::move(amps));
}

// 4x4 table of two-qubit Pauli expectations, entry (i,j) = <P_i (x) P_j>/4.
// Entry (0,0) is 0.25 for any state; all entries lie in [-0.25, 0.25].
inline Eigen::Matrix4d pauli_table(const PureState& psi) {
  if (psi.dim() != 4) throw std::invalid_argument("pauli_table requires two qubits");
  Eigen::Matrix4d table;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      table(i, j) = 0.25 * pauli_expectation(psi, two_qubit_pauli(i, j));
    }
  }
  return table;
}

// Haar-random pure state: normalized vector of iid complex Gaussians.
inline PureState haar_random_state(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v(i) = Complex(re, im);
  }
  return PureState(std::move(v));
}

// Singlet (|01> - |10>)/sqrt(2).
inline PureState singlet_state() {
  Vector v = Vector::Zero(4);
  v(1) = Complex(1.0 / std::sqrt(2.0), 0.0);
  v(2) = Complex(-1.0 / std::sqrt(2.0), 0.0);
  return PureState(std::move(v));
}

}  // namespace sgtomo
