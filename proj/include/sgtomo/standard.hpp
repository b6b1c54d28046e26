// standard.hpp
// Standard-tomography baseline: fixed informationally complete projector
// sets, Born-rule linear inversion, and maximum-likelihood estimation over a
// Cholesky parameterization (rho = T^dag T / Tr(T^dag T), T lower
// triangular), which keeps every estimate physical by construction.

#pragma once

#include <sgtomo/measure.hpp>
#include <sgtomo/qcore.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sgtomo {

// Ordered projector list; two-qubit sets retain the single-qubit factors so
// backends can inject per-arm waveplate errors.
struct TomographySet {
  std::vector<PureState> projectors;
  std::vector<std::pair<PureState, PureState>> factors;  // empty for one qubit

  int dim() const { return projectors.empty() ? 0 : projectors.front().dim(); }
  std::size_t size() const { return projectors.size(); }

  // {H, V, D, R}: the minimal polarization-analysis set.
  static TomographySet one_qubit() {
    const double r = 1.0 / std::sqrt(2.0);
    auto mk = [](Complex a, Complex b) {
      Vector v(2);
      v << a, b;
      return PureState(std::move(v));
    };
    TomographySet set;
    set.projectors = {PureState::basis(2, 0), PureState::basis(2, 1),
                      mk({r, 0}, {r, 0}), mk({r, 0}, {0, r})};
    return set;
  }

  // All 16 tensor pairs of {H, V, D, R}.
  static TomographySet two_qubit() {
    TomographySet one = one_qubit();
    TomographySet set;
    for (const PureState& a : one.projectors) {
      for (const PureState& b : one.projectors) {
        set.projectors.push_back(tensor(a, b));
        set.factors.emplace_back(a, b);
      }
    }
    return set;
  }
};

// Raw per-projector (successes, totals), aligned with the set's projectors.
struct CountVector {
  std::vector<Counts> counts;

  std::uint64_t total_photons() const {
    std::uint64_t sum = 0;
    for (const Counts& c : counts) sum += c.total;
    return sum;
  }
};

// One sampled acquisition of the whole set.
inline CountVector acquire_counts(MeasurementBackend& backend, const TomographySet& set) {
  if (backend.dim() != set.dim()) {
    throw std::invalid_argument("acquire_counts: backend/set dimension mismatch");
  }
  CountVector out;
  out.counts.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.dim() == 4 && !set.factors.empty()) {
      out.counts.push_back(
          backend.sample_projector_counts(set.factors[i].first, set.factors[i].second));
    } else {
      out.counts.push_back(backend.sample_projector_counts(set.projectors[i]));
    }
  }
  return out;
}

// Pools repeated acquisitions projector-by-projector. Binomial likelihoods
// and least squares over the pooled counts equal those over the raw rows.
inline CountVector merge_counts(std::span<const CountVector> acquisitions) {
  if (acquisitions.empty()) throw std::invalid_argument("no acquisitions to merge");
  CountVector merged = acquisitions.front();
  for (std::size_t a = 1; a < acquisitions.size(); ++a) {
    if (acquisitions[a].counts.size() != merged.counts.size()) {
      throw std::invalid_argument("acquisition size mismatch");
    }
    for (std::size_t i = 0; i < merged.counts.size(); ++i) {
      merged.counts[i].successes += acquisitions[a].counts[i].successes;
      merged.counts[i].total += acquisitions[a].counts[i].total;
    }
  }
  return merged;
}

namespace detail {

inline std::vector<Matrix> pauli_basis(int dim) {
  std::vector<Matrix> basis;
  if (dim == 2) {
    for (int i = 0; i < 4; ++i) basis.push_back(single_qubit_pauli_matrix(i));
  } else if (dim == 4) {
    for (int i = 0; i < kNumTwoQubitPaulis; ++i) basis.push_back(two_qubit_pauli(i).matrix);
  } else {
    throw std::invalid_argument("Pauli basis supports dimensions 2 and 4");
  }
  return basis;
}

// Born-rule design matrix: row i, column j holds <psi_i|B_j|psi_i>.
inline Eigen::MatrixXd design_matrix(const TomographySet& set) {
  const std::vector<Matrix> basis = pauli_basis(set.dim());
  Eigen::MatrixXd a(set.size(), basis.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Vector& v = set.projectors[i].amplitudes();
    for (std::size_t j = 0; j < basis.size(); ++j) {
      a(i, j) = (v.dot(basis[j] * v)).real();
    }
  }
  return a;
}

}  // namespace detail

inline void validate_informationally_complete(const TomographySet& set) {
  const Eigen::MatrixXd a = detail::design_matrix(set);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-9);
  const int wanted = set.dim() * set.dim();
  if (qr.rank() < wanted) {
    throw std::invalid_argument("tomography set is not informationally complete (rank " +
                                std::to_string(qr.rank()) + " < " + std::to_string(wanted) +
                                ")");
  }
}

// Least-squares solve of the Born system on raw frequencies. The result is
// Hermitian with unit trace but may carry negative eigenvalues; rows with
// zero weight are dropped. The rows kept must still span operator space.
inline Matrix linear_inversion_frequencies(std::span<const double> frequencies,
                                           std::span<const double> weights,
                                           const TomographySet& set) {
  if (frequencies.size() != set.size() || weights.size() != set.size()) {
    throw std::invalid_argument("one frequency and weight per projector required");
  }
  const Eigen::MatrixXd a_full = detail::design_matrix(set);
  std::vector<int> rows;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (weights[i] > 0.0) rows.push_back(static_cast<int>(i));
  }
  Eigen::MatrixXd a(rows.size(), a_full.cols());
  Eigen::VectorXd f(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    a.row(r) = a_full.row(rows[r]);
    f(r) = frequencies[rows[r]];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-9);
  if (qr.rank() < a.cols()) {
    throw std::invalid_argument("linear inversion needs an informationally complete set "
                                "with nonzero counts");
  }
  const Eigen::VectorXd coeff = qr.solve(f);
  const std::vector<Matrix> basis = detail::pauli_basis(set.dim());
  Matrix rho = Matrix::Zero(set.dim(), set.dim());
  for (std::size_t j = 0; j < basis.size(); ++j) {
    rho += Complex(coeff(j), 0.0) * basis[j];
  }
  const double trace = rho.trace().real();
  if (std::abs(trace) < 1e-9) {
    throw std::invalid_argument("linear inversion produced a traceless estimate");
  }
  return rho / trace;
}

inline Matrix linear_inversion(const CountVector& counts, const TomographySet& set) {
  if (counts.counts.size() != set.size()) {
    throw std::invalid_argument("one count pair per projector required");
  }
  std::vector<double> freq(set.size()), weight(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    freq[i] = counts.counts[i].frequency();
    weight[i] = static_cast<double>(counts.counts[i].total);
  }
  return linear_inversion_frequencies(freq, weight, set);
}

// Eigenvalue clipping at zero followed by trace renormalization: the cheap
// physicality projection used as the MLE comparator and starting point.
inline DensityMatrix project_to_physical(const Matrix& hermitian) {
  Matrix sym = 0.5 * (hermitian + hermitian.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0);
  const double total = vals.sum();
  if (total < 1e-12) {
    return DensityMatrix::maximally_mixed(static_cast<int>(sym.rows()));
  }
  vals /= total;
  Matrix rho = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
  return DensityMatrix(rho);
}

// Real parameter vector of length d^2 for lower-triangular T with real
// diagonal: [diag(0..d-1), then row-major strict lower (re, im) pairs].
struct CholeskyParams {
  Eigen::VectorXd values;

  explicit CholeskyParams(int dim) : values(Eigen::VectorXd::Zero(dim * dim)), dim_(dim) {}

  int dim() const { return dim_; }

  Matrix to_triangular() const {
    Matrix t = Matrix::Zero(dim_, dim_);
    for (int i = 0; i < dim_; ++i) t(i, i) = Complex(values(i), 0.0);
    int idx = dim_;
    for (int i = 1; i < dim_; ++i) {
      for (int j = 0; j < i; ++j) {
        t(i, j) = Complex(values(idx), values(idx + 1));
        idx += 2;
      }
    }
    return t;
  }

  static CholeskyParams from_triangular(const Matrix& t) {
    CholeskyParams p(static_cast<int>(t.rows()));
    for (int i = 0; i < p.dim_; ++i) p.values(i) = t(i, i).real();
    int idx = p.dim_;
    for (int i = 1; i < p.dim_; ++i) {
      for (int j = 0; j < i; ++j) {
        p.values(idx) = t(i, j).real();
        p.values(idx + 1) = t(i, j).imag();
        idx += 2;
      }
    }
    return p;
  }

  // rho = T^dag T / Tr(T^dag T): physical for any parameter values.
  DensityMatrix to_density() const {
    const Matrix t = to_triangular();
    Matrix g = t.adjoint() * t;
    const double tau = g.trace().real();
    if (tau < 1e-300) {
      return DensityMatrix::maximally_mixed(dim_);
    }
    return DensityMatrix(g / tau);
  }

  // Lower-triangular T with T^dag T = rho, via the Cholesky factor of the
  // index-reversed matrix.
  static CholeskyParams from_density(const Matrix& rho) {
    const int d = static_cast<int>(rho.rows());
    Matrix flipped(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) flipped(i, j) = rho(d - 1 - i, d - 1 - j);
    }
    Eigen::LLT<Matrix> llt(flipped);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("Cholesky parameterization requires a positive matrix");
    }
    Matrix l = llt.matrixL();
    Matrix t(d, d);
    const Matrix ladj = l.adjoint();
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) t(i, j) = ladj(d - 1 - i, d - 1 - j);
    }
    // Make the diagonal real (column phases are free in T^dag T).
    for (int j = 0; j < d; ++j) {
      const Complex diag = t(j, j);
      if (std::abs(diag) > 0.0) {
        const Complex phase = std::conj(diag) / std::abs(diag);
        for (int i = 0; i < d; ++i) t(i, j) *= phase;
      }
    }
    return from_triangular(t);
  }

 private:
  int dim_ = 2;
};

struct MleOptions {
  int max_iterations = 10000;
  double gradient_tolerance = 1e-10;  // per-photon log-likelihood gradient
};

struct MleResult {
  DensityMatrix estimate;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;  // normalized per photon
};

namespace detail {

// Binomial log-likelihood per photon and its gradient with respect to the
// Cholesky parameters, for frequencies f_i observed with weights N_i.
class MleProblem {
 public:
  MleProblem(std::span<const double> frequencies, std::span<const double> weights,
             const TomographySet& set) {
    total_weight_ = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (weights[i] > 0.0) {
        freq_.push_back(frequencies[i]);
        weight_.push_back(weights[i]);
        projector_.push_back(set.projectors[i].amplitudes());
        total_weight_ += weights[i];
      }
    }
    if (total_weight_ <= 0.0) {
      throw std::invalid_argument("maximum likelihood needs at least one observed photon");
    }
  }

  double value(const CholeskyParams& params) const {
    const Matrix t = params.to_triangular();
    const double tau = std::max((t.adjoint() * t).trace().real(), 1e-300);
    double ll = 0.0;
    for (std::size_t i = 0; i < freq_.size(); ++i) {
      const double p = probability(t, tau, i);
      ll += weight_[i] * (freq_[i] * std::log(p) + (1.0 - freq_[i]) * std::log(1.0 - p));
    }
    return ll / total_weight_;
  }

  // Log-likelihood of an explicit (possibly singular) density matrix.
  double value_density(const Matrix& rho) const {
    double ll = 0.0;
    for (std::size_t i = 0; i < freq_.size(); ++i) {
      const double raw = (projector_[i].dot(rho * projector_[i])).real();
      const double p = std::clamp(raw, 1e-12, 1.0 - 1e-12);
      ll += weight_[i] * (freq_[i] * std::log(p) + (1.0 - freq_[i]) * std::log(1.0 - p));
    }
    return ll / total_weight_;
  }

  Eigen::VectorXd gradient(const CholeskyParams& params) const {
    const int d = params.dim();
    const Matrix t = params.to_triangular();
    const Matrix gram = t.adjoint() * t;
    const double tau = std::max(gram.trace().real(), 1e-300);
    const Matrix rho = gram / tau;

    Matrix g = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < freq_.size(); ++i) {
      const double p = probability(t, tau, i);
      const double coef =
          weight_[i] * (freq_[i] / p - (1.0 - freq_[i]) / (1.0 - p)) / total_weight_;
      g += coef * (projector_[i] * projector_[i].adjoint());
    }
    const double mean = (g * rho).trace().real();
    const Matrix wirtinger = (t * (g - mean * Matrix::Identity(d, d))) / tau;

    Eigen::VectorXd grad(d * d);
    for (int i = 0; i < d; ++i) grad(i) = 2.0 * wirtinger(i, i).real();
    int idx = d;
    for (int i = 1; i < d; ++i) {
      for (int j = 0; j < i; ++j) {
        grad(idx) = 2.0 * wirtinger(i, j).real();
        grad(idx + 1) = 2.0 * wirtinger(i, j).imag();
        idx += 2;
      }
    }
    return grad;
  }

 private:
  double probability(const Matrix& t, double tau, std::size_t i) const {
    const double raw = (t * projector_[i]).squaredNorm() / tau;
    return std::clamp(raw, 1e-12, 1.0 - 1e-12);
  }

  std::vector<double> freq_;
  std::vector<double> weight_;
  std::vector<Vector> projector_;
  double total_weight_ = 0.0;
};

}  // namespace detail

// Gradient ascent with backtracking on the per-photon binomial
// log-likelihood over CholeskyParams. Converges when the gradient max-norm
// drops below tolerance; otherwise returns the best iterate with the
// converged flag cleared.
inline MleResult mle_estimate_weighted(std::span<const double> frequencies,
                                       std::span<const double> weights,
                                       const TomographySet& set,
                                       const MleOptions& options = MleOptions{}) {
  const int d = set.dim();
  detail::MleProblem problem(frequencies, weights, set);

  // Start from the physicality-projected linear inversion blended toward the
  // maximally mixed state; fall back to the mixed state when inversion is
  // unavailable (e.g. too many empty rows).
  std::optional<DensityMatrix> projected;
  Matrix rho0 = Matrix::Identity(d, d) / static_cast<double>(d);
  try {
    projected = project_to_physical(linear_inversion_frequencies(frequencies, weights, set));
    rho0 = 0.9 * projected->elements() + 0.1 * rho0;
  } catch (const std::invalid_argument&) {
  }

  // BFGS ascent with Armijo backtracking. The quasi-Newton metric matters
  // here: pure-state optima live at rank-deficient T where plain gradient
  // steps crawl.
  auto ascend = [&](const Matrix& start) {
    CholeskyParams params = CholeskyParams::from_density(start);
    const int n = static_cast<int>(params.values.size());
    Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
    double value = problem.value(params);
    Eigen::VectorXd grad = problem.gradient(params);
    int iterations = 0;
    bool converged = false;
    while (iterations < options.max_iterations) {
      ++iterations;
      if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
        converged = true;
        break;
      }
      Eigen::VectorXd direction = inv_hessian * grad;
      double slope = direction.dot(grad);
      if (slope <= 0.0) {  // metric went bad; reset to steepest ascent
        inv_hessian.setIdentity();
        direction = grad;
        slope = grad.squaredNorm();
      }
      double step = 1.0;
      bool accepted = false;
      CholeskyParams trial = params;
      double trial_value = value;
      for (int half = 0; half < 60; ++half) {
        trial.values = params.values + step * direction;
        trial_value = problem.value(trial);
        if (trial_value >= value + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        converged = grad.lpNorm<Eigen::Infinity>() < 1e-6;
        break;
      }
      const Eigen::VectorXd new_grad = problem.gradient(trial);
      const Eigen::VectorXd s = trial.values - params.values;
      const Eigen::VectorXd y = grad - new_grad;  // ascent: curvature of -LL
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        const Eigen::VectorXd hy = inv_hessian * y;
        const double yhy = y.dot(hy);
        inv_hessian += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
                       (hy * s.transpose() + s * hy.transpose()) / sy;
      }
      params = trial;
      value = trial_value;
      grad = new_grad;
    }
    return std::tuple{params, value, converged, iterations};
  };

  auto [params, value, converged, iterations] = ascend(rho0);

  // Likelihood dominance over the projected linear inversion is part of the
  // contract; restart closer to it if the first ascent fell short.
  if (projected) {
    const double projected_ll = problem.value_density(projected->elements());
    if (value < projected_ll) {
      Matrix restart = 0.99 * projected->elements() + 0.01 * Matrix::Identity(d, d) / d;
      auto [p2, v2, c2, i2] = ascend(restart);
      if (v2 > value) {
        params = p2;
        value = v2;
        converged = c2;
        iterations += i2;
      }
    }
  }

  return MleResult{params.to_density(), converged, iterations, value};
}

inline MleResult mle_estimate(const CountVector& counts, const TomographySet& set,
                              const MleOptions& options = MleOptions{}) {
  if (counts.counts.size() != set.size()) {
    throw std::invalid_argument("one count pair per projector required");
  }
  std::vector<double> freq(set.size()), weight(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    freq[i] = counts.counts[i].frequency();
    weight[i] = static_cast<double>(counts.counts[i].total);
  }
  return mle_estimate_weighted(freq, weight, set, options);
}

struct SqtResult {
  DensityMatrix estimate;
  std::uint64_t photons_used = 0;
  double fidelity_to_benchmark = 0.0;
  bool mle_converged = false;
};

// Acquire -> MLE -> fidelity, with photon accounting from the backend.
inline SqtResult run_sqt(MeasurementBackend& backend, const TomographySet& set,
                         const DensityMatrix& benchmark) {
  const std::uint64_t before = backend.photons_consumed();
  const CountVector counts = acquire_counts(backend, set);
  const MleResult mle = mle_estimate(counts, set);
  return SqtResult{mle.estimate, backend.photons_consumed() - before,
                   fidelity(mle.estimate, benchmark), mle.converged};
}

}  // namespace sgtomo
