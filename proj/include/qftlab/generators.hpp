#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "qftlab/linalg.hpp"

namespace qftlab {

/// Time-dependent generator A(t) = -i H(t) with hermitian H(t), plus a
/// read-through cache of spectral decompositions keyed by the query time.
/// Concurrent reads are safe; concurrent fills are idempotent.
class TimeDependentGenerator {
 public:
  TimeDependentGenerator() = default;
  TimeDependentGenerator(std::function<Matrix(Real)> h, std::string label,
                         std::optional<std::pair<Real, Real>> time_support = std::nullopt);

  /// H(t), symmetrized; throws if the provider output misses the hermiticity tolerance.
  Matrix hamiltonian(Real t) const;
  /// A(t) = -i H(t).
  Matrix a(Real t) const { return Complex(0.0, -1.0) * hamiltonian(t); }

  /// Cached spectral decomposition of H(t).
  std::shared_ptr<const HermitianEig> eig(Real t) const;

  const std::string& label() const { return label_; }
  const std::optional<std::pair<Real, Real>>& time_support() const { return support_; }
  /// True when H(t) is known to vanish (t outside the declared support and the
  /// provider returned an exactly zero matrix at least once there).
  bool vanishes_at(Real t) const;

  std::size_t cache_size() const;
  void clear_cache() const;

 private:
  struct Cache {
    std::map<Real, std::shared_ptr<const HermitianEig>> entries;
    std::shared_mutex mutex;
  };

  std::function<Matrix(Real)> h_;
  std::string label_;
  std::optional<std::pair<Real, Real>> support_;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();  // shared across copies
};

/// Bounded-approximation scheme for a generator family.
struct ApproximationScheme {
  enum class Kind { yosida, spectral_cutoff };
  Kind kind = Kind::spectral_cutoff;
  std::vector<Real> levels;  // increasing sequence of levels n_1 < ... < n_L
};

/// Per-eigenvalue action of one approximation level on A = -iH:
///   spectral_cutoff: lambda -> -i clamp(lambda, [-n, n])
///   yosida:          lambda -> -i n lambda / (n + i lambda)
Complex approx_eigenvalue_map(ApproximationScheme::Kind kind, Real level, Real lambda);

/// R(lambda, A) = (lambda - A)^{-1} by dense LU with an explicit residual
/// check; throws NearSingularResolvent when the residual exceeds 1e-10.
Matrix resolvent(const Matrix& a, Complex lambda);

/// Yosida approximation A_n = n A R(n, A).
Matrix yosida_approx(const Matrix& a, Real n);

/// Eigenvalues of hermitian H clipped to [-n, n]; equals H once n >= spectral radius.
Matrix spectral_cutoff_approx(const Matrix& h, Real n);

struct StabilityReport {
  Real m_const = 1.0;
  Real omega = 0.0;
  Real lambda = 0.0;
  std::vector<Real> product_norms;  // ||prod_{j<=k} R(lambda, A(t_j))|| per prefix
  std::vector<Real> bounds;         // M (lambda-omega)^{-k}
  bool pass = false;
  int first_failure = -1;
};

/// Kato stability: ||prod R(lambda, A(t_j))|| <= M (lambda-omega)^{-k} for
/// every prefix of the (ordered) time family, with 1e-9 absolute slack.
StabilityReport kato_stability_check(const TimeDependentGenerator& gen,
                                     const std::vector<Real>& times, Real lambda, Real m_const,
                                     Real omega);

struct SohrReport {
  Real min_value = 0.0;  // min over probes and times of  (1/2) q' + k q
  Real argmin_time = 0.0;
  int argmin_probe = -1;
  Real derivative_error = 0.0;  // Richardson estimate of the finite-difference error
  Real min_form_eigenvalue = 0.0;  // min eig of beta + H(t) over samples
  bool pass = false;
};

/// One-sided accretivity probe: for q(t) = <x, (beta+H(t))^{-1} x> evaluates
/// (1/2) dq/dt + k q by Richardson-extrapolated central differences over all
/// basis vectors plus 16 seeded pseudo-random probes. Requires beta + H(t) >= 1
/// on the interval (verified spectrally; LowerBoundViolated otherwise).
SohrReport sohr_condition_check(const TimeDependentGenerator& gen, Real beta, Real k, Real t_lo,
                                Real t_hi, int time_samples, Real dt_factor = 1e-4,
                                Real pass_tolerance = 1e-8);

/// Interaction-picture conjugation V^D(t) = e^{i t H0} V(t) e^{-i t H0} of a
/// generator family by a time-independent hermitian H0.
TimeDependentGenerator dirac_picture(const TimeDependentGenerator& gen, const Matrix& h0);

/// Generator with H(t) supplied by an interaction assembler plus an optional
/// constant part (e.g. H0).
TimeDependentGenerator make_matrix_generator(std::function<Matrix(Real)> h, std::string label,
                                             std::optional<std::pair<Real, Real>> support =
                                                 std::nullopt);

}  // namespace qftlab
