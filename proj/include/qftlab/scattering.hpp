#pragma once

#include <optional>
#include <vector>

#include "qftlab/fock.hpp"
#include "qftlab/stepper.hpp"

namespace qftlab {

/// Stepper configuration for scattering-operator runs.
struct ScatteringConfig {
  Real dt = 1e-3;
  Real bracket_margin = 0.2;  // distance from supp_t g to (sigma, tau)
  ProductRule rule = ProductRule::midpoint;
  /// Spectral-cutoff levels for the approximative solution; when empty they are
  /// chosen automatically just above the spectral radius of the generator.
  std::vector<Real> levels;
  Real tol_cf = 1e-8;
  int stride = 0;  // 0 = automatic
};

/// Unitary S(g) together with its bracketing interval and diagnostics.
struct ScatteringOperator {
  Matrix s;
  Real sigma = 0.0;
  Real tau = 0.0;
  Real unitarity_deviation = 0.0;
  ApproxDiagnostics diagnostics;
  std::string scheme;
};

/// Interaction-picture generator V^D(t) = e^{i t H0} V(t;g) e^{-i t H0} for the
/// localized interaction dx sum_x g(t,x) :P(phi(x)):.
TimeDependentGenerator dirac_interaction_generator(const TruncationParams& params,
                                                   const OccupationBasis& basis,
                                                   const LocalizationFunction& g,
                                                   const Polynomial& poly);

/// S(g) = U^D(tau, sigma) from the approximative solution of the
/// interaction-picture problem over a bracket that strictly contains the time
/// support of g. Throws BracketTooTight when it does not.
ScatteringOperator local_s_operator(const TruncationParams& params, const OccupationBasis& basis,
                                    const LocalizationFunction& g, const Polynomial& poly,
                                    const ScatteringConfig& cfg,
                                    std::optional<std::pair<Real, Real>> bracket = std::nullopt);

/// Relative scattering operator S_g(f) = S(g)^{-1} S(g+f), computed on a joint
/// bracket so both factors share grid and scheme.
Matrix relative_s_operator(const TruncationParams& params, const OccupationBasis& basis,
                           const LocalizationFunction& g, const LocalizationFunction& f,
                           const Polynomial& poly, const ScatteringConfig& cfg);

struct CausalFactorizationReport {
  Real deviation = 0.0;
  Real tolerance = 0.0;
  bool pass = false;
};

/// Causal factorization || S(f+h+g) - S(f+h) S(h)^{-1} S(h+g) ||: requires the
/// time support of f strictly later than that of g (h arbitrary). All four
/// operators are evaluated on one common bracket and grid.
CausalFactorizationReport causal_factorization_check(const TruncationParams& params,
                                                     const OccupationBasis& basis,
                                                     const LocalizationFunction& f,
                                                     const LocalizationFunction& h,
                                                     const LocalizationFunction& g,
                                                     const Polynomial& poly,
                                                     const ScatteringConfig& cfg);

struct CovarianceReport {
  Real deviation = 0.0;
  Real tolerance = 0.0;
  bool pass = false;
};

/// Translation covariance: S(g shifted by (a_t, a_x)) against
/// e^{i a_t H0} X(a_x) S(g) X(a_x)^H e^{-i a_t H0} with X the lattice
/// translation unitary. Shifts must be grid-aligned.
CovarianceReport covariance_check(const TruncationParams& params, const OccupationBasis& basis,
                                  const LocalizationFunction& g, const Polynomial& poly, Real a_t,
                                  Real a_x, const ScatteringConfig& cfg, Real tolerance);

/// Time-ordered Dyson partial sum S_k = 1 + sum_{n<=k} (-i)^n
/// int_{t1>=...>=tn} V^D(t1)...V^D(tn), k <= 2, by cumulative quadrature on the
/// stepper grid.
Matrix dyson_series(const TruncationParams& params, const OccupationBasis& basis,
                    const LocalizationFunction& g, const Polynomial& poly, int order,
                    const ScatteringConfig& cfg);

struct DysonRemainderReport {
  std::vector<Real> amplitudes;
  std::vector<Real> remainders;  // ||S(lambda g) - S_2(lambda g)||
  Real slope = 0.0;              // fitted log-log exponent
};

DysonRemainderReport dyson_remainder_study(const TruncationParams& params,
                                           const OccupationBasis& basis,
                                           const LocalizationFunction& g, const Polynomial& poly,
                                           const std::vector<Real>& amplitudes, int order,
                                           const ScatteringConfig& cfg);

/// Pair-sector prediction for the quadratic interaction
/// V(t) = (lambda/2) v(t) dx sum_x :phi(x)^2:  with space-constant coupling
/// v(t). Modes (j, -j) decouple; the Heisenberg flow of each sector is the
/// 2x2 system  i a' = Omega_j a + kappa_j conj(b),  i b' = Omega_j b +
/// kappa_j conj(a) with Omega_j = mu_j + kappa_j, kappa_j = lambda v / (2 mu_j),
/// integrated by RK4 together with the vacuum-amplitude phase.
struct QuadraticModePrediction {
  int j = 0;
  Real mu = 0.0;
  Complex alpha{1.0, 0.0};
  Complex beta{0.0, 0.0};
  Complex vacuum_amplitude{1.0, 0.0};  // per-sector <0|U|0>
  bool degenerate = false;             // instantaneous frequency crossed zero
};

struct QuadraticOracle {
  std::vector<QuadraticModePrediction> sectors;  // j = 0..K
  Real sigma = 0.0, tau = 0.0;
  Complex wick_phase{1.0, 0.0};  // e^{i (lambda/2) L c_trunc int v}

  /// Predictions for S = e^{i tau H0} U(tau, sigma) e^{-i sigma H0} elements.
  Complex vacuum_element() const;                  // <Omega|S|Omega>
  Complex one_particle_element(int j) const;       // <1_j|S|1_j>
  Complex pair_creation_element(int j) const;      // <(j,-j) pair|S|Omega>
};

/// Integrates the mode system for coupling profile v(t) (sampled analytically)
/// over [sigma, tau]. Throws InstabilityDetected when mu_j^2 + lambda v(t)
/// drops below -tol for some mode; modes grazing zero are flagged degenerate.
QuadraticOracle quadratic_oracle(const TruncationParams& params,
                                 const std::function<Real(Real)>& v, Real lambda, Real sigma,
                                 Real tau, int rk_steps = 20000, Real degeneracy_tol = 1e-9);

/// ||[S_g(f), S_g(h)]|| for a sweep of spatial separations of two bumps;
/// reported as data, never asserted.
struct LocalityRow {
  Real separation = 0.0;
  Real commutator_norm = 0.0;
};
std::vector<LocalityRow> locality_commutator_sweep(const TruncationParams& params,
                                                   const OccupationBasis& basis,
                                                   const LocalizationFunction& background,
                                                   const BumpSpec& probe_f, const BumpSpec& probe_h,
                                                   const Polynomial& poly,
                                                   const std::vector<Real>& separations,
                                                   const ScatteringConfig& cfg);

}  // namespace qftlab
