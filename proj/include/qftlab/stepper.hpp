#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qftlab/generators.hpp"
#include "qftlab/linalg.hpp"

namespace qftlab {

/// Uniform time grid with nodes t_start + i*dt, i = 0..n_steps.
struct TimeGrid {
  Real t_start = 0.0;
  Real t_end = 1.0;
  int n_steps = 1;

  Real dt() const { return (t_end - t_start) / n_steps; }
  Real node(int i) const { return t_start + i * dt(); }
  Real midpoint(int i) const { return t_start + (i + 0.5) * dt(); }
};

enum class ProductRule { left, midpoint };

/// Family U(t_i, t_0) on (a stride-subsampled set of) grid nodes, with the
/// two-parameter accessor U(t_i, t_j) = U(t_i,t_0) U(t_j,t_0)^{-1}.
class PropagatorTable {
 public:
  PropagatorTable() = default;
  PropagatorTable(TimeGrid grid, std::string scheme, int stride, bool unitary,
                  std::vector<Matrix> from_start);

  const TimeGrid& grid() const { return grid_; }
  const std::string& scheme() const { return scheme_; }
  int stride() const { return stride_; }
  bool unitary() const { return unitary_; }

  /// Number of stored nodes (grid node indices 0, stride, 2*stride, ..., n_steps).
  int stored_count() const { return static_cast<int>(from_start_.size()); }
  int node_index(int s) const;  // grid index of stored slot s
  Real node_time(int s) const { return grid_.node(node_index(s)); }

  const Matrix& from_start(int s) const { return from_start_[static_cast<std::size_t>(s)]; }
  const Matrix& final() const { return from_start_.back(); }

  /// U(t_i, t_j) for stored slots; the identity when i == j.
  Matrix u(int s_i, int s_j) const;

  /// max_s ||U_s^H U_s - 1||_F / sqrt(dim).
  Real max_unitarity_deviation() const;
  /// max over stored triples of the composition residual, scaled Frobenius.
  Real composition_residual(int max_triples = 64) const;

  PropagatorTable scaled(std::function<Complex(Real t, Real s)> factor) const;

 private:
  TimeGrid grid_;
  std::string scheme_;
  int stride_ = 1;
  bool unitary_ = false;
  std::vector<Matrix> from_start_;
};

struct PicardOptions {
  Real tol = 1e-12;
  int max_iter = 64;
};

struct PicardDiagnostics {
  int iterations = 0;
  Real final_delta = 0.0;
  Real contraction_certificate = 0.0;  // (||A||_max (t_end-t_start))^n / n!
};

/// Fixed-point iteration u -> x + int_s^t A(tau) u(tau) dtau on the grid
/// (composite trapezoid), run columnwise on the whole matrix family.
PropagatorTable picard_propagator(const TimeDependentGenerator& gen, const TimeGrid& grid,
                                  const PicardOptions& opts = {},
                                  PicardDiagnostics* diag = nullptr);

struct ExpProductOptions {
  ProductRule rule = ProductRule::midpoint;
  int stride = 1;
  /// Optional bounded-approximation level applied to the eigenvalues before
  /// exponentiation (spectral clip or Yosida map); negative level = exact.
  ApproximationScheme::Kind approx_kind = ApproximationScheme::Kind::spectral_cutoff;
  Real approx_level = -1.0;
};

/// U = prod exp(dt A_n(t_j*)) with spectral exponentials; exactly unitary for
/// the exact and spectral-cutoff maps. Steps where H vanishes identically are
/// skipped, so the propagator is exactly constant outside the generator support.
PropagatorTable exp_product_propagator(const TimeDependentGenerator& gen, const TimeGrid& grid,
                                       const ExpProductOptions& opts = {});

/// W = C_n ... C_1 with C_j = (1 - dt A(t_j))^{-1} (right-endpoint sampling);
/// every factor is contractive for skew-adjoint A.
PropagatorTable implicit_resolvent_propagator(const TimeDependentGenerator& gen,
                                              const TimeGrid& grid, int stride = 1);

struct ApproxLevelRecord {
  Real level = 0.0;
  Real diff_to_next = -1.0;     // max over stored nodes of scaled-Frobenius difference
  Real max_spectral_radius = 0.0;
};

struct ApproxDiagnostics {
  std::vector<ApproxLevelRecord> levels;
  /// node_diffs[l][s]: difference of levels l and l+1 at stored node s.
  std::vector<std::vector<Real>> node_diffs;
  std::vector<Real> node_times;
  Real saturation_level = -1.0;  // first level whose diff-to-next meets the threshold
  Real residual = -1.0;          // discrete-L2 norm of -u' + A_n u at the top level
  Real saturation_threshold = 0.0;
};

struct ApproximativeOptions {
  ProductRule rule = ProductRule::midpoint;
  int stride = 1;
  Real spectral_saturation_tol = 1e-12;
  Real yosida_saturation_tol = 2.5e-9;
  bool compute_residual = false;  // needs stride == 1
  bool require_saturation = true;
};

/// Runs the product stepper across the scheme levels, recording per-level
/// differences and the level past which the table stabilizes. The returned
/// table is the highest level. Throws NoSaturation when the levels are
/// exhausted before stabilization (and require_saturation is set).
PropagatorTable approximative_solution(const TimeDependentGenerator& gen, const TimeGrid& grid,
                                       const ApproximationScheme& scheme,
                                       const ApproximativeOptions& opts = {},
                                       ApproxDiagnostics* diag = nullptr);

/// Piecewise-exponential exact solution for a three-window family
/// H(t) = phi(t) S + eta(t) L + psi(t) T with disjointly supported, ordered
/// scalar weights:  u(t) = e^{i Psi(t) T} e^{i Eta(t) L} e^{i Phi(t) S} y
/// where capital letters are the running integrals of the weights.
class GoldsteinProblem {
 public:
  struct Weight {
    Real center;
    Real radius;
    Real amplitude;
    Real value(Real t) const;
    Real t_min() const { return center - radius; }
    Real t_max() const { return center + radius; }
  };

  GoldsteinProblem(Matrix s, Matrix l, Matrix t, Weight phi, Weight eta, Weight psi);

  /// Exact state at time t >= 0 for initial vector y at time 0.
  Vector state(Real t, const Vector& y, int quad_steps = 4096) const;
  Matrix evolution(Real t, int quad_steps = 4096) const;

  /// Hermitian family whose Schroedinger problem u' = -i H(t) u has the above
  /// solution, i.e. H(t) = -(phi S + eta L + psi T).
  TimeDependentGenerator hamiltonian_family() const;

 private:
  Matrix s_, l_, t_;
  Weight phi_, eta_, psi_;
  Real running_integral(const Weight& w, Real t, int quad_steps) const;
};

/// Both sides of the semigroup difference identity
///   e^{-r Ha} = e^{-r Hb} - int_0^r e^{-s Hb} (Ha - Hb) e^{-(r-s) Ha} ds
/// with the integral by composite trapezoid; returns {lhs, rhs}.
std::pair<Matrix, Matrix> duhamel_difference(const Matrix& h_a, const Matrix& h_b, Real r,
                                             int quad_steps);

/// Least-squares slope of log(err) against log(h).
Real fit_loglog_slope(const std::vector<Real>& h, const std::vector<Real>& err);

}  // namespace qftlab
