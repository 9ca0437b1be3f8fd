#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "qftlab/rng.hpp"
#include "qftlab/stepper.hpp"

namespace qftlab {

/// Discretization of the function space L2((a,b], X): samples at the grid
/// nodes a + dt, ..., b stacked into one vector of length n_t * dim, with the
/// inner product weighted by dt.
struct FunctionSpaceGrid {
  Real a = 0.0;
  Real b = 1.0;
  int n_t = 1;
  Index dim = 1;

  Real dt() const { return (b - a) / n_t; }
  Real node(int i) const { return a + (i + 1) * dt(); }
  Index flat_size() const { return static_cast<Index>(n_t) * dim; }

  Eigen::Map<const Vector> block(const Vector& f, int i) const;
  Real norm(const Vector& f) const { return std::sqrt(dt()) * f.norm(); }
};

/// Evolution-semigroup operator (T(sigma) f)(t) = U(t, t - sigma) f(t - sigma),
/// zero-filled where t - sigma falls outside the interval.
class EvolutionSemigroupOp {
 public:
  EvolutionSemigroupOp(std::shared_ptr<const PropagatorTable> table, FunctionSpaceGrid grid,
                       int shift_steps);

  Vector apply(const Vector& f) const;
  Vector apply_adjoint(const Vector& f) const;

  int shift_steps() const { return shift_steps_; }
  Real sigma() const { return shift_steps_ * grid_.dt(); }
  const FunctionSpaceGrid& grid() const { return grid_; }
  const PropagatorTable& table() const { return *table_; }

 private:
  std::shared_ptr<const PropagatorTable> table_;
  FunctionSpaceGrid grid_;
  int shift_steps_;
};

/// Lifts a stride-1 propagator table to the discretized function space.
/// sigma must be a nonnegative multiple of dt (ShiftNotGridAligned otherwise).
EvolutionSemigroupOp lift(std::shared_ptr<const PropagatorTable> table,
                          const FunctionSpaceGrid& grid, Real sigma);

struct SemigroupNormReport {
  Real op_norm = 0.0;        // ||T(sigma)|| measured by power iteration
  Real sup_pair_norm = 0.0;  // sup over node pairs of ||U(s, s-sigma)||
  Real rel_gap = 0.0;
  bool pass = false;
};

/// Norm identity ||T(sigma)|| = sup ||U(s, s-sigma)||, measured two ways.
SemigroupNormReport semigroup_norm_check(const EvolutionSemigroupOp& op, Rng& rng,
                                         Real rel_tol);

struct MultCommutationReport {
  Real max_deviation = 0.0;
  bool pass = false;
};

/// T(sigma)(phi f) = (tau_sigma phi) T(sigma) f for scalar phi sampled on the
/// grid; exact pointwise on the grid (tolerance 1e-12).
MultCommutationReport multiplication_commutation_check(const EvolutionSemigroupOp& op,
                                                       const RealVector& phi_samples, Rng& rng,
                                                       int probes = 8, Real tol = 1e-12);

/// (R f)(t_i) = dt * sum_{j <= i} e^{-lambda (t_i - t_j)} U(t_i, t_j) f(t_j).
Vector semigroup_resolvent_apply(const PropagatorTable& table, const FunctionSpaceGrid& grid,
                                 Complex lambda, const Vector& f);

/// Discrete generator G f = -D_t f + A(.) f with the backward difference and
/// zero boundary at the left endpoint.
Vector discrete_generator_apply(const TimeDependentGenerator& gen, const FunctionSpaceGrid& grid,
                                const Vector& f);

struct ResolventConsistencyReport {
  Real max_rel_residual = 0.0;  // ||(lambda - G_d) R f - f|| / ||f|| over probes
};

/// Residual of (lambda - G_d) R = 1 on random probes; O(dt) by construction.
ResolventConsistencyReport generator_consistency_check(const PropagatorTable& table,
                                                       const TimeDependentGenerator& gen,
                                                       const FunctionSpaceGrid& grid,
                                                       Complex lambda, Rng& rng, int probes = 6);

/// Residual of G applied along an orbit u(t) = U(t, a) x (smooth test cutoff
/// absorbed by starting the probe window at the second node): discrete-L2 of
/// -u' + A u, which is O(dt) for first-order differences.
Real orbit_generator_residual(const PropagatorTable& table, const TimeDependentGenerator& gen,
                              const FunctionSpaceGrid& grid, const Vector& x);

/// Weak-solution pairing: | sum_i dt [ (f'(t_i), u(t_i)) + (A(t_i)^* f(t_i), u(t_i)) ]
/// + (f(a), x) | for smooth test f with f(b) = 0, evaluated along u = U(., a) x.
Real weak_solution_pairing_residual(const PropagatorTable& table,
                                    const TimeDependentGenerator& gen,
                                    const FunctionSpaceGrid& grid, const Vector& x, Rng& rng,
                                    int test_functions = 4);

}  // namespace qftlab
