#include "qftlab/howland.hpp"

#include <algorithm>
#include <cmath>

#include "qftlab/errors.hpp"

namespace qftlab {

Eigen::Map<const Vector> FunctionSpaceGrid::block(const Vector& f, int i) const {
  return Eigen::Map<const Vector>(f.data() + static_cast<Index>(i) * dim, dim);
}

EvolutionSemigroupOp::EvolutionSemigroupOp(std::shared_ptr<const PropagatorTable> table,
                                           FunctionSpaceGrid grid, int shift_steps)
    : table_(std::move(table)), grid_(grid), shift_steps_(shift_steps) {}

Vector EvolutionSemigroupOp::apply(const Vector& f) const {
  const int k = shift_steps_;
  Vector out = Vector::Zero(grid_.flat_size());
  for (int i = k; i < grid_.n_t; ++i) {
    // Function node i sits at propagator grid node i+1.
    const Matrix u = table_->u(i + 1, i + 1 - k);
    out.segment(static_cast<Index>(i) * grid_.dim, grid_.dim) = u * grid_.block(f, i - k);
  }
  return out;
}

Vector EvolutionSemigroupOp::apply_adjoint(const Vector& f) const {
  const int k = shift_steps_;
  Vector out = Vector::Zero(grid_.flat_size());
  for (int i = k; i < grid_.n_t; ++i) {
    const Matrix u = table_->u(i + 1, i + 1 - k);
    out.segment(static_cast<Index>(i - k) * grid_.dim, grid_.dim) +=
        u.adjoint() * grid_.block(f, i);
  }
  return out;
}

EvolutionSemigroupOp lift(std::shared_ptr<const PropagatorTable> table,
                          const FunctionSpaceGrid& grid, Real sigma) {
  if (table->stride() != 1) throw GridMismatch("lift needs a stride-1 propagator table");
  if (table->grid().n_steps != grid.n_t || table->grid().t_start != grid.a)
    throw GridMismatch("function grid must match the propagator grid");
  if (sigma < 0.0) throw ShiftNotGridAligned("shift must be nonnegative");
  const Real steps = sigma / grid.dt();
  const Real rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9)
    throw ShiftNotGridAligned("shift " + std::to_string(sigma) +
                              " is not a multiple of the grid step");
  return EvolutionSemigroupOp(std::move(table), grid, static_cast<int>(rounded));
}

SemigroupNormReport semigroup_norm_check(const EvolutionSemigroupOp& op, Rng& rng, Real rel_tol) {
  const auto& grid = op.grid();
  SemigroupNormReport report;
  const Vector seed = rng.unit_vector(grid.flat_size());
  report.op_norm = power_iteration_norm(
      grid.flat_size(), [&](const Vector& v) { return op.apply(v); },
      [&](const Vector& v) { return op.apply_adjoint(v); }, seed, 400, 1e-13);
  Real sup = 0.0;
  for (int i = op.shift_steps(); i < grid.n_t; ++i)
    sup = std::max(sup, operator_norm(op.table().u(i + 1, i + 1 - op.shift_steps())));
  report.sup_pair_norm = sup;
  report.rel_gap = std::abs(report.op_norm - sup) / std::max(1e-300, sup);
  report.pass = sup == 0.0 ? report.op_norm == 0.0 : report.rel_gap <= rel_tol;
  return report;
}

namespace {

Vector scale_blocks(const FunctionSpaceGrid& grid, const RealVector& phi, const Vector& f) {
  Vector out(grid.flat_size());
  for (int i = 0; i < grid.n_t; ++i)
    out.segment(static_cast<Index>(i) * grid.dim, grid.dim) = phi(i) * grid.block(f, i);
  return out;
}

}  // namespace

MultCommutationReport multiplication_commutation_check(const EvolutionSemigroupOp& op,
                                                       const RealVector& phi_samples, Rng& rng,
                                                       int probes, Real tol) {
  const auto& grid = op.grid();
  if (phi_samples.size() != grid.n_t) throw GridMismatch("phi sample count mismatch");
  const int k = op.shift_steps();
  RealVector phi_shifted = RealVector::Zero(grid.n_t);
  for (int i = k; i < grid.n_t; ++i) phi_shifted(i) = phi_samples(i - k);
  MultCommutationReport report;
  for (int p = 0; p < probes; ++p) {
    const Vector f = rng.unit_vector(grid.flat_size());
    const Vector lhs = op.apply(scale_blocks(grid, phi_samples, f));
    const Vector rhs = scale_blocks(grid, phi_shifted, op.apply(f));
    report.max_deviation = std::max(report.max_deviation, (lhs - rhs).norm());
  }
  report.pass = report.max_deviation <= tol;
  return report;
}

Vector semigroup_resolvent_apply(const PropagatorTable& table, const FunctionSpaceGrid& grid,
                                 Complex lambda, const Vector& f) {
  Vector out = Vector::Zero(grid.flat_size());
  const Real dt = grid.dt();
  for (int i = 0; i < grid.n_t; ++i) {
    Vector acc = Vector::Zero(grid.dim);
    const Real ti = grid.node(i);
    for (int j = 0; j <= i; ++j) {
      const Real tj = grid.node(j);
      const Complex w = std::exp(-lambda * (ti - tj));
      acc += w * (table.u(i + 1, j + 1) * grid.block(f, j));
    }
    out.segment(static_cast<Index>(i) * grid.dim, grid.dim) = dt * acc;
  }
  return out;
}

Vector discrete_generator_apply(const TimeDependentGenerator& gen, const FunctionSpaceGrid& grid,
                                const Vector& f) {
  Vector out(grid.flat_size());
  const Real dt = grid.dt();
  for (int i = 0; i < grid.n_t; ++i) {
    const Vector fi = grid.block(f, i);
    Vector prev = i == 0 ? Vector(Vector::Zero(grid.dim)) : Vector(grid.block(f, i - 1));
    const Matrix a = gen.a(grid.node(i));
    out.segment(static_cast<Index>(i) * grid.dim, grid.dim) = -(fi - prev) / dt + a * fi;
  }
  return out;
}

ResolventConsistencyReport generator_consistency_check(const PropagatorTable& table,
                                                       const TimeDependentGenerator& gen,
                                                       const FunctionSpaceGrid& grid,
                                                       Complex lambda, Rng& rng, int probes) {
  ResolventConsistencyReport report;
  for (int p = 0; p < probes; ++p) {
    const Vector f = rng.unit_vector(grid.flat_size());
    const Vector rf = semigroup_resolvent_apply(table, grid, lambda, f);
    const Vector residual = lambda * rf - discrete_generator_apply(gen, grid, rf) - f;
    report.max_rel_residual =
        std::max(report.max_rel_residual, grid.norm(residual) / grid.norm(f));
  }
  return report;
}

Real orbit_generator_residual(const PropagatorTable& table, const TimeDependentGenerator& gen,
                              const FunctionSpaceGrid& grid, const Vector& x) {
  // Orbit u(t_i) = U(t_i, a) x; backward-difference generator applied away
  // from the left boundary (the cutoff window of the identity G(phi u) = 0).
  const Real dt = grid.dt();
  Real acc = 0.0;
  for (int i = 1; i < grid.n_t; ++i) {
    const Vector ui = table.from_start(i + 1) * x;
    const Vector um = table.from_start(i) * x;
    const Vector r = -(ui - um) / dt + gen.a(grid.node(i)) * ui;
    acc += dt * r.squaredNorm();
  }
  return std::sqrt(acc);
}

Real weak_solution_pairing_residual(const PropagatorTable& table,
                                    const TimeDependentGenerator& gen,
                                    const FunctionSpaceGrid& grid, const Vector& x, Rng& rng,
                                    int test_functions) {
  // Test functions f(t) = sin(q pi (b - t)/(b - a)) c with random constant c;
  // they vanish at t = b and have an analytic derivative.
  const Real a = grid.a, b = grid.b;
  Real worst = 0.0;
  for (int q = 1; q <= test_functions; ++q) {
    const Vector c = rng.unit_vector(grid.dim);
    const auto w = [&](Real t) { return std::sin(q * M_PI * (b - t) / (b - a)); };
    const auto wdot = [&](Real t) { return -q * M_PI / (b - a) * std::cos(q * M_PI * (b - t) / (b - a)); };
    Complex acc{0.0, 0.0};
    for (int i = 0; i < grid.n_t; ++i) {
      const Real t = grid.node(i);
      const Vector u = table.from_start(i + 1) * x;
      const Vector f = w(t) * c;
      const Vector fdot = wdot(t) * c;
      // A(t)^* f = (-(i) H)^* f = i H f.
      const Vector astar_f = Complex(0.0, 1.0) * (gen.hamiltonian(t) * f);
      acc += grid.dt() * (fdot.dot(u) + astar_f.dot(u));
    }
    acc += (w(a) * c).dot(x);
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

}  // namespace qftlab
