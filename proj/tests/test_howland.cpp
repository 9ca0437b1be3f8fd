#include <doctest.h>

#include "qftlab/fock.hpp"
#include "qftlab/howland.hpp"

using namespace qftlab;

namespace {

struct Toy {
  TimeDependentGenerator gen;
  std::shared_ptr<PropagatorTable> table;
  FunctionSpaceGrid grid;
};

Toy make_toy(int n_t, bool trivial = false) {
  Rng rng(31415);
  const Matrix h0 = rng.hermitian_with_norm(3, 1.2);
  const Matrix h1 = rng.hermitian_with_norm(3, 0.7);
  TimeDependentGenerator gen(
      [=](Real t) { return trivial ? Matrix(Matrix::Zero(3, 3)) : Matrix(h0 + std::sin(t) * h1); },
      "toy");
  const TimeGrid tg{0.0, 1.5, n_t};
  auto table = std::make_shared<PropagatorTable>(exp_product_propagator(gen, tg));
  return Toy{std::move(gen), std::move(table), FunctionSpaceGrid{0.0, 1.5, n_t, 3}};
}

}  // namespace

TEST_CASE("lift basics") {
  Toy toy = make_toy(20);
  Rng rng(1);

  SUBCASE("zero shift is the identity") {
    const auto op = lift(toy.table, toy.grid, 0.0);
    const Vector f = rng.unit_vector(toy.grid.flat_size());
    CHECK((op.apply(f) - f).norm() < 1e-14);
  }

  SUBCASE("trivial propagator lifts to the right translation") {
    Toy flat = make_toy(20, true);
    const auto op = lift(flat.table, flat.grid, 3 * flat.grid.dt());
    const Vector f = rng.unit_vector(flat.grid.flat_size());
    const Vector g = op.apply(f);
    for (int i = 0; i < flat.grid.n_t; ++i) {
      if (i < 3) {
        CHECK(flat.grid.block(g, i).norm() == 0.0);  // zero-fill boundary
      } else {
        CHECK((flat.grid.block(g, i) - flat.grid.block(f, i - 3)).norm() < 1e-14);
      }
    }
  }

  SUBCASE("off-grid shifts are rejected") {
    CHECK_THROWS_AS(lift(toy.table, toy.grid, 0.4 * toy.grid.dt()), ShiftNotGridAligned);
    CHECK_THROWS_AS(lift(toy.table, toy.grid, -toy.grid.dt()), ShiftNotGridAligned);
  }

  SUBCASE("exact semigroup law on the grid") {
    const auto t2 = lift(toy.table, toy.grid, 2 * toy.grid.dt());
    const auto t4 = lift(toy.table, toy.grid, 4 * toy.grid.dt());
    const auto t6 = lift(toy.table, toy.grid, 6 * toy.grid.dt());
    for (int probe = 0; probe < 4; ++probe) {
      const Vector f = rng.unit_vector(toy.grid.flat_size());
      CHECK((t2.apply(t4.apply(f)) - t6.apply(f)).norm() < 1e-13);
    }
  }
}

TEST_CASE("norm identity") {
  Toy toy = make_toy(24);
  Rng rng(2);

  SUBCASE("unitary tables give norm one on both sides") {
    const auto op = lift(toy.table, toy.grid, 2 * toy.grid.dt());
    const auto rep = semigroup_norm_check(op, rng, 1e-8);
    CHECK(std::abs(rep.op_norm - 1.0) < 1e-10);
    CHECK(std::abs(rep.sup_pair_norm - 1.0) < 1e-12);
    CHECK(rep.pass);
  }

  SUBCASE("exponential scaling moves both sides together") {
    const Real omega = 0.4;
    auto scaled = std::make_shared<PropagatorTable>(toy.table->scaled(
        [omega](Real t, Real s) { return std::exp(Complex(omega * (t - s), 0.0)); }));
    const int k = 3;
    const auto op = lift(scaled, toy.grid, k * toy.grid.dt());
    const auto rep = semigroup_norm_check(op, rng, 1e-6);
    const Real expected = std::exp(omega * k * toy.grid.dt());
    CHECK(std::abs(rep.sup_pair_norm - expected) < 1e-10);
    CHECK(std::abs(rep.op_norm - expected) < 1e-6);
  }

  SUBCASE("shifts past the interval give the zero operator") {
    const auto op = lift(toy.table, toy.grid, toy.grid.n_t * toy.grid.dt());
    const Vector f = rng.unit_vector(toy.grid.flat_size());
    CHECK(op.apply(f).norm() == 0.0);
    const auto rep = semigroup_norm_check(op, rng, 1e-12);
    CHECK(rep.op_norm == 0.0);
    CHECK(rep.pass);
  }
}

TEST_CASE("multiplication commutation") {
  Toy toy = make_toy(24);
  Rng rng(3);
  const auto op = lift(toy.table, toy.grid, 3 * toy.grid.dt());

  SUBCASE("constant scalar commutes trivially") {
    RealVector phi = RealVector::Ones(toy.grid.n_t);
    const auto rep = multiplication_commutation_check(op, phi, rng);
    CHECK(rep.max_deviation < 1e-14);
  }

  SUBCASE("smooth bump commutes to machine precision") {
    RealVector phi(toy.grid.n_t);
    for (int i = 0; i < toy.grid.n_t; ++i)
      phi(i) = 1.0 + mollifier((toy.grid.node(i) - 0.7) / 0.5);
    const auto rep = multiplication_commutation_check(op, phi, rng);
    CHECK(rep.pass);
    CHECK(rep.max_deviation < 1e-13);
  }

  SUBCASE("a time-mixing operator fails the criterion") {
    // negative control: average adjacent blocks after shifting
    const int k = op.shift_steps();
    const auto mixing = [&](const Vector& f) {
      Vector out = op.apply(f);
      for (int i = toy.grid.n_t - 1; i > k; --i) {
        out.segment(static_cast<Index>(i) * toy.grid.dim, toy.grid.dim) =
            0.5 * (out.segment(static_cast<Index>(i) * toy.grid.dim, toy.grid.dim) +
                   out.segment(static_cast<Index>(i - 1) * toy.grid.dim, toy.grid.dim));
      }
      return out;
    };
    RealVector phi(toy.grid.n_t);
    for (int i = 0; i < toy.grid.n_t; ++i)
      phi(i) = 1.0 + mollifier((toy.grid.node(i) - 0.7) / 0.5);
    RealVector phi_shifted = RealVector::Zero(toy.grid.n_t);
    for (int i = k; i < toy.grid.n_t; ++i) phi_shifted(i) = phi(i - k);
    Real deviation = 0.0;
    for (int probe = 0; probe < 4; ++probe) {
      const Vector f = rng.unit_vector(toy.grid.flat_size());
      Vector pf(toy.grid.flat_size());
      for (int i = 0; i < toy.grid.n_t; ++i)
        pf.segment(static_cast<Index>(i) * toy.grid.dim, toy.grid.dim) =
            phi(i) * toy.grid.block(f, i);
      Vector lhs = mixing(pf);
      Vector mixed = mixing(f);
      for (int i = 0; i < toy.grid.n_t; ++i)
        mixed.segment(static_cast<Index>(i) * toy.grid.dim, toy.grid.dim) *= phi_shifted(i);
      deviation = std::max(deviation, (lhs - mixed).norm());
    }
    CHECK(deviation > 1e-3);
  }
}

TEST_CASE("semigroup resolvent and the discrete generator") {
  Rng rng(4);

  SUBCASE("scalar Laplace identity for the trivial propagator") {
    Toy flat = make_toy(64, true);
    const Complex lambda(1.3, 0.0);
    const Vector f = rng.unit_vector(flat.grid.flat_size());
    const Vector rf = semigroup_resolvent_apply(*flat.table, flat.grid, lambda, f);
    const Vector residual =
        lambda * rf - discrete_generator_apply(flat.gen, flat.grid, rf) - f;
    CHECK(flat.grid.norm(residual) / flat.grid.norm(f) < 3.0 * flat.grid.dt());
  }

  SUBCASE("resolvent norm bound with discretization slack") {
    Toy toy = make_toy(48);
    for (Real lambda : {2.0, 5.0}) {
      Real worst = 0.0;
      for (int probe = 0; probe < 4; ++probe) {
        const Vector f = rng.unit_vector(toy.grid.flat_size());
        const Vector rf = semigroup_resolvent_apply(*toy.table, toy.grid, Complex(lambda, 0), f);
        worst = std::max(worst, toy.grid.norm(rf) / toy.grid.norm(f));
      }
      CHECK(worst <= 1.0 / lambda + 2.0 * toy.grid.dt());
    }
  }

  SUBCASE("residual halves when the grid is refined") {
    const auto residual_of = [&](int n_t) {
      Toy toy = make_toy(n_t);
      Rng local(5);
      const auto rep =
          generator_consistency_check(*toy.table, toy.gen, toy.grid, Complex(1.0, 0.0), local, 4);
      return rep.max_rel_residual;
    };
    const Real r1 = residual_of(32);
    const Real r2 = residual_of(64);
    CHECK(r1 / r2 > 1.5);
    CHECK(r1 / r2 < 2.6);
  }
}

TEST_CASE("orbit residual and weak pairing are first order") {
  Rng rng(6);
  const auto at = [&](int n_t) {
    Toy toy = make_toy(n_t);
    Rng local(7);
    const Vector x = local.unit_vector(3);
    return std::make_pair(orbit_generator_residual(*toy.table, toy.gen, toy.grid, x),
                          weak_solution_pairing_residual(*toy.table, toy.gen, toy.grid, x, local, 3));
  };
  const auto [orbit1, weak1] = at(32);
  const auto [orbit2, weak2] = at(64);
  CHECK(orbit1 / orbit2 > 1.4);
  CHECK(orbit1 / orbit2 < 2.7);
  CHECK(weak1 / weak2 > 1.3);
  CHECK(weak1 / weak2 < 2.9);
}

TEST_CASE("lift requires a matching stride-1 table") {
  Toy toy = make_toy(20);
  TimeDependentGenerator gen2 = toy.gen;
  auto coarse = std::make_shared<PropagatorTable>(exp_product_propagator(
      gen2, TimeGrid{0.0, 1.5, 20}, ExpProductOptions{ProductRule::midpoint, 2, {}, -1.0}));
  CHECK_THROWS_AS(lift(coarse, toy.grid, toy.grid.dt()), GridMismatch);
  const FunctionSpaceGrid wrong{0.0, 1.5, 10, 3};
  CHECK_THROWS_AS(lift(toy.table, wrong, wrong.dt()), GridMismatch);
}
