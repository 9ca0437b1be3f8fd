#pragma once

#include <cstdint>
#include <random>

#include "qftlab/linalg.hpp"

namespace qftlab {

/// Deterministic random source. Distributions are hand-rolled on top of the
/// raw mt19937_64 stream so that output is identical across standard library
/// implementations (std::*_distribution is not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  Real uniform() { return static_cast<Real>(engine_() >> 11) * 0x1.0p-53; }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  Real normal() {
    Real u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const Real u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Complex complex_normal() { return Complex(normal(), normal()) / std::sqrt(2.0); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  Vector unit_vector(Index dim) {
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = complex_normal();
    const Real n = v.norm();
    return n > 0 ? Vector(v / n) : unit_vector(dim);
  }

  Matrix hermitian(Index dim) {
    Matrix m(dim, dim);
    for (Index r = 0; r < dim; ++r)
      for (Index c = 0; c < dim; ++c) m(r, c) = complex_normal();
    return symmetrized(m);
  }

  /// Random hermitian scaled to a prescribed spectral norm.
  Matrix hermitian_with_norm(Index dim, Real norm);

 private:
  std::mt19937_64 engine_;
};

}  // namespace qftlab
