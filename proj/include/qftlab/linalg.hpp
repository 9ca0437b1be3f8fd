#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>

namespace qftlab {

using Real = double;
using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr Complex kImag{0.0, 1.0};

/// max_{rc} |M_rc - conj(M_cr)|, the entrywise distance from hermiticity.
template <typename Derived>
Real hermiticity_deviation(const Eigen::MatrixBase<Derived>& m) {
  return (m.derived() - m.derived().adjoint()).cwiseAbs().maxCoeff();
}

template <typename Derived>
Matrix symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return 0.5 * (m.derived() + m.derived().adjoint());
}

/// Spectral norm (largest singular value); exact SVD, intended for small dense matrices.
Real operator_norm(const Matrix& m);

/// Frobenius norm scaled by 1/sqrt(dim); a dimension-insensitive deviation measure.
inline Real scaled_frobenius(const Matrix& m) {
  return m.norm() / std::sqrt(static_cast<Real>(std::max<Index>(Index{1}, m.rows())));
}

/// Eigen-decomposition of a hermitian matrix, kept around for spectral function calculus.
struct HermitianEig {
  RealVector values;
  Matrix vectors;

  /// f applied through the spectral decomposition: vectors * diag(f(values)) * vectors^H.
  template <typename Fn>
  Matrix map(Fn&& f) const {
    Vector fv(values.size());
    for (Index i = 0; i < values.size(); ++i) fv(i) = f(values(i));
    return vectors * fv.asDiagonal() * vectors.adjoint();
  }

  Real spectral_radius() const {
    return values.size() == 0 ? 0.0 : values.cwiseAbs().maxCoeff();
  }
};

/// Decompose a (numerically) hermitian matrix; input is symmetrized first.
HermitianEig hermitian_eig(const Matrix& m);

/// exp(z*H) for hermitian H through its spectral decomposition.
Matrix exp_hermitian(const Matrix& h, Complex z);

/// Largest singular value by power iteration on op^H op, for matrix-free operators.
/// apply/apply_adjoint: Vector -> Vector.
template <typename Apply, typename ApplyAdj>
Real power_iteration_norm(Index dim, Apply&& apply, ApplyAdj&& apply_adj, const Vector& seed,
                          int iters = 200, Real tol = 1e-12) {
  Vector v = seed;
  Real nv = v.norm();
  if (nv == 0.0 || dim == 0) return 0.0;
  v /= nv;
  Real sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector w = apply_adj(apply(v));
    Real nw = w.norm();
    if (nw == 0.0) return 0.0;
    Real next = std::sqrt(nw);
    w /= nw;
    if (std::abs(next - sigma) <= tol * std::max(1.0, next) && it > 3) {
      sigma = next;
      break;
    }
    sigma = next;
    v = w;
  }
  return sigma;
}

/// FNV-1a over a byte view; used for config and basis hashes.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ull);
std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 1469598103934665603ull);

}  // namespace qftlab
