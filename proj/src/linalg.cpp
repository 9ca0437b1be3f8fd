#include "qftlab/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qftlab/rng.hpp"

namespace qftlab {

Real operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

HermitianEig hermitian_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m));
  return HermitianEig{es.eigenvalues(), es.eigenvectors()};
}

Matrix exp_hermitian(const Matrix& h, Complex z) {
  return hermitian_eig(h).map([z](Real lambda) { return std::exp(z * lambda); });
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t seed) {
  return fnv1a(s.data(), s.size(), seed);
}

Matrix Rng::hermitian_with_norm(Index dim, Real norm) {
  Matrix m = hermitian(dim);
  const Real current = operator_norm(m);
  if (current == 0.0) return m;
  return m * (norm / current);
}

}  // namespace qftlab
