#include "qftlab/generators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <mutex>

#include "qftlab/errors.hpp"
#include "qftlab/rng.hpp"

namespace qftlab {

TimeDependentGenerator::TimeDependentGenerator(std::function<Matrix(Real)> h, std::string label,
                                               std::optional<std::pair<Real, Real>> time_support)
    : h_(std::move(h)), label_(std::move(label)), support_(time_support) {}

Matrix TimeDependentGenerator::hamiltonian(Real t) const {
  Matrix m = h_(t);
  const Real scale = 1.0 + (m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  if (hermiticity_deviation(m) > 1e-12 * scale)
    throw Error("generator '" + label_ + "' is not hermitian at t=" + std::to_string(t));
  return symmetrized(m);
}

std::shared_ptr<const HermitianEig> TimeDependentGenerator::eig(Real t) const {
  {
    std::shared_lock lock(cache_->mutex);
    const auto it = cache_->entries.find(t);
    if (it != cache_->entries.end()) return it->second;
  }
  auto value = std::make_shared<const HermitianEig>(hermitian_eig(hamiltonian(t)));
  std::unique_lock lock(cache_->mutex);
  const auto [it, inserted] = cache_->entries.emplace(t, value);
  return it->second;  // idempotent fill: first writer wins
}

bool TimeDependentGenerator::vanishes_at(Real t) const {
  if (!support_) return false;
  return t <= support_->first || t >= support_->second;
}

std::size_t TimeDependentGenerator::cache_size() const {
  std::shared_lock lock(cache_->mutex);
  return cache_->entries.size();
}

void TimeDependentGenerator::clear_cache() const {
  std::unique_lock lock(cache_->mutex);
  cache_->entries.clear();
}

Complex approx_eigenvalue_map(ApproximationScheme::Kind kind, Real level, Real lambda) {
  if (level < 0.0) return Complex(0.0, -lambda);  // exact A = -iH eigenvalue
  switch (kind) {
    case ApproximationScheme::Kind::spectral_cutoff:
      return Complex(0.0, -std::clamp(lambda, -level, level));
    case ApproximationScheme::Kind::yosida: {
      // A_n = n A R(n, A) acting on the eigenvalue -i*lambda of A.
      const Complex a(0.0, -lambda);
      return level * a / (level - a);
    }
  }
  return Complex(0.0, -lambda);
}

Matrix resolvent(const Matrix& a, Complex lambda) {
  const Index dim = a.rows();
  const Matrix shifted = lambda * Matrix::Identity(dim, dim) - a;
  Eigen::PartialPivLU<Matrix> lu(shifted);
  const Matrix r = lu.solve(Matrix::Identity(dim, dim));
  const Real residual = (shifted * r - Matrix::Identity(dim, dim)).norm();
  if (!(residual <= 1e-10))
    throw NearSingularResolvent("resolvent residual " + std::to_string(residual) + " at lambda=(" +
                                std::to_string(lambda.real()) + "," +
                                std::to_string(lambda.imag()) + ")");
  return r;
}

Matrix yosida_approx(const Matrix& a, Real n) { return n * a * resolvent(a, Complex(n, 0.0)); }

Matrix spectral_cutoff_approx(const Matrix& h, Real n) {
  const HermitianEig eig = hermitian_eig(h);
  if (eig.spectral_radius() <= n) return h;  // no eigenvalue clipped
  return eig.map([n](Real lambda) { return Complex(std::clamp(lambda, -n, n), 0.0); });
}

StabilityReport kato_stability_check(const TimeDependentGenerator& gen,
                                     const std::vector<Real>& times, Real lambda, Real m_const,
                                     Real omega) {
  if (lambda <= omega) throw ConfigInvalid("kato stability requires lambda > omega");
  StabilityReport report;
  report.m_const = m_const;
  report.omega = omega;
  report.lambda = lambda;
  report.pass = true;
  Matrix product;
  int k = 0;
  for (Real t : times) {
    const Matrix r = resolvent(gen.a(t), Complex(lambda, 0.0));
    product = (k == 0) ? r : Matrix(r * product);
    ++k;
    const Real norm = operator_norm(product);
    const Real bound = m_const * std::pow(lambda - omega, -k);
    report.product_norms.push_back(norm);
    report.bounds.push_back(bound);
    if (norm > bound + 1e-9 && report.first_failure < 0) {
      report.pass = false;
      report.first_failure = k - 1;
    }
  }
  return report;
}

SohrReport sohr_condition_check(const TimeDependentGenerator& gen, Real beta, Real k, Real t_lo,
                                Real t_hi, int time_samples, Real dt_factor,
                                Real pass_tolerance) {
  if (time_samples < 2) throw ConfigInvalid("sohr check needs at least two time samples");
  const Real span = t_hi - t_lo;
  const Real fd_dt = dt_factor * span;

  // Probe set: all basis vectors plus 16 seeded pseudo-random unit vectors.
  const Index dim = gen.hamiltonian(t_lo).rows();
  std::vector<Vector> probes;
  for (Index i = 0; i < dim; ++i) {
    Vector e = Vector::Zero(dim);
    e(i) = 1.0;
    probes.push_back(std::move(e));
  }
  Rng rng(0x50687221u);
  for (int i = 0; i < 16; ++i) probes.push_back(rng.unit_vector(dim));

  const auto form_matrix = [&](Real t) -> Matrix {
    const Matrix m = beta * Matrix::Identity(dim, dim) + gen.hamiltonian(t);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < 1.0 - 1e-9)
      throw LowerBoundViolated("beta + H(t) >= 1 fails at t=" + std::to_string(t) +
                               " (min eig " + std::to_string(es.eigenvalues()(0)) + ")");
    return m;
  };

  const auto quad_forms = [&](Real t) -> RealVector {
    const Matrix m = beta * Matrix::Identity(dim, dim) + gen.hamiltonian(t);
    Eigen::LLT<Matrix> llt(m);
    RealVector q(static_cast<Index>(probes.size()));
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const Vector z = llt.solve(probes[p]);
      q(static_cast<Index>(p)) = probes[p].dot(z).real();
    }
    return q;
  };

  SohrReport report;
  report.min_value = std::numeric_limits<Real>::infinity();
  report.min_form_eigenvalue = std::numeric_limits<Real>::infinity();
  for (int s = 0; s < time_samples; ++s) {
    const Real t = t_lo + span * (s + 0.5) / time_samples;
    {
      const Matrix m = form_matrix(t);
      Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
      report.min_form_eigenvalue = std::min(report.min_form_eigenvalue, es.eigenvalues()(0));
    }
    const RealVector q0 = quad_forms(t);
    // Richardson-extrapolated central difference of q(t).
    const RealVector d1 = (quad_forms(t + fd_dt) - quad_forms(t - fd_dt)) / (2.0 * fd_dt);
    const RealVector d2 = (quad_forms(t + 0.5 * fd_dt) - quad_forms(t - 0.5 * fd_dt)) / fd_dt;
    const RealVector deriv = (4.0 * d2 - d1) / 3.0;
    report.derivative_error = std::max(report.derivative_error, (d2 - d1).cwiseAbs().maxCoeff() / 3.0);
    for (Index p = 0; p < q0.size(); ++p) {
      const Real value = 0.5 * deriv(p) + k * q0(p);
      if (value < report.min_value) {
        report.min_value = value;
        report.argmin_time = t;
        report.argmin_probe = static_cast<int>(p);
      }
    }
  }
  report.pass = report.min_value >= -pass_tolerance;
  return report;
}

TimeDependentGenerator dirac_picture(const TimeDependentGenerator& gen, const Matrix& h0) {
  const Index dim = h0.rows();
  const bool diagonal = (h0 - Matrix(h0.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  auto support = gen.time_support();
  if (diagonal) {
    RealVector e = h0.diagonal().real();
    auto inner = std::make_shared<TimeDependentGenerator>(gen);
    return TimeDependentGenerator(
        [inner, e, dim](Real t) -> Matrix {
          if (inner->vanishes_at(t)) return Matrix::Zero(dim, dim);
          Matrix v = inner->hamiltonian(t);
          Vector phase(dim);
          for (Index i = 0; i < dim; ++i) phase(i) = std::exp(Complex(0.0, t * e(i)));
          return phase.asDiagonal() * v * phase.conjugate().asDiagonal();
        },
        gen.label() + "^D", support);
  }
  const HermitianEig e0 = hermitian_eig(h0);
  auto inner = std::make_shared<TimeDependentGenerator>(gen);
  return TimeDependentGenerator(
      [inner, e0, dim](Real t) -> Matrix {
        if (inner->vanishes_at(t)) return Matrix::Zero(dim, dim);
        const Matrix u = e0.map([t](Real lambda) { return std::exp(Complex(0.0, t * lambda)); });
        return u * inner->hamiltonian(t) * u.adjoint();
      },
      gen.label() + "^D", support);
}

TimeDependentGenerator make_matrix_generator(std::function<Matrix(Real)> h, std::string label,
                                             std::optional<std::pair<Real, Real>> support) {
  return TimeDependentGenerator(std::move(h), std::move(label), support);
}

}  // namespace qftlab
