#include "qftlab/fock.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace qftlab {

namespace {

Real binomial(int n, int k) {
  Real acc = 1.0;
  for (int i = 1; i <= k; ++i) acc *= static_cast<Real>(n - k + i) / i;
  return acc;
}

}  // namespace

bool passes_hermiticity_tolerance(const Matrix& m) {
  const Real scale = 1.0 + m.cwiseAbs().maxCoeff();
  return hermiticity_deviation(m) <= 1e-12 * scale;
}

FockOperator creation_op(const OccupationBasis& basis, int j) {
  const int col_j = basis.mode_column(j);
  const Index dim = basis.size();
  Matrix m = Matrix::Zero(dim, dim);
  std::vector<int> occ;
  for (Index c = 0; c < dim; ++c) {
    if (basis.total(c) + 1 > basis.n_max()) continue;  // cap: project out
    occ = basis.state(c);
    const int n = occ[static_cast<std::size_t>(col_j)];
    occ[static_cast<std::size_t>(col_j)] = n + 1;
    const Index r = basis.index_of(occ);
    if (r >= 0) m(r, c) = std::sqrt(static_cast<Real>(n + 1));
  }
  return FockOperator{std::move(m), false, "adag_" + std::to_string(j)};
}

FockOperator annihilation_op(const OccupationBasis& basis, int j) {
  FockOperator ad = creation_op(basis, j);
  return FockOperator{ad.matrix.adjoint(), false, "a_" + std::to_string(j)};
}

FockOperator number_op(const OccupationBasis& basis) {
  const Index dim = basis.size();
  Matrix m = Matrix::Zero(dim, dim);
  for (Index i = 0; i < dim; ++i) m(i, i) = static_cast<Real>(basis.total(i));
  return FockOperator{std::move(m), true, "N"};
}

FockOperator free_hamiltonian(const TruncationParams& params, const OccupationBasis& basis) {
  const Index dim = basis.size();
  const int k = params.mode_cutoff;
  Matrix m = Matrix::Zero(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    Real e = 0.0;
    const auto& occ = basis.state(i);
    for (int j = -k; j <= k; ++j) e += occ[static_cast<std::size_t>(basis.mode_column(j))] * params.mu(j);
    m(i, i) = e;
  }
  return FockOperator{std::move(m), true, "H0"};
}

FockOperator momentum_op(const TruncationParams& params, const OccupationBasis& basis) {
  const Index dim = basis.size();
  const int k = params.mode_cutoff;
  Matrix m = Matrix::Zero(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    Real p = 0.0;
    const auto& occ = basis.state(i);
    for (int j = -k; j <= k; ++j)
      p += occ[static_cast<std::size_t>(basis.mode_column(j))] * params.momentum(j);
    m(i, i) = p;
  }
  return FockOperator{std::move(m), true, "P"};
}

Matrix translation_unitary(const TruncationParams& params, const OccupationBasis& basis,
                           Real a_x) {
  const Matrix p = momentum_op(params, basis).matrix;
  const Index dim = basis.size();
  Matrix t = Matrix::Zero(dim, dim);
  for (Index i = 0; i < dim; ++i) t(i, i) = std::exp(Complex(0.0, -a_x * p(i, i).real()));
  return t;
}

Real wick_constant(const TruncationParams& params, int field_cutoff) {
  const int k = field_cutoff < 0 ? params.mode_cutoff : field_cutoff;
  Real c = 0.0;
  for (int j = -k; j <= k; ++j) c += 1.0 / (2.0 * params.box_length * params.mu(j));
  return c;
}

namespace {

int lattice_site_of(const TruncationParams& params, Real x) {
  const Real s = x / params.dx();
  const Real r = std::round(s);
  if (std::abs(s - r) > 1e-9)
    throw OffLatticePosition("position " + std::to_string(x) + " is not a lattice site");
  return static_cast<int>(r);
}

/// Creator part of phi(x): A = sum_j (2 L mu_j)^{-1/2} e^{-i k_j x} adag_j.
Matrix field_creator_part(const TruncationParams& params, const OccupationBasis& basis, Real x,
                          int field_cutoff) {
  const int k = field_cutoff < 0 ? params.mode_cutoff : field_cutoff;
  if (k > params.mode_cutoff) throw ModeOutOfRange("field cutoff exceeds the basis cutoff");
  const Index dim = basis.size();
  Matrix a = Matrix::Zero(dim, dim);
  for (int j = -k; j <= k; ++j) {
    const Complex w =
        std::exp(Complex(0.0, -params.momentum(j) * x)) /
        std::sqrt(2.0 * params.box_length * params.mu(j));
    a += w * creation_op(basis, j).matrix;
  }
  return a;
}

}  // namespace

FockOperator field_op(const TruncationParams& params, const OccupationBasis& basis, Real x,
                      int field_cutoff) {
  lattice_site_of(params, x);
  const Matrix a = field_creator_part(params, basis, x, field_cutoff);
  Matrix phi = a + Matrix(a.adjoint());
  return FockOperator{std::move(phi), true, "phi"};
}

FockOperator wick_power(const TruncationParams& params, const OccupationBasis& basis, int p,
                        Real x, int field_cutoff) {
  if (p < 0) throw ConfigInvalid("wick power must be >= 0");
  lattice_site_of(params, x);
  const Index dim = basis.size();
  if (p == 0) return FockOperator{Matrix::Identity(dim, dim), true, ":phi^0:"};

  const Matrix a = field_creator_part(params, basis, x, field_cutoff);
  const Matrix b = a.adjoint();

  // Powers A^r and B^s, r+s = p; normal order keeps every intermediate total
  // occupation between the endpoints, so the truncated product equals the
  // compression of the untruncated monomial.
  std::vector<Matrix> a_pow(static_cast<std::size_t>(p) + 1);
  std::vector<Matrix> b_pow(static_cast<std::size_t>(p) + 1);
  a_pow[0] = Matrix::Identity(dim, dim);
  b_pow[0] = Matrix::Identity(dim, dim);
  for (int r = 1; r <= p; ++r) {
    a_pow[static_cast<std::size_t>(r)] = a * a_pow[static_cast<std::size_t>(r - 1)];
    b_pow[static_cast<std::size_t>(r)] = b_pow[static_cast<std::size_t>(r - 1)] * b;
  }

  Matrix w = Matrix::Zero(dim, dim);
  for (int r = 0; r <= p; ++r)
    w += binomial(p, r) * (a_pow[static_cast<std::size_t>(r)] *
                           b_pow[static_cast<std::size_t>(p - r)]);

  const Real dev = hermiticity_deviation(w);
  FockOperator out{symmetrized(w), true, ":phi^" + std::to_string(p) + ":"};
  out.symmetrization_deviation = dev;
  return out;
}

InteractionAssembler::InteractionAssembler(const TruncationParams& params,
                                           const OccupationBasis& basis, LocalizationFunction g,
                                           Polynomial poly, int field_cutoff)
    : params_(params),
      basis_(&basis),
      g_(std::move(g)),
      poly_(std::move(poly)),
      field_cutoff_(field_cutoff) {
  if (!g_.is_zero() && g_.x_points() != params_.x_points)
    throw GridMismatch("test function sampled on a different spatial lattice");
  const Index dim = basis.size();
  site_blocks_.resize(static_cast<std::size_t>(params_.x_points));
  for (int m = 0; m < params_.x_points; ++m) {
    Matrix block = Matrix::Zero(dim, dim);
    for (std::size_t p = 0; p < poly_.size(); ++p) {
      if (poly_[p] == 0.0) continue;
      block += poly_[p] *
               wick_power(params_, basis, static_cast<int>(p), params_.site(m), field_cutoff_)
                   .matrix;
    }
    site_blocks_[static_cast<std::size_t>(m)] = std::move(block);
  }
}

Matrix InteractionAssembler::at_time(Real t) const {
  const Index dim = basis_->size();
  if (g_.is_zero() || g_.vanishes_at(t)) return Matrix::Zero(dim, dim);
  Matrix v = Matrix::Zero(dim, dim);
  bool any = false;
  for (int m = 0; m < params_.x_points; ++m) {
    const Real gv = g_.at_site(t, m);
    if (gv == 0.0) continue;
    v += gv * site_blocks_[static_cast<std::size_t>(m)];
    any = true;
  }
  if (!any) return Matrix::Zero(dim, dim);
  v *= params_.dx();
  presym_deviation_ = hermiticity_deviation(v);
  return symmetrized(v);
}

FockOperator InteractionAssembler::operator_at(Real t) const {
  FockOperator out{at_time(t), true, "V(t;g)"};
  out.symmetrization_deviation = presym_deviation_;
  return out;
}

FockOperator interaction_op(const TruncationParams& params, const OccupationBasis& basis,
                            const LocalizationFunction& g, const Polynomial& poly, Real t,
                            int field_cutoff) {
  return InteractionAssembler(params, basis, g, poly, field_cutoff).operator_at(t);
}

std::size_t WickKernel::tuple_count() const {
  std::size_t n = 1;
  for (int i = 0; i < order(); ++i) n *= static_cast<std::size_t>(modes);
  return n;
}

namespace {

std::size_t tuple_index(const std::vector<int>& tuple, int modes) {
  std::size_t idx = 0;
  for (int v : tuple) idx = idx * static_cast<std::size_t>(modes) + static_cast<std::size_t>(v);
  return idx;
}

void next_tuple(std::vector<int>& tuple, int modes, bool& done) {
  for (int i = static_cast<int>(tuple.size()) - 1; i >= 0; --i) {
    if (++tuple[static_cast<std::size_t>(i)] < modes) return;
    tuple[static_cast<std::size_t>(i)] = 0;
  }
  done = true;
}

}  // namespace

Complex& WickKernel::at(const std::vector<int>& tuple) { return values[tuple_index(tuple, modes)]; }
const Complex& WickKernel::at(const std::vector<int>& tuple) const {
  return values[tuple_index(tuple, modes)];
}

Real WickKernel::symmetry_deviation() const {
  if (order() == 0) return 0.0;
  Real worst = 0.0;
  std::vector<int> tuple(static_cast<std::size_t>(order()), 0);
  bool done = false;
  std::vector<int> sorted;
  while (!done) {
    sorted = tuple;
    std::sort(sorted.begin(), sorted.begin() + creators);
    std::sort(sorted.begin() + creators, sorted.end());
    worst = std::max(worst, std::abs(at(tuple) - at(sorted)));
    next_tuple(tuple, modes, done);
  }
  return worst;
}

Real kernel_l2_norm(const WickKernel& kernel) {
  Real s = 0.0;
  for (const Complex& v : kernel.values) s += std::norm(v);
  return std::sqrt(s);
}

Matrix wick_monomial_op(const OccupationBasis& basis, const WickKernel& kernel) {
  if (kernel.modes != basis.modes())
    throw GridMismatch("kernel mode count differs from the basis");
  const Index dim = basis.size();
  const int k = (basis.modes() - 1) / 2;
  Matrix w = Matrix::Zero(dim, dim);

  std::vector<int> ann(static_cast<std::size_t>(kernel.annihilators), 0);
  std::vector<int> occ, occ2;
  bool ann_done = kernel.annihilators < 0;
  // Sum over ordered annihilator tuples, then ordered creator tuples.
  std::vector<int> full(static_cast<std::size_t>(kernel.order()), 0);
  for (Index c = 0; c < dim; ++c) {
    std::fill(ann.begin(), ann.end(), 0);
    ann_done = false;
    while (!ann_done) {
      occ = basis.state(c);
      Real factor = 1.0;
      bool killed = false;
      for (int ai = kernel.annihilators - 1; ai >= 0; --ai) {  // rightmost acts first
        const int col = ann[static_cast<std::size_t>(ai)];
        const int n = occ[static_cast<std::size_t>(col)];
        if (n == 0) {
          killed = true;
          break;
        }
        factor *= std::sqrt(static_cast<Real>(n));
        occ[static_cast<std::size_t>(col)] = n - 1;
      }
      if (!killed) {
        std::vector<int> cre(static_cast<std::size_t>(kernel.creators), 0);
        bool cre_done = false;
        while (!cre_done) {
          occ2 = occ;
          Real cfactor = factor;
          bool clipped = false;
          int total = 0;
          for (int v : occ2) total += v;
          for (int ci = kernel.creators - 1; ci >= 0; --ci) {
            const int col = cre[static_cast<std::size_t>(ci)];
            const int n = occ2[static_cast<std::size_t>(col)];
            if (++total > basis.n_max()) {
              clipped = true;
              break;
            }
            cfactor *= std::sqrt(static_cast<Real>(n + 1));
            occ2[static_cast<std::size_t>(col)] = n + 1;
          }
          if (!clipped) {
            const Index r = basis.index_of(occ2);
            if (r >= 0) {
              for (int i = 0; i < kernel.creators; ++i) full[static_cast<std::size_t>(i)] =
                  cre[static_cast<std::size_t>(i)];
              for (int i = 0; i < kernel.annihilators; ++i)
                full[static_cast<std::size_t>(kernel.creators + i)] =
                    ann[static_cast<std::size_t>(i)];
              w(r, c) += kernel.at(full) * cfactor;
            }
          }
          next_tuple(cre, kernel.modes, cre_done);
        }
      }
      next_tuple(ann, kernel.modes, ann_done);
    }
  }
  (void)k;
  return w;
}

NBoundReport verify_n_bound(const OccupationBasis& basis, const Matrix& w_op,
                            const WickKernel& kernel, int m, int n) {
  if (m < kernel.creators || n < kernel.annihilators)
    throw ConfigInvalid("number-bound weights must dominate the monomial order");
  const Index dim = basis.size();
  Vector left(dim), right(dim);
  for (Index i = 0; i < dim; ++i) {
    const Real np1 = static_cast<Real>(basis.total(i) + 1);
    left(i) = std::pow(np1, -0.5 * m);
    right(i) = std::pow(np1, -0.5 * n);
  }
  const Matrix weighted = left.asDiagonal() * w_op * right.asDiagonal();
  NBoundReport report;
  report.weighted_norm = operator_norm(weighted);
  report.kernel_norm = kernel_l2_norm(kernel);
  report.m = m;
  report.n = n;
  report.pass = report.weighted_norm <= report.kernel_norm * (1.0 + 1e-10);
  if (!report.pass)
    throw BoundViolated("number bound violated: " + std::to_string(report.weighted_norm) + " > " +
                        std::to_string(report.kernel_norm));
  return report;
}

std::vector<WickKernel> interaction_wick_kernels(const TruncationParams& params,
                                                 const LocalizationFunction& g, int power,
                                                 Real coeff, Real t, int field_cutoff) {
  const int kmax = field_cutoff < 0 ? params.mode_cutoff : field_cutoff;
  const int modes = params.modes();
  // Lattice Fourier transform ghat(k) = dx sum_x g(t,x) e^{-i k x} for k in
  // (2 pi / L) Z; the sums of up to `power` mode momenta stay in this set.
  const auto ghat = [&](int total_mode) {
    Complex s{0.0, 0.0};
    for (int m = 0; m < params.x_points; ++m) {
      const Real x = params.site(m);
      s += g.at_site(t, m) * std::exp(Complex(0.0, -2.0 * M_PI * total_mode * x /
                                                        params.box_length));
    }
    return s * params.dx();
  };

  std::vector<WickKernel> kernels;
  for (int r = 0; r <= power; ++r) {
    WickKernel kern;
    kern.creators = r;
    kern.annihilators = power - r;
    kern.modes = modes;
    kern.values.assign(kern.tuple_count(), Complex{0.0, 0.0});
    const Real c_rp = coeff * binomial(power, r);
    std::vector<int> tuple(static_cast<std::size_t>(power), 0);
    bool done = power == 0;
    if (power == 0) {
      kern.values[0] = c_rp * ghat(0);
    }
    while (!done) {
      int mode_sum = 0;
      Real weight = 1.0;
      bool outside = false;
      for (int i = 0; i < power; ++i) {
        const int j = tuple[static_cast<std::size_t>(i)] - params.mode_cutoff;
        if (std::abs(j) > kmax) {
          outside = true;
          break;
        }
        mode_sum += (i < r) ? j : -j;
        weight /= std::sqrt(2.0 * params.box_length * params.mu(j));
      }
      if (!outside) kern.at(tuple) = c_rp * weight * ghat(mode_sum);
      next_tuple(tuple, modes, done);
    }
    kernels.push_back(std::move(kern));
  }
  return kernels;
}

std::vector<SemiboundednessRow> semiboundedness_report(const TruncationParams& params,
                                                       const OccupationBasis& basis,
                                                       const LocalizationFunction& g,
                                                       const Polynomial& poly, Real t) {
  // Preconditions: g >= 0 (sampled) and an even polynomial with positive
  // leading coefficient.
  for (int m = 0; m < params.x_points; ++m) {
    if (g.at_site(t, m) < 0.0) throw ConfigInvalid("semiboundedness sweep requires g >= 0");
  }
  int top = -1;
  for (int p = static_cast<int>(poly.size()) - 1; p >= 0; --p) {
    if (poly[static_cast<std::size_t>(p)] != 0.0) {
      top = p;
      break;
    }
  }
  if (top < 2 || top % 2 != 0 || poly[static_cast<std::size_t>(top)] <= 0.0)
    throw ConfigInvalid("semiboundedness sweep requires an even polynomial, positive leading");
  for (int p = 1; p < top; p += 2) {
    if (poly[static_cast<std::size_t>(p)] != 0.0)
      throw ConfigInvalid("semiboundedness sweep requires an even polynomial");
  }

  const Matrix h0 = free_hamiltonian(params, basis).matrix;
  std::vector<SemiboundednessRow> rows;
  for (int cut = 0; cut <= params.mode_cutoff; ++cut) {
    const Matrix v = interaction_op(params, basis, g, poly, t, cut).matrix;
    Eigen::SelfAdjointEigenSolver<Matrix> es(h0 + v, Eigen::EigenvaluesOnly);
    rows.push_back(SemiboundednessRow{cut, wick_constant(params, cut), es.eigenvalues()(0)});
  }
  return rows;
}

}  // namespace qftlab
