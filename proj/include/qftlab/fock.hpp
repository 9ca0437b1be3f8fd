#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qftlab/basis.hpp"
#include "qftlab/linalg.hpp"
#include "qftlab/testfunction.hpp"

namespace qftlab {

/// Dense operator on the occupation basis with hermiticity metadata.
struct FockOperator {
  Matrix matrix;
  bool hermitian = false;
  std::string label;
  Real symmetrization_deviation = 0.0;

  Index dim() const { return matrix.rows(); }
};

/// Hermiticity tolerance used through the module: 1e-12 * (1 + max|entry|).
bool passes_hermiticity_tolerance(const Matrix& m);

/// Ladder operators for mode j. The creator annihilates states whose total
/// occupation would exceed n_max; the annihilator is its exact adjoint matrix.
FockOperator creation_op(const OccupationBasis& basis, int j);
FockOperator annihilation_op(const OccupationBasis& basis, int j);

FockOperator number_op(const OccupationBasis& basis);
FockOperator free_hamiltonian(const TruncationParams& params, const OccupationBasis& basis);
/// Momentum operator sum_j k_j n_j (diagonal).
FockOperator momentum_op(const TruncationParams& params, const OccupationBasis& basis);
/// Lattice translation unitary exp(-i a_x P); conjugation moves phi(x) to phi(x + a_x).
Matrix translation_unitary(const TruncationParams& params, const OccupationBasis& basis, Real a_x);

/// Truncated tadpole constant  c = sum_{|j|<=cutoff} (2 L mu(k_j))^{-1}
/// (= vacuum expectation of phi(x)^2 at particle cap >= 2).
Real wick_constant(const TruncationParams& params, int field_cutoff = -1);

/// Field operator phi(x) = sum_j (2 L mu_j)^{-1/2} (adag_j e^{-i k_j x} + a_j e^{i k_j x}).
/// x must be a lattice site; field_cutoff < mode_cutoff restricts the mode sum.
FockOperator field_op(const TruncationParams& params, const OccupationBasis& basis, Real x,
                      int field_cutoff = -1);

/// Wick power :phi^p(x): assembled by normal ordering (creators left):
/// sum_r C(p,r) A^r (A^dag)^(p-r) with A the creator part of phi(x).
FockOperator wick_power(const TruncationParams& params, const OccupationBasis& basis, int p,
                        Real x, int field_cutoff = -1);

/// Real polynomial P(y) = sum_p coeffs[p] y^p (index = power).
using Polynomial = std::vector<Real>;

/// Localized interaction V(t;g) = dx * sum_x g(t,x) :P(phi(x)):, symmetrized to
/// exact hermiticity. Caches the Wick powers per lattice site, so evaluation at
/// many times is cheap. Immutable after construction; safe for concurrent reads.
class InteractionAssembler {
 public:
  InteractionAssembler(const TruncationParams& params, const OccupationBasis& basis,
                       LocalizationFunction g, Polynomial poly, int field_cutoff = -1);

  /// V(t;g); exactly the zero matrix when g(t,.) vanishes.
  Matrix at_time(Real t) const;
  FockOperator operator_at(Real t) const;

  const LocalizationFunction& g() const { return g_; }
  const Polynomial& polynomial() const { return poly_; }
  const TruncationParams& params() const { return params_; }
  Real last_symmetrization_deviation() const { return presym_deviation_; }

 private:
  TruncationParams params_;
  const OccupationBasis* basis_;
  LocalizationFunction g_;
  Polynomial poly_;
  int field_cutoff_;
  std::vector<Matrix> site_blocks_;  // sum_p a_p :phi^p(x_m): per lattice site
  mutable Real presym_deviation_ = 0.0;
};

/// One-shot V(t;g).
FockOperator interaction_op(const TruncationParams& params, const OccupationBasis& basis,
                            const LocalizationFunction& g, const Polynomial& poly, Real t,
                            int field_cutoff = -1);

/// Kernel of a normal-ordered Wick monomial: `creators` creation and
/// `annihilators` annihilation operators, with a complex amplitude per mode
/// tuple (row-major over [creators + annihilators] indices, each in 0..M-1).
struct WickKernel {
  int creators = 0;
  int annihilators = 0;
  int modes = 0;
  std::vector<Complex> values;  // size modes^(creators+annihilators)

  int order() const { return creators + annihilators; }
  std::size_t tuple_count() const;
  Complex& at(const std::vector<int>& tuple);
  const Complex& at(const std::vector<int>& tuple) const;

  /// Max deviation from symmetry under permutations within the creator block
  /// and within the annihilator block.
  Real symmetry_deviation() const;
};

/// l2 norm of the kernel array: sqrt(sum |w|^2).
Real kernel_l2_norm(const WickKernel& kernel);

/// Dense matrix of the normal-ordered monomial
///   W = sum_tuples w(j_1..j_m, l_1..l_n) adag_{j_1}..adag_{j_m} a_{l_1}..a_{l_n}.
Matrix wick_monomial_op(const OccupationBasis& basis, const WickKernel& kernel);

struct NBoundReport {
  Real weighted_norm = 0.0;  // ||(N+1)^{-m/2} W (N+1)^{-n/2}||, spectral
  Real kernel_norm = 0.0;    // ||w||_2
  int m = 0;
  int n = 0;
  bool pass = false;
};

/// Checks the number-operator domination of a Wick monomial:
/// ||(N+1)^{-m/2} W (N+1)^{-n/2}|| <= ||w||_2, requiring m >= #creators and
/// n >= #annihilators. Throws BoundViolated on failure (an assembly bug).
NBoundReport verify_n_bound(const OccupationBasis& basis, const Matrix& w_op,
                            const WickKernel& kernel, int m, int n);

/// Wick-monomial decomposition of V(t;g) for P(y) = a_p y^p at fixed t:
/// kernels w_r(j_1..j_p) = a_p C(p,r) ghat(t, sum k_cre - sum k_ann) prod (2 L mu)^(-1/2)
/// with ghat the lattice Fourier transform dx * sum_x g(t,x) e^{-ikx}.
std::vector<WickKernel> interaction_wick_kernels(const TruncationParams& params,
                                                 const LocalizationFunction& g, int power,
                                                 Real coeff, Real t, int field_cutoff = -1);

struct SemiboundednessRow {
  int field_cutoff = 0;
  Real wick_const = 0.0;
  Real min_eigenvalue = 0.0;
};

/// Lowest eigenvalue of H0 + V(t;g) for a sweep of field cutoffs at a fixed
/// basis; diagnostic for the uniform-in-t lower bound of even interactions.
/// Requires g >= 0 on the lattice and an even polynomial with positive leading
/// coefficient.
std::vector<SemiboundednessRow> semiboundedness_report(const TruncationParams& params,
                                                       const OccupationBasis& basis,
                                                       const LocalizationFunction& g,
                                                       const Polynomial& poly, Real t);

}  // namespace qftlab
