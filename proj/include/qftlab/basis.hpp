#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "qftlab/errors.hpp"
#include "qftlab/linalg.hpp"

namespace qftlab {

/// Physical and truncation configuration of the model: mass m, periodic box of
/// length L, momentum modes k_j = 2*pi*j/L for |j| <= mode_cutoff, a cap on the
/// total particle number and a spatial sampling lattice.
struct TruncationParams {
  Real mass = 1.0;
  Real box_length = 2.0 * M_PI;
  int mode_cutoff = 1;
  int n_max = 2;
  int x_points = 8;

  int modes() const { return 2 * mode_cutoff + 1; }
  Real momentum(int j) const { return 2.0 * M_PI * j / box_length; }
  /// One-particle energy mu(k_j) = sqrt(k_j^2 + m^2).
  Real mu(int j) const { return std::hypot(momentum(j), mass); }
  Real dx() const { return box_length / x_points; }
  Real site(int m) const { return m * dx(); }

  /// Default 20000; override with the QFTLAB_DIM_CAP environment variable.
  static std::size_t dimension_cap();

  void validate() const;  // throws ConfigInvalid
};

/// Counts occupation vectors over `modes` modes with total <= n_max
/// (the binomial C(modes + n_max, n_max)).
std::size_t basis_dimension(int modes, int n_max);

/// Enumeration of all occupation vectors (n_{-K},...,n_K) with sum <= n_max,
/// graded by total particle number and lexicographic within a grade. State 0
/// is the vacuum. The ordering is deterministic, so operator matrices are
/// reproducible bit-for-bit.
class OccupationBasis {
 public:
  OccupationBasis(int modes, int n_max);

  Index size() const { return static_cast<Index>(states_.size()); }
  int modes() const { return modes_; }
  int n_max() const { return n_max_; }

  const std::vector<int>& state(Index i) const { return states_[static_cast<std::size_t>(i)]; }
  int total(Index i) const { return totals_[static_cast<std::size_t>(i)]; }

  /// Index of an occupation vector, or -1 when it is not in the truncated space.
  Index index_of(const std::vector<int>& occ) const;

  /// Column index of mode j (j in {-K,...,K}).
  int mode_column(int j) const;

  std::uint64_t hash() const;

 private:
  int modes_;
  int n_max_;
  std::vector<std::vector<int>> states_;
  std::vector<int> totals_;
  std::unordered_map<std::string, Index> index_;
};

/// Builds the truncated occupation basis after checking the dimension cap.
OccupationBasis build_basis(const TruncationParams& params);

}  // namespace qftlab
