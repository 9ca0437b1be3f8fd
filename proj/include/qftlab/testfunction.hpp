#pragma once

#include <optional>
#include <vector>

#include "qftlab/basis.hpp"
#include "qftlab/errors.hpp"
#include "qftlab/linalg.hpp"

namespace qftlab {

/// Smooth compactly supported mollifier: b(u) = exp(1 - 1/(1-u^2)) for |u| < 1,
/// 0 otherwise. b(0) = 1.
Real mollifier(Real u);
Real mollifier_derivative(Real u);

/// One separable space-time bump  A * b((t-t0)/rt) * b((x-x0)/rx). With
/// space_constant set the spatial factor is 1 over the whole box (allowed on
/// the periodic lattice), leaving a pure time profile.
struct BumpSpec {
  Real t_center = 0.0;
  Real t_radius = 1.0;
  Real x_center = 0.0;
  Real x_radius = 1.0;
  Real amplitude = 1.0;
  bool space_constant = false;

  Real value(Real t, Real x) const;
  Real time_profile(Real t) const;
  Real t_min() const { return t_center - t_radius; }
  Real t_max() const { return t_center + t_radius; }
  Real x_min() const { return x_center - x_radius; }
  Real x_max() const { return x_center + x_radius; }
};

/// Real test function g(t,x) on the space-time grid, realized as a finite sum
/// of mollifier bumps. Exactly zero outside the union of the bump supports,
/// which must lie strictly inside the spatial box.
class LocalizationFunction {
 public:
  LocalizationFunction() = default;
  LocalizationFunction(std::vector<BumpSpec> bumps, const TruncationParams& params);

  Real operator()(Real t, Real x) const;
  /// Value at lattice site m at time t.
  Real at_site(Real t, int m) const;
  /// Row of samples over all lattice sites at time t.
  RealVector site_row(Real t) const;

  bool vanishes_at(Real t) const;
  bool is_zero() const { return bumps_.empty(); }

  Real t_min() const;  // support hull in time
  Real t_max() const;

  const std::vector<BumpSpec>& bumps() const { return bumps_; }
  int x_points() const { return x_points_; }
  Real box_length() const { return box_length_; }

  LocalizationFunction shifted(Real a_t, Real a_x) const;
  /// Bumps whose centers lie in [t_lo, t_hi]; throws SupportOverlap when a bump
  /// support straddles a window edge, since the restriction would not be exact.
  LocalizationFunction restricted_to_time(Real t_lo, Real t_hi) const;

  friend LocalizationFunction operator+(const LocalizationFunction& a,
                                        const LocalizationFunction& b);

  /// Largest |second difference| / dt^2 of the time profile at x through the
  /// spatial maximum; diagnostic smoothness proxy.
  Real second_difference_bound(int samples = 512) const;

  /// Samples g on a time grid (rows) times the spatial lattice (columns).
  RealMatrix samples(Real t0, Real t1, int nt) const;

 private:
  std::vector<BumpSpec> bumps_;
  int x_points_ = 0;
  Real box_length_ = 0.0;
};

/// Single-bump constructor with support checks against the grid and the box.
LocalizationFunction bump(const TruncationParams& params, const BumpSpec& spec, Real t_grid_min,
                          Real t_grid_max);

}  // namespace qftlab
