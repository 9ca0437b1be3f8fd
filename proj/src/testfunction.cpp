#include "qftlab/testfunction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qftlab {

Real mollifier(Real u) {
  const Real u2 = u * u;
  if (u2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u2));
}

Real mollifier_derivative(Real u) {
  const Real u2 = u * u;
  if (u2 >= 1.0) return 0.0;
  const Real d = 1.0 - u2;
  return mollifier(u) * (-2.0 * u / (d * d));
}

Real BumpSpec::value(Real t, Real x) const {
  if (amplitude == 0.0) return 0.0;
  const Real bt = mollifier((t - t_center) / t_radius);
  if (bt == 0.0) return 0.0;
  if (space_constant) return amplitude * bt;
  return amplitude * bt * mollifier((x - x_center) / x_radius);
}

Real BumpSpec::time_profile(Real t) const {
  return amplitude * mollifier((t - t_center) / t_radius);
}

LocalizationFunction::LocalizationFunction(std::vector<BumpSpec> bumps,
                                           const TruncationParams& params)
    : bumps_(std::move(bumps)), x_points_(params.x_points), box_length_(params.box_length) {
  for (const auto& b : bumps_) {
    if (b.t_radius <= 0.0 || (!b.space_constant && b.x_radius <= 0.0))
      throw ConfigInvalid("bump radii must be positive");
    if (!b.space_constant && (b.x_min() <= 0.0 || b.x_max() >= box_length_))
      throw SupportOutsideGrid("bump spatial support must lie strictly inside the box");
  }
}

Real LocalizationFunction::operator()(Real t, Real x) const {
  Real v = 0.0;
  for (const auto& b : bumps_) v += b.value(t, x);
  return v;
}

Real LocalizationFunction::at_site(Real t, int m) const {
  return (*this)(t, box_length_ * m / x_points_);
}

RealVector LocalizationFunction::site_row(Real t) const {
  RealVector row(x_points_);
  for (int m = 0; m < x_points_; ++m) row(m) = at_site(t, m);
  return row;
}

bool LocalizationFunction::vanishes_at(Real t) const {
  for (const auto& b : bumps_) {
    if (b.amplitude != 0.0 && t > b.t_min() && t < b.t_max()) return false;
  }
  return true;
}

Real LocalizationFunction::t_min() const {
  Real v = std::numeric_limits<Real>::infinity();
  for (const auto& b : bumps_)
    if (b.amplitude != 0.0) v = std::min(v, b.t_min());
  return v;
}

Real LocalizationFunction::t_max() const {
  Real v = -std::numeric_limits<Real>::infinity();
  for (const auto& b : bumps_)
    if (b.amplitude != 0.0) v = std::max(v, b.t_max());
  return v;
}

LocalizationFunction LocalizationFunction::shifted(Real a_t, Real a_x) const {
  LocalizationFunction out = *this;
  for (auto& b : out.bumps_) {
    b.t_center += a_t;
    if (b.space_constant) continue;
    b.x_center += a_x;
    if (b.x_min() <= 0.0 || b.x_max() >= box_length_)
      throw SupportOutsideGrid("shifted bump leaves the box");
  }
  return out;
}

LocalizationFunction LocalizationFunction::restricted_to_time(Real t_lo, Real t_hi) const {
  LocalizationFunction out = *this;
  out.bumps_.clear();
  for (const auto& b : bumps_) {
    const bool inside = b.t_min() >= t_lo && b.t_max() <= t_hi;
    const bool outside = b.t_max() <= t_lo || b.t_min() >= t_hi;
    if (!inside && !outside)
      throw SupportOverlap("bump support straddles the restriction window");
    if (inside) out.bumps_.push_back(b);
  }
  return out;
}

LocalizationFunction operator+(const LocalizationFunction& a, const LocalizationFunction& b) {
  if (a.bumps_.empty()) return b;
  if (b.bumps_.empty()) return a;
  if (a.x_points_ != b.x_points_ || a.box_length_ != b.box_length_)
    throw GridMismatch("adding test functions sampled on different lattices");
  LocalizationFunction out = a;
  out.bumps_.insert(out.bumps_.end(), b.bumps_.begin(), b.bumps_.end());
  return out;
}

Real LocalizationFunction::second_difference_bound(int samples) const {
  if (bumps_.empty()) return 0.0;
  const Real lo = t_min(), hi = t_max();
  const Real dt = (hi - lo) / samples;
  Real worst = 0.0;
  for (const auto& b : bumps_) {
    const Real x_peak = b.x_center;
    for (int i = 1; i < samples; ++i) {
      const Real t = lo + i * dt;
      const Real d2 =
          ((*this)(t + dt, x_peak) - 2.0 * (*this)(t, x_peak) + (*this)(t - dt, x_peak)) /
          (dt * dt);
      worst = std::max(worst, std::abs(d2));
    }
  }
  return worst;
}

RealMatrix LocalizationFunction::samples(Real t0, Real t1, int nt) const {
  RealMatrix out(nt + 1, x_points_);
  for (int i = 0; i <= nt; ++i) {
    const Real t = t0 + (t1 - t0) * i / nt;
    out.row(i) = site_row(t).transpose();
  }
  return out;
}

LocalizationFunction bump(const TruncationParams& params, const BumpSpec& spec, Real t_grid_min,
                          Real t_grid_max) {
  if (spec.t_min() <= t_grid_min || spec.t_max() >= t_grid_max)
    throw SupportOutsideGrid("bump time support must lie strictly inside the grid");
  return LocalizationFunction({spec}, params);
}

}  // namespace qftlab
