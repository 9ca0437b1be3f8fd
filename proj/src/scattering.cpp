#include "qftlab/scattering.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

#include "qftlab/errors.hpp"
#include "qftlab/generators.hpp"

namespace qftlab {

TimeDependentGenerator dirac_interaction_generator(const TruncationParams& params,
                                                   const OccupationBasis& basis,
                                                   const LocalizationFunction& g,
                                                   const Polynomial& poly) {
  auto assembler = std::make_shared<InteractionAssembler>(params, basis, g, poly);
  const Index dim = basis.size();
  RealVector energies(dim);
  {
    const Matrix h0 = free_hamiltonian(params, basis).matrix;
    energies = h0.diagonal().real();
  }
  std::optional<std::pair<Real, Real>> support;
  if (!g.is_zero()) support = std::make_pair(g.t_min(), g.t_max());
  return TimeDependentGenerator(
      [assembler, energies, dim](Real t) -> Matrix {
        const Matrix v = assembler->at_time(t);
        if (v.cwiseAbs().maxCoeff() == 0.0) return v;
        Vector phase(dim);
        for (Index i = 0; i < dim; ++i) phase(i) = std::exp(Complex(0.0, t * energies(i)));
        return phase.asDiagonal() * v * phase.conjugate().asDiagonal();
      },
      "V^D", support);
}

namespace {

struct BracketGrid {
  Real sigma;
  Real tau;
  TimeGrid grid;
};

BracketGrid make_bracket(const LocalizationFunction& g, const ScatteringConfig& cfg,
                         std::optional<std::pair<Real, Real>> bracket) {
  Real sigma, tau;
  if (bracket) {
    sigma = bracket->first;
    tau = bracket->second;
    if (!g.is_zero() && !(sigma < g.t_min() && tau > g.t_max()))
      throw BracketTooTight("the bracket must strictly contain the time support");
  } else {
    if (g.is_zero()) {
      sigma = 0.0;
      tau = cfg.dt;
    } else {
      sigma = g.t_min() - cfg.bracket_margin;
      tau = g.t_max() + cfg.bracket_margin;
    }
  }
  const int n = std::max(1, static_cast<int>(std::ceil((tau - sigma) / cfg.dt - 1e-12)));
  return BracketGrid{sigma, tau, TimeGrid{sigma, tau, n}};
}

std::vector<Real> auto_levels(const TimeDependentGenerator& gen, const BracketGrid& bg) {
  // Coarse sample of the spectral radius; the saturation check of the
  // approximative run verifies the choice.
  Real rho = 0.0;
  const int samples = 33;
  for (int s = 0; s <= samples; ++s) {
    const Real t = bg.sigma + (bg.tau - bg.sigma) * s / samples;
    if (gen.vanishes_at(t)) continue;
    rho = std::max(rho, gen.eig(t)->spectral_radius());
  }
  const Real base = std::ceil(1.1 * rho) + 1.0;
  return {base, base + 1.0};
}

int auto_stride(const ScatteringConfig& cfg, int n_steps) {
  if (cfg.stride > 0) return cfg.stride;
  return std::max(1, n_steps / 128);
}

ScatteringOperator s_from_generator(const TimeDependentGenerator& gen, const BracketGrid& bg,
                                    const ScatteringConfig& cfg) {
  ApproximationScheme scheme;
  scheme.kind = ApproximationScheme::Kind::spectral_cutoff;
  scheme.levels = cfg.levels.empty() ? auto_levels(gen, bg) : cfg.levels;
  ApproximativeOptions opts;
  opts.rule = cfg.rule;
  opts.stride = auto_stride(cfg, bg.grid.n_steps);
  ApproxDiagnostics diag;
  PropagatorTable table = approximative_solution(gen, bg.grid, scheme, opts, &diag);
  ScatteringOperator out;
  out.s = table.final();
  out.sigma = bg.sigma;
  out.tau = bg.tau;
  const Index dim = out.s.rows();
  out.unitarity_deviation = (out.s.adjoint() * out.s - Matrix::Identity(dim, dim)).norm();
  out.diagnostics = std::move(diag);
  out.scheme = table.scheme();
  return out;
}

}  // namespace

ScatteringOperator local_s_operator(const TruncationParams& params, const OccupationBasis& basis,
                                    const LocalizationFunction& g, const Polynomial& poly,
                                    const ScatteringConfig& cfg,
                                    std::optional<std::pair<Real, Real>> bracket) {
  const BracketGrid bg = make_bracket(g, cfg, bracket);
  if (g.is_zero()) {
    ScatteringOperator out;
    out.s = Matrix::Identity(basis.size(), basis.size());
    out.sigma = bg.sigma;
    out.tau = bg.tau;
    out.scheme = "identity";
    return out;
  }
  const TimeDependentGenerator gen = dirac_interaction_generator(params, basis, g, poly);
  return s_from_generator(gen, bg, cfg);
}

Matrix relative_s_operator(const TruncationParams& params, const OccupationBasis& basis,
                           const LocalizationFunction& g, const LocalizationFunction& f,
                           const Polynomial& poly, const ScatteringConfig& cfg) {
  const LocalizationFunction sum = g + f;
  Real lo = 0.0, hi = cfg.dt;
  if (!sum.is_zero()) {
    lo = sum.t_min() - cfg.bracket_margin;
    hi = sum.t_max() + cfg.bracket_margin;
  }
  const auto bracket = std::make_pair(lo, hi);
  const Matrix s_g = local_s_operator(params, basis, g, poly, cfg, bracket).s;
  const Matrix s_gf = local_s_operator(params, basis, sum, poly, cfg, bracket).s;
  return s_g.adjoint() * s_gf;
}

CausalFactorizationReport causal_factorization_check(const TruncationParams& params,
                                                     const OccupationBasis& basis,
                                                     const LocalizationFunction& f,
                                                     const LocalizationFunction& h,
                                                     const LocalizationFunction& g,
                                                     const Polynomial& poly,
                                                     const ScatteringConfig& cfg) {
  if (!f.is_zero() && !g.is_zero() && !(f.t_min() > g.t_max()))
    throw SupportsNotTimeSeparated("supp_t f must lie strictly later than supp_t g");
  const LocalizationFunction fhg = f + h + g;
  Real lo = -cfg.dt, hi = cfg.dt;
  if (!fhg.is_zero()) {
    lo = fhg.t_min() - cfg.bracket_margin;
    hi = fhg.t_max() + cfg.bracket_margin;
  }
  const auto bracket = std::make_pair(lo, hi);
  const Matrix s_fhg = local_s_operator(params, basis, fhg, poly, cfg, bracket).s;
  const Matrix s_fh = local_s_operator(params, basis, f + h, poly, cfg, bracket).s;
  const Matrix s_h = local_s_operator(params, basis, h, poly, cfg, bracket).s;
  const Matrix s_hg = local_s_operator(params, basis, h + g, poly, cfg, bracket).s;

  CausalFactorizationReport report;
  report.deviation = (s_fhg - s_fh * s_h.adjoint() * s_hg).norm();
  report.tolerance = cfg.tol_cf;
  report.pass = report.deviation <= report.tolerance;
  return report;
}

CovarianceReport covariance_check(const TruncationParams& params, const OccupationBasis& basis,
                                  const LocalizationFunction& g, const Polynomial& poly, Real a_t,
                                  Real a_x, const ScatteringConfig& cfg, Real tolerance) {
  const Real dx = params.dx();
  if (std::abs(a_x / dx - std::round(a_x / dx)) > 1e-9)
    throw ShiftNotGridAligned("spatial shift must be a multiple of dx");
  if (std::abs(a_t / cfg.dt - std::round(a_t / cfg.dt)) > 1e-9)
    throw ShiftNotGridAligned("time shift must be a multiple of dt");

  const ScatteringOperator base = local_s_operator(params, basis, g, poly, cfg);
  const LocalizationFunction shifted = g.shifted(a_t, a_x);
  const auto shifted_bracket = std::make_pair(base.sigma + a_t, base.tau + a_t);
  const ScatteringOperator moved =
      local_s_operator(params, basis, shifted, poly, cfg, shifted_bracket);

  // S(g(.-a_t, .-a_x)) = e^{i a_t H0} X(a_x) S(g) X(a_x)^H e^{-i a_t H0}.
  const Matrix x_shift = translation_unitary(params, basis, a_x);
  const Matrix h0 = free_hamiltonian(params, basis).matrix;
  const Index dim = basis.size();
  Vector tphase(dim);
  for (Index i = 0; i < dim; ++i) tphase(i) = std::exp(Complex(0.0, a_t * h0(i, i).real()));
  const Matrix conj =
      tphase.asDiagonal() * (x_shift * base.s * x_shift.adjoint()) * tphase.conjugate().asDiagonal();

  CovarianceReport report;
  report.deviation = (moved.s - conj).norm();
  report.tolerance = tolerance;
  report.pass = report.deviation <= tolerance;
  return report;
}

Matrix dyson_series(const TruncationParams& params, const OccupationBasis& basis,
                    const LocalizationFunction& g, const Polynomial& poly, int order,
                    const ScatteringConfig& cfg) {
  if (order < 0 || order > 2) throw ConfigInvalid("dyson order must be 0, 1 or 2");
  const Index dim = basis.size();
  Matrix s = Matrix::Identity(dim, dim);
  if (order == 0 || g.is_zero()) return s;

  const TimeDependentGenerator gen = dirac_interaction_generator(params, basis, g, poly);
  const BracketGrid bg = make_bracket(g, cfg, std::nullopt);
  const int n = bg.grid.n_steps;
  const Real dt = bg.grid.dt();

  // Cumulative trapezoid of V^D and, for order 2, of V^D(t) * (cumulative so far).
  Matrix cum = Matrix::Zero(dim, dim);
  Matrix second = Matrix::Zero(dim, dim);
  Matrix v_prev = gen.vanishes_at(bg.grid.node(0))
                      ? Matrix(Matrix::Zero(dim, dim))
                      : gen.hamiltonian(bg.grid.node(0));
  Matrix f_prev = v_prev * cum;
  for (int i = 1; i <= n; ++i) {
    const Real t = bg.grid.node(i);
    const Matrix v = gen.vanishes_at(t) ? Matrix(Matrix::Zero(dim, dim)) : gen.hamiltonian(t);
    const Matrix cum_next = cum + 0.5 * dt * (v_prev + v);
    if (order == 2) {
      const Matrix f = v * cum_next;
      second += 0.5 * dt * (f_prev + f);
      f_prev = f;
    }
    cum = cum_next;
    v_prev = v;
  }
  s -= kImag * cum;
  if (order == 2) s -= second;
  return s;
}

DysonRemainderReport dyson_remainder_study(const TruncationParams& params,
                                           const OccupationBasis& basis,
                                           const LocalizationFunction& g, const Polynomial& poly,
                                           const std::vector<Real>& amplitudes, int order,
                                           const ScatteringConfig& cfg) {
  DysonRemainderReport report;
  report.amplitudes = amplitudes;
  for (Real lambda : amplitudes) {
    std::vector<BumpSpec> scaled = g.bumps();
    for (auto& b : scaled) b.amplitude *= lambda;
    LocalizationFunction gl(scaled, params);
    const Matrix s = local_s_operator(params, basis, gl, poly, cfg).s;
    const Matrix sk = dyson_series(params, basis, gl, poly, order, cfg);
    report.remainders.push_back((s - sk).norm());
  }
  report.slope = fit_loglog_slope(report.amplitudes, report.remainders);
  return report;
}

QuadraticOracle quadratic_oracle(const TruncationParams& params,
                                 const std::function<Real(Real)>& v, Real lambda, Real sigma,
                                 Real tau, int rk_steps, Real degeneracy_tol) {
  QuadraticOracle oracle;
  oracle.sigma = sigma;
  oracle.tau = tau;

  // Instability scan and the coupling integral for the Wick phase.
  Real v_int = 0.0;
  {
    const int scan = std::max(rk_steps, 1000);
    const Real h = (tau - sigma) / scan;
    Real worst = std::numeric_limits<Real>::infinity();
    for (int i = 0; i <= scan; ++i) {
      const Real t = sigma + i * h;
      const Real w = (i == 0 || i == scan) ? 0.5 : 1.0;
      v_int += w * v(t);
      const Real mu0 = params.mu(0);
      worst = std::min(worst, mu0 * mu0 + lambda * v(t));
    }
    v_int *= h;
    if (worst < -degeneracy_tol)
      throw InstabilityDetected("instantaneous frequency mu^2 + lambda v(t) drops to " +
                                std::to_string(worst));
  }
  const Real c_tr = wick_constant(params);
  oracle.wick_phase = std::exp(Complex(0.0, 0.5 * lambda * params.box_length * c_tr * v_int));

  for (int j = 0; j <= params.mode_cutoff; ++j) {
    QuadraticModePrediction mode;
    mode.j = j;
    const Real mu = params.mu(j);
    // Degenerate when the instantaneous frequency grazes zero somewhere.
    {
      const int scan = 1000;
      Real worst = std::numeric_limits<Real>::infinity();
      for (int i = 0; i <= scan; ++i) {
        const Real t = sigma + (tau - sigma) * i / scan;
        worst = std::min(worst, mu * mu + lambda * v(t));
      }
      mode.degenerate = worst <= degeneracy_tol;
    }

    // i alpha' = Omega alpha + kappa conj(beta); i beta' = Omega beta + kappa conj(alpha);
    // c0' = -i kappa (1 + beta/conj(alpha)) c0 (halved for the self-paired j = 0 sector).
    const Real pair_factor = (j == 0) ? 0.5 : 1.0;
    const auto rhs = [&](Real t, const std::array<Complex, 3>& y) {
      const Real kappa = lambda * v(t) / (2.0 * mu);
      const Real omega = mu + kappa;
      const Complex alpha = y[0], beta = y[1], c0 = y[2];
      std::array<Complex, 3> d;
      d[0] = -kImag * (omega * alpha + kappa * std::conj(beta));
      d[1] = -kImag * (omega * beta + kappa * std::conj(alpha));
      const Complex nu = beta / std::conj(alpha);
      d[2] = -kImag * pair_factor * kappa * (1.0 + nu) * c0;
      return d;
    };

    std::array<Complex, 3> y{Complex{1.0, 0.0}, Complex{0.0, 0.0}, Complex{1.0, 0.0}};
    const Real h = (tau - sigma) / rk_steps;
    for (int i = 0; i < rk_steps; ++i) {
      const Real t = sigma + i * h;
      const auto k1 = rhs(t, y);
      std::array<Complex, 3> y2;
      for (int c = 0; c < 3; ++c) y2[c] = y[c] + 0.5 * h * k1[c];
      const auto k2 = rhs(t + 0.5 * h, y2);
      for (int c = 0; c < 3; ++c) y2[c] = y[c] + 0.5 * h * k2[c];
      const auto k3 = rhs(t + 0.5 * h, y2);
      for (int c = 0; c < 3; ++c) y2[c] = y[c] + h * k3[c];
      const auto k4 = rhs(t + h, y2);
      for (int c = 0; c < 3; ++c)
        y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    mode.mu = mu;
    mode.alpha = y[0];
    mode.beta = y[1];
    mode.vacuum_amplitude = y[2];
    oracle.sectors.push_back(mode);
  }
  return oracle;
}

Complex QuadraticOracle::vacuum_element() const {
  Complex prod = wick_phase;
  for (const auto& m : sectors) prod *= m.vacuum_amplitude;
  return prod;
}

Complex QuadraticOracle::one_particle_element(int j) const {
  const int idx = std::abs(j);
  const auto& mode = sectors[static_cast<std::size_t>(idx)];
  Complex prod = wick_phase;
  for (const auto& m : sectors) prod *= m.vacuum_amplitude;
  prod /= std::conj(mode.alpha);
  // S = e^{i tau H0} U(tau, sigma) e^{-i sigma H0} end phases on |1_j>.
  return prod * std::exp(Complex(0.0, mode.mu * (tau - sigma)));
}

Complex QuadraticOracle::pair_creation_element(int j) const {
  const int idx = std::abs(j);
  const auto& mode = sectors[static_cast<std::size_t>(idx)];
  Complex prod = wick_phase;
  for (const auto& m : sectors) prod *= m.vacuum_amplitude;
  const Complex nu = mode.beta / std::conj(mode.alpha);
  Complex amp = prod * nu;
  if (idx == 0) amp /= std::sqrt(2.0);
  return amp * std::exp(Complex(0.0, 2.0 * mode.mu * tau));
}

std::vector<LocalityRow> locality_commutator_sweep(const TruncationParams& params,
                                                   const OccupationBasis& basis,
                                                   const LocalizationFunction& background,
                                                   const BumpSpec& probe_f, const BumpSpec& probe_h,
                                                   const Polynomial& poly,
                                                   const std::vector<Real>& separations,
                                                   const ScatteringConfig& cfg) {
  std::vector<LocalityRow> rows;
  for (Real sep : separations) {
    BumpSpec f = probe_f;
    BumpSpec h = probe_h;
    h.x_center = f.x_center + sep;
    const LocalizationFunction lf({f}, params);
    const LocalizationFunction lh({h}, params);
    const Matrix s_f = relative_s_operator(params, basis, background, lf, poly, cfg);
    const Matrix s_h = relative_s_operator(params, basis, background, lh, poly, cfg);
    rows.push_back(LocalityRow{sep, operator_norm(s_f * s_h - s_h * s_f)});
  }
  return rows;
}

}  // namespace qftlab
