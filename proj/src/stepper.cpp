#include "qftlab/stepper.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

#include "qftlab/errors.hpp"

namespace qftlab {

PropagatorTable::PropagatorTable(TimeGrid grid, std::string scheme, int stride, bool unitary,
                                 std::vector<Matrix> from_start)
    : grid_(grid),
      scheme_(std::move(scheme)),
      stride_(stride),
      unitary_(unitary),
      from_start_(std::move(from_start)) {}

int PropagatorTable::node_index(int s) const {
  const int idx = s * stride_;
  return std::min(idx, grid_.n_steps);
}

Matrix PropagatorTable::u(int s_i, int s_j) const {
  const Index dim = from_start_.front().rows();
  if (s_i == s_j) return Matrix::Identity(dim, dim);
  const Matrix& ui = from_start(s_i);
  const Matrix& uj = from_start(s_j);
  if (unitary_) return ui * uj.adjoint();
  return ui * uj.partialPivLu().solve(Matrix::Identity(dim, dim));
}

Real PropagatorTable::max_unitarity_deviation() const {
  Real worst = 0.0;
  for (const Matrix& u : from_start_) {
    const Index dim = u.rows();
    worst = std::max(worst, (u.adjoint() * u - Matrix::Identity(dim, dim)).norm());
  }
  return worst;
}

Real PropagatorTable::composition_residual(int max_triples) const {
  const int n = stored_count();
  if (n < 3) return 0.0;
  Real worst = 0.0;
  int tested = 0;
  for (int k = 0; k < n - 2 && tested < max_triples; k += std::max(1, (n - 2) / 8)) {
    for (int j = k + 1; j < n - 1 && tested < max_triples; j += std::max(1, (n - j) / 4)) {
      const int i = std::min(n - 1, j + (j - k));
      const Matrix lhs = u(i, j) * u(j, k);
      worst = std::max(worst, (lhs - u(i, k)).norm());
      ++tested;
    }
  }
  return worst;
}

PropagatorTable PropagatorTable::scaled(std::function<Complex(Real, Real)> factor) const {
  std::vector<Matrix> scaled_u;
  scaled_u.reserve(from_start_.size());
  for (int s = 0; s < stored_count(); ++s)
    scaled_u.push_back(factor(node_time(s), grid_.t_start) * from_start(s));
  return PropagatorTable(grid_, scheme_ + "+scaled", stride_, false, std::move(scaled_u));
}

PropagatorTable picard_propagator(const TimeDependentGenerator& gen, const TimeGrid& grid,
                                  const PicardOptions& opts, PicardDiagnostics* diag) {
  const int n = grid.n_steps;
  const Real dt = grid.dt();
  std::vector<Matrix> a(static_cast<std::size_t>(n) + 1);
  Real a_max = 0.0;
  for (int i = 0; i <= n; ++i) {
    a[static_cast<std::size_t>(i)] = gen.a(grid.node(i));
    a_max = std::max(a_max, operator_norm(a[static_cast<std::size_t>(i)]));
  }
  const Index dim = a[0].rows();
  const Matrix id = Matrix::Identity(dim, dim);

  std::vector<Matrix> u(static_cast<std::size_t>(n) + 1, id);
  std::vector<Matrix> au(static_cast<std::size_t>(n) + 1);
  int iter = 0;
  Real delta = 0.0;
  for (iter = 1; iter <= opts.max_iter; ++iter) {
    for (int i = 0; i <= n; ++i) au[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
    delta = 0.0;
    Matrix acc = id;
    for (int i = 0; i < n; ++i) {
      acc += 0.5 * dt * (au[static_cast<std::size_t>(i)] + au[static_cast<std::size_t>(i) + 1]);
      delta = std::max(delta, scaled_frobenius(acc - u[static_cast<std::size_t>(i) + 1]));
      u[static_cast<std::size_t>(i) + 1] = acc;
    }
    if (delta <= opts.tol) break;
  }
  if (iter > opts.max_iter)
    throw NoConvergence("picard iteration did not reach tol " + std::to_string(opts.tol) +
                        " in " + std::to_string(opts.max_iter) + " sweeps");
  if (diag) {
    diag->iterations = iter;
    diag->final_delta = delta;
    Real certificate = 1.0;
    const Real span = a_max * (grid.t_end - grid.t_start);
    for (int m = 1; m <= iter; ++m) certificate *= span / m;
    diag->contraction_certificate = certificate;
  }
  return PropagatorTable(grid, "picard", 1, false, std::move(u));
}

namespace {

struct ProductDiag {
  Real max_spectral_radius = 0.0;
};

PropagatorTable product_table(const TimeDependentGenerator& gen, const TimeGrid& grid,
                              ProductRule rule, int stride,
                              ApproximationScheme::Kind kind, Real level, ProductDiag* pd) {
  const int n = grid.n_steps;
  const Real dt = grid.dt();
  const Index dim = gen.hamiltonian(grid.t_start).rows();
  Matrix u = Matrix::Identity(dim, dim);
  std::vector<Matrix> stored;
  stored.reserve(static_cast<std::size_t>(n / std::max(1, stride)) + 2);
  stored.push_back(u);
  Real rho_max = 0.0;
  const bool unitary_scheme = level < 0.0 || kind == ApproximationScheme::Kind::spectral_cutoff;
  for (int i = 0; i < n; ++i) {
    const Real t_star = rule == ProductRule::left ? grid.node(i) : grid.midpoint(i);
    bool skipped = gen.vanishes_at(t_star);
    if (!skipped) {
      const auto e = gen.eig(t_star);
      if (e->values.size() == 0 || (e->values.cwiseAbs().maxCoeff() == 0.0)) {
        skipped = true;  // exactly zero generator: the step factor is the identity
      } else {
        rho_max = std::max(rho_max, e->spectral_radius());
        const Matrix factor = e->map([&](Real lambda) {
          return std::exp(dt * approx_eigenvalue_map(kind, level, lambda));
        });
        u = factor * u;
      }
    }
    if ((i + 1) % std::max(1, stride) == 0 || i + 1 == n) stored.push_back(u);
  }
  if (pd) pd->max_spectral_radius = rho_max;
  std::string scheme = rule == ProductRule::left ? "exp_product_left" : "exp_product_midpoint";
  if (level >= 0.0)
    scheme += kind == ApproximationScheme::Kind::spectral_cutoff ? "+cutoff" : "+yosida";
  return PropagatorTable(grid, scheme, std::max(1, stride), unitary_scheme, std::move(stored));
}

}  // namespace

PropagatorTable exp_product_propagator(const TimeDependentGenerator& gen, const TimeGrid& grid,
                                       const ExpProductOptions& opts) {
  return product_table(gen, grid, opts.rule, opts.stride, opts.approx_kind, opts.approx_level,
                       nullptr);
}

PropagatorTable implicit_resolvent_propagator(const TimeDependentGenerator& gen,
                                              const TimeGrid& grid, int stride) {
  const int n = grid.n_steps;
  const Real dt = grid.dt();
  const Index dim = gen.hamiltonian(grid.t_start).rows();
  Matrix u = Matrix::Identity(dim, dim);
  std::vector<Matrix> stored;
  stored.push_back(u);
  for (int i = 1; i <= n; ++i) {
    // C_i = (1 - dt A(t_i))^{-1} = (1/dt) R(1/dt, A(t_i)), right-endpoint sampling.
    const Matrix c = resolvent(gen.a(grid.node(i)), Complex(1.0 / dt, 0.0)) / dt;
    u = c * u;
    if (i % std::max(1, stride) == 0 || i == n) stored.push_back(u);
  }
  return PropagatorTable(grid, "implicit_resolvent", std::max(1, stride), false,
                         std::move(stored));
}

PropagatorTable approximative_solution(const TimeDependentGenerator& gen, const TimeGrid& grid,
                                       const ApproximationScheme& scheme,
                                       const ApproximativeOptions& opts, ApproxDiagnostics* diag) {
  if (scheme.levels.empty()) throw ConfigInvalid("approximative solution needs at least one level");
  for (std::size_t i = 1; i < scheme.levels.size(); ++i) {
    if (!(scheme.levels[i] > scheme.levels[i - 1]))
      throw ConfigInvalid("approximation levels must be strictly increasing");
  }
  const Real sat_tol = scheme.kind == ApproximationScheme::Kind::spectral_cutoff
                           ? opts.spectral_saturation_tol
                           : opts.yosida_saturation_tol;

  ApproxDiagnostics local;
  local.saturation_threshold = sat_tol;
  std::vector<PropagatorTable> tables;
  tables.reserve(scheme.levels.size());
  for (Real level : scheme.levels) {
    ProductDiag pd;
    tables.push_back(product_table(gen, grid, opts.rule, opts.stride, scheme.kind, level, &pd));
    local.levels.push_back(ApproxLevelRecord{level, -1.0, pd.max_spectral_radius});
  }
  for (int s = 0; s < tables.front().stored_count(); ++s)
    local.node_times.push_back(tables.front().node_time(s));
  for (std::size_t l = 0; l + 1 < tables.size(); ++l) {
    Real diff = 0.0;
    std::vector<Real> per_node;
    for (int s = 0; s < tables[l].stored_count(); ++s) {
      const Real d = scaled_frobenius(tables[l].from_start(s) - tables[l + 1].from_start(s));
      per_node.push_back(d);
      diff = std::max(diff, d);
    }
    local.node_diffs.push_back(std::move(per_node));
    local.levels[l].diff_to_next = diff;
    if (local.saturation_level < 0.0 && diff <= sat_tol)
      local.saturation_level = scheme.levels[l];
  }
  if (local.saturation_level < 0.0 && opts.require_saturation)
    throw NoSaturation("approximation levels exhausted before the table stabilized (top diff " +
                       std::to_string(local.levels.size() > 1
                                          ? local.levels[local.levels.size() - 2].diff_to_next
                                          : -1.0) +
                       ")");

  PropagatorTable final_table = std::move(tables.back());

  if (opts.compute_residual && opts.stride == 1 && grid.n_steps >= 2) {
    // Discrete-L2 residual of -u' + A_n u at the top level, u' by central differences.
    const Real dt = grid.dt();
    const Real level = scheme.levels.back();
    Real acc = 0.0;
    for (int i = 1; i < grid.n_steps; ++i) {
      const Real t = grid.node(i);
      Matrix an_u;
      if (gen.vanishes_at(t)) {
        an_u = Matrix::Zero(final_table.from_start(0).rows(), final_table.from_start(0).cols());
      } else {
        const auto e = gen.eig(t);
        const Matrix an = e->map(
            [&](Real lambda) { return approx_eigenvalue_map(scheme.kind, level, lambda); });
        an_u = an * final_table.from_start(i);
      }
      const Matrix du =
          (final_table.from_start(i + 1) - final_table.from_start(i - 1)) / (2.0 * dt);
      acc += dt * std::pow(scaled_frobenius(-du + an_u), 2);
    }
    local.residual = std::sqrt(acc);
  }
  if (diag) *diag = std::move(local);
  return final_table;
}

Real GoldsteinProblem::Weight::value(Real t) const {
  if (radius <= 0.0) return 0.0;
  const Real u = (t - center) / radius;
  if (u * u >= 1.0) return 0.0;
  return amplitude * std::exp(1.0 - 1.0 / (1.0 - u * u));
}

GoldsteinProblem::GoldsteinProblem(Matrix s, Matrix l, Matrix t, Weight phi, Weight eta,
                                   Weight psi)
    : s_(std::move(s)), l_(std::move(l)), t_(std::move(t)), phi_(phi), eta_(eta), psi_(psi) {
  if (!(phi_.t_max() < eta_.t_min() && eta_.t_max() < psi_.t_min()))
    throw SupportOverlap("goldstein weights must have ordered, disjoint supports");
}

Real GoldsteinProblem::running_integral(const Weight& w, Real t, int quad_steps) const {
  const Real lo = w.t_min();
  const Real hi = std::min(t, w.t_max());
  if (hi <= lo) return 0.0;
  // Composite Simpson; the integrand is smooth and compactly supported.
  const int n = quad_steps % 2 == 0 ? quad_steps : quad_steps + 1;
  const Real h = (hi - lo) / n;
  Real acc = w.value(lo) + w.value(hi);
  for (int i = 1; i < n; ++i) acc += w.value(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

Matrix GoldsteinProblem::evolution(Real t, int quad_steps) const {
  const Complex i1(0.0, 1.0);
  const Matrix e_phi = exp_hermitian(s_, i1 * running_integral(phi_, t, quad_steps));
  const Matrix e_eta = exp_hermitian(l_, i1 * running_integral(eta_, t, quad_steps));
  const Matrix e_psi = exp_hermitian(t_, i1 * running_integral(psi_, t, quad_steps));
  return e_psi * e_eta * e_phi;
}

Vector GoldsteinProblem::state(Real t, const Vector& y, int quad_steps) const {
  return evolution(t, quad_steps) * y;
}

TimeDependentGenerator GoldsteinProblem::hamiltonian_family() const {
  const Matrix s = s_, l = l_, t = t_;
  const Weight phi = phi_, eta = eta_, psi = psi_;
  return TimeDependentGenerator(
      [s, l, t, phi, eta, psi](Real time) -> Matrix {
        return -(phi.value(time) * s + eta.value(time) * l + psi.value(time) * t);
      },
      "goldstein", std::make_pair(phi.t_min(), psi.t_max()));
}

std::pair<Matrix, Matrix> duhamel_difference(const Matrix& h_a, const Matrix& h_b, Real r,
                                             int quad_steps) {
  if (!(r > 0.0)) throw ConfigInvalid("duhamel difference needs r > 0");
  const HermitianEig ea = hermitian_eig(h_a);
  const HermitianEig eb = hermitian_eig(h_b);
  const Matrix diff = h_a - h_b;
  const auto exp_a = [&](Real s) { return ea.map([s](Real x) { return std::exp(-s * x); }); };
  const auto exp_b = [&](Real s) { return eb.map([s](Real x) { return std::exp(-s * x); }); };

  const Matrix lhs = exp_a(r);
  Matrix integral = Matrix::Zero(h_a.rows(), h_a.cols());
  const Real h = r / quad_steps;
  for (int i = 0; i <= quad_steps; ++i) {
    const Real s = i * h;
    const Real w = (i == 0 || i == quad_steps) ? 0.5 : 1.0;
    integral += w * (exp_b(s) * diff * exp_a(r - s));
  }
  integral *= h;
  const Matrix rhs = exp_b(r) - integral;
  return {lhs, rhs};
}

Real fit_loglog_slope(const std::vector<Real>& h, const std::vector<Real>& err) {
  const std::size_t n = std::min(h.size(), err.size());
  Real sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0)) continue;
    const Real x = std::log(h[i]);
    const Real y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return 0.0;
  const Real denom = m * sxx - sx * sx;
  return denom == 0.0 ? 0.0 : (m * sxy - sx * sy) / denom;
}

}  // namespace qftlab
