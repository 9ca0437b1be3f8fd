#include "qftlab/harness.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "qftlab/howland.hpp"
#include "qftlab/io.hpp"
#include "qftlab/rng.hpp"

namespace qftlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

static constexpr const char* kVersion = "qftlab 0.1.0";

Real ExperimentConfig::option(const std::string& key, Real fallback) const {
  const auto it = options.find(key);
  return it == options.end() ? fallback : it->second;
}

bool RunReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string RunReport::to_json() const {
  // Hand-assembled so every float is printed with 17 significant digits and
  // the byte stream is reproducible.
  std::ostringstream out;
  out << "{\n";
  out << "  \"schema\": " << schema << ",\n";
  out << "  \"label\": \"" << label << "\",\n";
  out << "  \"config_hash\": \"" << std::hex << config_hash << std::dec << "\",\n";
  out << "  \"seed\": " << seed << ",\n";
  out << "  \"version\": \"" << version << "\",\n";
  out << "  \"checks\": [\n";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& c = checks[i];
    out << "    {\"name\": \"" << c.name << "\", \"value\": " << format_real17(c.value)
        << ", \"tolerance\": " << format_real17(c.tolerance) << ", \"cmp\": \"" << c.cmp
        << "\", \"pass\": " << (c.pass ? "true" : "false") << ", \"detail\": \"" << c.detail
        << "\"}";
    out << (i + 1 == checks.size() ? "\n" : ",\n");
  }
  out << "  ]\n}\n";
  return out.str();
}

namespace {

Real json_real(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigInvalid(path + ": expected a number");
  return j.get<Real>();
}

int json_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigInvalid(path + ": expected an integer");
  return j.get<int>();
}

BumpSpec parse_bump(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigInvalid(path + ": expected an object");
  BumpSpec b;
  for (const auto& [key, value] : j.items()) {
    if (key == "t_center") b.t_center = json_real(value, path + ".t_center");
    else if (key == "t_radius") b.t_radius = json_real(value, path + ".t_radius");
    else if (key == "x_center") b.x_center = json_real(value, path + ".x_center");
    else if (key == "x_radius") b.x_radius = json_real(value, path + ".x_radius");
    else if (key == "amplitude") b.amplitude = json_real(value, path + ".amplitude");
    else if (key == "space_constant") {
      if (!value.is_boolean()) throw ConfigInvalid(path + ".space_constant: expected a boolean");
      b.space_constant = value.get<bool>();
    } else {
      throw ConfigInvalid(path + "." + key + ": unknown field");
    }
  }
  return b;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigInvalid("config: expected a JSON object");

  ExperimentConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "schema") cfg.schema = json_int(value, "schema");
    else if (key == "label") {
      if (!value.is_string()) throw ConfigInvalid("label: expected a string");
      cfg.label = value.get<std::string>();
    } else if (key == "seed") {
      if (!value.is_number_unsigned() && !value.is_number_integer())
        throw ConfigInvalid("seed: expected an integer");
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "truncation") {
      if (!value.is_object()) throw ConfigInvalid("truncation: expected an object");
      for (const auto& [tk, tv] : value.items()) {
        if (tk == "mass") cfg.truncation.mass = json_real(tv, "truncation.mass");
        else if (tk == "box_length") cfg.truncation.box_length = json_real(tv, "truncation.box_length");
        else if (tk == "mode_cutoff") cfg.truncation.mode_cutoff = json_int(tv, "truncation.mode_cutoff");
        else if (tk == "n_max") cfg.truncation.n_max = json_int(tv, "truncation.n_max");
        else if (tk == "x_points") cfg.truncation.x_points = json_int(tv, "truncation.x_points");
        else throw ConfigInvalid("truncation." + tk + ": unknown field");
      }
    } else if (key == "polynomial") {
      if (!value.is_array()) throw ConfigInvalid("polynomial: expected an array of coefficients");
      for (std::size_t i = 0; i < value.size(); ++i)
        cfg.polynomial.push_back(json_real(value[i], "polynomial[" + std::to_string(i) + "]"));
    } else if (key == "bumps") {
      if (!value.is_array()) throw ConfigInvalid("bumps: expected an array");
      for (std::size_t i = 0; i < value.size(); ++i)
        cfg.bumps.push_back(parse_bump(value[i], "bumps[" + std::to_string(i) + "]"));
    } else if (key == "stepper") {
      if (!value.is_object()) throw ConfigInvalid("stepper: expected an object");
      for (const auto& [sk, sv] : value.items()) {
        if (sk == "dt") cfg.scattering.dt = json_real(sv, "stepper.dt");
        else if (sk == "bracket_margin") cfg.scattering.bracket_margin = json_real(sv, "stepper.bracket_margin");
        else if (sk == "tol_cf") cfg.scattering.tol_cf = json_real(sv, "stepper.tol_cf");
        else if (sk == "rule") {
          if (!sv.is_string()) throw ConfigInvalid("stepper.rule: expected a string");
          const std::string rule = sv.get<std::string>();
          if (rule == "midpoint") cfg.scattering.rule = ProductRule::midpoint;
          else if (rule == "left") cfg.scattering.rule = ProductRule::left;
          else throw ConfigInvalid("stepper.rule: must be 'midpoint' or 'left'");
        } else if (sk == "levels") {
          if (!sv.is_array()) throw ConfigInvalid("stepper.levels: expected an array");
          for (std::size_t i = 0; i < sv.size(); ++i)
            cfg.scattering.levels.push_back(json_real(sv[i], "stepper.levels[" + std::to_string(i) + "]"));
        } else {
          throw ConfigInvalid("stepper." + sk + ": unknown field");
        }
      }
    } else if (key == "checks") {
      if (!value.is_array()) throw ConfigInvalid("checks: expected an array of names");
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_string())
          throw ConfigInvalid("checks[" + std::to_string(i) + "]: expected a string");
        cfg.checks.push_back(value[i].get<std::string>());
      }
    } else if (key == "options") {
      if (!value.is_object()) throw ConfigInvalid("options: expected an object");
      for (const auto& [ok, ov] : value.items())
        cfg.options[ok] = json_real(ov, "options." + ok);
    } else if (key == "output_dir") {
      if (!value.is_string()) throw ConfigInvalid("output_dir: expected a string");
      cfg.output_dir = value.get<std::string>();
    } else {
      throw ConfigInvalid(key + ": unknown field");
    }
  }
  cfg.truncation.validate();
  const auto known = registered_checks();
  for (const auto& name : cfg.checks) {
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw ConfigInvalid("checks: unknown check '" + name + "'");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::ostringstream s;
  s << cfg.schema << '|' << cfg.label << '|' << cfg.seed << '|' << cfg.truncation.mass << '|'
    << cfg.truncation.box_length << '|' << cfg.truncation.mode_cutoff << '|'
    << cfg.truncation.n_max << '|' << cfg.truncation.x_points << '|';
  for (Real c : cfg.polynomial) s << format_real17(c) << ',';
  s << '|';
  for (const auto& b : cfg.bumps)
    s << format_real17(b.t_center) << ',' << format_real17(b.t_radius) << ','
      << format_real17(b.x_center) << ',' << format_real17(b.x_radius) << ','
      << format_real17(b.amplitude) << ',' << b.space_constant << ';';
  s << '|' << format_real17(cfg.scattering.dt) << '|' << format_real17(cfg.scattering.bracket_margin)
    << '|' << format_real17(cfg.scattering.tol_cf) << '|'
    << (cfg.scattering.rule == ProductRule::midpoint ? "midpoint" : "left") << '|';
  for (const auto& c : cfg.checks) s << c << ',';
  s << '|';
  for (const auto& [k, v] : cfg.options) s << k << '=' << format_real17(v) << ',';
  return fnv1a(s.str());
}

// ---------------------------------------------------------------------------
// Check implementations.

namespace {

struct CheckEnv {
  const ExperimentConfig& cfg;
  std::string out_dir;

  OccupationBasis basis;
  LocalizationFunction g;

  std::mutex memo_mutex;
  std::optional<ScatteringOperator> primary_s;

  explicit CheckEnv(const ExperimentConfig& c, std::string out)
      : cfg(c),
        out_dir(std::move(out)),
        basis(build_basis(c.truncation)),
        g(c.bumps, c.truncation) {}

  Rng check_rng(const std::string& check_name) const {
    return Rng(cfg.seed ^ fnv1a(check_name));
  }

  const ScatteringOperator& s_of_g() {
    std::lock_guard lock(memo_mutex);
    if (!primary_s)
      primary_s = local_s_operator(cfg.truncation, basis, g, cfg.polynomial, cfg.scattering);
    return *primary_s;
  }
};

CheckRecord record_le(const std::string& name, Real value, Real tol, std::string detail = "") {
  return CheckRecord{name, value, tol, value <= tol, std::move(detail), "le"};
}

CheckRecord record_ge(const std::string& name, Real value, Real tol, std::string detail = "") {
  return CheckRecord{name, value, tol, value >= tol, std::move(detail), "ge"};
}

CheckRecord record_report(const std::string& name, Real value, std::string detail = "") {
  return CheckRecord{name, value, 0.0, true, std::move(detail), "none"};
}

using CheckFn = std::function<std::vector<CheckRecord>(CheckEnv&)>;

std::vector<CheckRecord> check_free_theory(CheckEnv& env) {
  const LocalizationFunction zero;
  const ScatteringOperator s = local_s_operator(env.cfg.truncation, env.basis, zero,
                                                env.cfg.polynomial, env.cfg.scattering);
  const Index dim = env.basis.size();
  return {record_le("free_theory_trivial", (s.s - Matrix::Identity(dim, dim)).norm(), 1e-12)};
}

std::vector<CheckRecord> check_s_unitarity(CheckEnv& env) {
  const auto& s = env.s_of_g();
  dump_matrix(env.out_dir + "/s_of_g.qlmd", s.s, env.basis.hash());
  return {record_le("s_unitarity", s.unitarity_deviation, 1e-10,
                    "scheme=" + s.scheme)};
}

std::vector<CheckRecord> check_s_adjoint(CheckEnv& env) {
  const auto& s = env.s_of_g();
  const Index dim = env.basis.size();
  const Matrix inv = s.s.partialPivLu().solve(Matrix::Identity(dim, dim));
  return {record_le("s_adjoint_inverse", (s.s.adjoint() - inv).norm(), 1e-10)};
}

std::vector<CheckRecord> check_bracket_independence(CheckEnv& env) {
  const auto& s = env.s_of_g();
  const auto wide = std::make_pair(s.sigma - 1.0, s.tau + 1.0);
  ScatteringConfig cfg2 = env.cfg.scattering;
  const ScatteringOperator s2 =
      local_s_operator(env.cfg.truncation, env.basis, env.g, env.cfg.polynomial, cfg2, wide);
  return {record_le("s_bracket_independence", (s.s - s2.s).norm(), 1e-12)};
}

std::vector<CheckRecord> check_wick_crosscheck(CheckEnv& env) {
  // Normal-ordered :phi^p: against the contraction-subtraction formula
  // sum_j (-1)^j p! / ((p-2j)! j! 2^j) c^j phi^(p-2j) on columns deep enough
  // that no intermediate state is clipped.
  const auto& params = env.cfg.truncation;
  int p = 0;
  for (int i = static_cast<int>(env.cfg.polynomial.size()) - 1; i >= 1; --i) {
    if (env.cfg.polynomial[static_cast<std::size_t>(i)] != 0.0) {
      p = i;
      break;
    }
  }
  if (p < 2) p = 2;
  const Real x = params.site(params.x_points / 3);
  const Matrix wick = wick_power(params, env.basis, p, x).matrix;
  const Matrix phi = field_op(params, env.basis, x).matrix;
  const Real c = wick_constant(params);
  const Index dim = env.basis.size();
  Matrix subtraction = Matrix::Zero(dim, dim);
  Real factorial_p = 1.0;
  for (int i = 2; i <= p; ++i) factorial_p *= i;
  for (int j = 0; 2 * j <= p; ++j) {
    Real denom = 1.0;
    for (int i = 2; i <= p - 2 * j; ++i) denom *= i;
    Real jfact = 1.0;
    for (int i = 2; i <= j; ++i) jfact *= i;
    const Real coeff = ((j % 2 == 0) ? 1.0 : -1.0) * factorial_p /
                       (denom * jfact * std::pow(2.0, j)) * std::pow(c, j);
    Matrix phi_pow = Matrix::Identity(dim, dim);
    for (int i = 0; i < p - 2 * j; ++i) phi_pow = phi * phi_pow;
    subtraction += coeff * phi_pow;
  }
  Real worst = 0.0;
  for (Index col = 0; col < dim; ++col) {
    if (env.basis.total(col) + p > env.basis.n_max()) continue;
    worst = std::max(worst, (wick.col(col) - subtraction.col(col)).cwiseAbs().maxCoeff());
  }
  return {record_le("wick_crosscheck", worst, 1e-10, "p=" + std::to_string(p))};
}

std::vector<CheckRecord> check_translation_invariance(CheckEnv& env) {
  const auto& params = env.cfg.truncation;
  const Real dx = params.dx();
  const Real t = env.g.is_zero() ? 0.0 : 0.5 * (env.g.t_min() + env.g.t_max());
  const Matrix v = interaction_op(params, env.basis, env.g, env.cfg.polynomial, t).matrix;
  LocalizationFunction shifted = env.g.shifted(0.0, dx);
  const Matrix v_shift =
      interaction_op(params, env.basis, shifted, env.cfg.polynomial, t).matrix;
  const Matrix trans = translation_unitary(params, env.basis, dx);
  const Real dev = (v_shift - trans * v * trans.adjoint()).cwiseAbs().maxCoeff();
  return {record_le("translation_invariance", dev, 1e-10)};
}

std::vector<CheckRecord> check_vacuum_wick(CheckEnv& env) {
  const auto& params = env.cfg.truncation;
  Real worst = 0.0;
  const Real x = params.site(1);
  const int top = std::max(4, static_cast<int>(env.cfg.polynomial.size()));
  for (int p = 1; p <= top; ++p) {
    const Matrix w = wick_power(params, env.basis, p, x).matrix;
    worst = std::max(worst, std::abs(w(0, 0)));
  }
  return {record_le("vacuum_wick_expectation", worst, 1e-12)};
}

std::vector<CheckRecord> check_n_bound(CheckEnv& env) {
  // Balanced monomials with p/2 creators and annihilators, weights (p, p).
  TruncationParams params;
  params.mass = 1.0;
  params.box_length = 2.0 * M_PI;
  params.mode_cutoff = 1;
  params.n_max = 4;
  params.x_points = 8;
  const OccupationBasis basis = build_basis(params);
  Rng rng = env.check_rng("n_bound");
  Real worst_ratio = 0.0;
  const int kernels = static_cast<int>(env.cfg.option("n_bound_kernels", 10));
  for (int p : {2, 4}) {
    const int half = p / 2;
    for (int trial = 0; trial < kernels; ++trial) {
      WickKernel kern;
      kern.creators = half;
      kern.annihilators = half;
      kern.modes = params.modes();
      kern.values.assign(kern.tuple_count(), Complex{0, 0});
      for (auto& v : kern.values) v = rng.complex_normal();
      // Symmetrize within the creator and annihilator blocks.
      WickKernel sym = kern;
      std::vector<int> tuple(static_cast<std::size_t>(p), 0);
      for (std::size_t flat = 0; flat < kern.values.size(); ++flat) {
        std::size_t rest = flat;
        for (int i = p - 1; i >= 0; --i) {
          tuple[static_cast<std::size_t>(i)] = static_cast<int>(rest % kern.modes);
          rest /= kern.modes;
        }
        std::vector<int> sorted = tuple;
        std::sort(sorted.begin(), sorted.begin() + half);
        std::sort(sorted.begin() + half, sorted.end());
        sym.values[flat] = kern.at(sorted);
      }
      const Matrix w = wick_monomial_op(basis, sym);
      const NBoundReport rep = verify_n_bound(basis, w, sym, p, p);
      if (rep.kernel_norm > 0.0)
        worst_ratio = std::max(worst_ratio, rep.weighted_norm / rep.kernel_norm);
    }
  }
  return {record_le("n_bound", worst_ratio, 1.0 + 1e-10)};
}

std::vector<CheckRecord> check_semiboundedness(CheckEnv& env) {
  const auto& params = env.cfg.truncation;
  const Real t = env.g.is_zero() ? 0.0 : env.g.bumps().front().t_center;
  const auto rows = semiboundedness_report(params, env.basis, env.g, env.cfg.polynomial, t);
  CsvWriter csv(env.out_dir + "/semiboundedness.csv");
  csv.header({"field_cutoff", "wick_constant", "min_eigenvalue"});
  for (const auto& r : rows)
    csv.row({static_cast<Real>(r.field_cutoff), r.wick_const, r.min_eigenvalue});
  return {record_report("semiboundedness_table", rows.back().min_eigenvalue,
                        "rows=" + std::to_string(rows.size()))};
}

std::vector<CheckRecord> check_kato_stability(CheckEnv& env) {
  auto assembler = std::make_shared<InteractionAssembler>(env.cfg.truncation, env.basis, env.g,
                                                          env.cfg.polynomial);
  const Matrix h0 = free_hamiltonian(env.cfg.truncation, env.basis).matrix;
  TimeDependentGenerator gen(
      [assembler, h0](Real t) { return Matrix(h0 + assembler->at_time(t)); }, "H0+V");
  std::vector<Real> times;
  const Real lo = env.g.is_zero() ? 0.0 : env.g.t_min();
  const Real hi = env.g.is_zero() ? 1.0 : env.g.t_max();
  for (int i = 0; i < 6; ++i) times.push_back(lo + (hi - lo) * i / 5.0);
  const StabilityReport rep = kato_stability_check(gen, times, 1.0, 1.0, 0.0);
  Real excess = 0.0;
  for (std::size_t i = 0; i < rep.product_norms.size(); ++i)
    excess = std::max(excess, rep.product_norms[i] - rep.bounds[i]);
  return {record_le("kato_stability", excess, 1e-9,
                    rep.pass ? "contractive resolvent products" : "bound exceeded")};
}

std::vector<CheckRecord> check_sohr_timeindependent(CheckEnv& env) {
  const Matrix h0 = free_hamiltonian(env.cfg.truncation, env.basis).matrix;
  TimeDependentGenerator gen([h0](Real) { return h0; }, "H0");
  const Real beta = env.cfg.option("sohr_beta", 2.0);
  const SohrReport rep = sohr_condition_check(gen, beta, 0.0, -0.5, 0.5, 9);
  return {record_ge("sohr_timeindependent", rep.min_value, -1e-8)};
}

std::vector<CheckRecord> check_sohr_gaussian(CheckEnv& env) {
  // Factorized coupling u(t) W with a Gaussian time profile satisfies
  // k u - u'/2 >= 0 on |t - t_c| <= r for k = r / alpha^2.
  auto assembler = std::make_shared<InteractionAssembler>(env.cfg.truncation, env.basis, env.g,
                                                          env.cfg.polynomial);
  const Real t_c = env.g.is_zero() ? 0.0 : env.g.bumps().front().t_center;
  const Matrix w = assembler->at_time(t_c);
  const Matrix h0 = free_hamiltonian(env.cfg.truncation, env.basis).matrix;
  const Real alpha = env.cfg.option("sohr_gauss_alpha", 0.5);
  const Real r = env.cfg.option("sohr_gauss_halfwidth", 0.5);
  TimeDependentGenerator gen(
      [h0, w, t_c, alpha](Real t) {
        const Real u = std::exp(-(t - t_c) * (t - t_c) / (alpha * alpha));
        return Matrix(h0 + u * w);
      },
      "H0+gauss*W");
  const Real beta = env.cfg.option("sohr_beta", 2.0);
  const Real k = r / (alpha * alpha);
  const SohrReport rep = sohr_condition_check(gen, beta, k, t_c - r, t_c + r, 15);
  return {record_ge("sohr_gaussian_profile", rep.min_value, -1e-8,
                    "k=" + format_real17(k))};
}

std::vector<CheckRecord> check_sohr_negative(CheckEnv& env) {
  // Compactly supported bump: near the decaying edge the derivative term wins.
  const Real scale = env.cfg.option("sohr_neg_amp_scale", 60.0);
  std::vector<BumpSpec> scaled = env.g.bumps();
  for (auto& b : scaled) b.amplitude *= scale;
  LocalizationFunction g_big(scaled, env.cfg.truncation);
  auto assembler = std::make_shared<InteractionAssembler>(env.cfg.truncation, env.basis, g_big,
                                                          env.cfg.polynomial);
  const Matrix h0 = free_hamiltonian(env.cfg.truncation, env.basis).matrix;
  TimeDependentGenerator gen(
      [assembler, h0](Real t) { return Matrix(h0 + assembler->at_time(t)); }, "H0+V");
  const Real beta = env.cfg.option("sohr_beta", 2.0);
  const Real k = env.cfg.option("sohr_k", 0.5);
  const SohrReport rep =
      sohr_condition_check(gen, beta, k, g_big.t_min(), g_big.t_max(), 25);
  const Real margin = env.cfg.option("sohr_violation_margin", 1e-6);
  return {record_le("sohr_negative_control", rep.min_value, -margin,
                    "argmin_t=" + format_real17(rep.argmin_time))};
}

std::vector<CheckRecord> check_causal(CheckEnv& env) {
  Rng rng = env.check_rng("causal_factorization");
  const auto& params = env.cfg.truncation;
  ScatteringConfig cfg = env.cfg.scattering;
  cfg.dt = env.cfg.option("causal_dt", 4e-3);
  const int geometries = static_cast<int>(env.cfg.option("causal_geometries", 5));
  const Real amp = env.g.is_zero() ? 0.05 : env.g.bumps().front().amplitude;
  Real worst = 0.0;
  for (int trial = 0; trial < geometries; ++trial) {
    const Real margin = 0.17;
    BumpSpec gb, fb, hb;
    gb.t_center = -0.45;
    fb.t_center = 0.45;
    gb.t_radius = fb.t_radius = 0.45 - margin;
    hb.t_center = rng.uniform(-0.25, 0.25);
    hb.t_radius = 0.4;
    const Real l = params.box_length;
    gb.x_center = rng.uniform(0.3 * l, 0.7 * l);
    fb.x_center = rng.uniform(0.3 * l, 0.7 * l);
    hb.x_center = rng.uniform(0.3 * l, 0.7 * l);
    gb.x_radius = fb.x_radius = hb.x_radius = 0.25 * l;
    gb.amplitude = amp * rng.uniform(0.5, 1.0);
    fb.amplitude = amp * rng.uniform(0.5, 1.0);
    hb.amplitude = amp * rng.uniform(0.5, 1.0);
    const LocalizationFunction f({fb}, params), h({hb}, params), g({gb}, params);
    const auto rep = causal_factorization_check(params, env.basis, f, h, g, env.cfg.polynomial, cfg);
    worst = std::max(worst, rep.deviation);
  }
  return {record_le("causal_factorization", worst, cfg.tol_cf,
                    "geometries=" + std::to_string(geometries))};
}

std::vector<CheckRecord> check_covariance_spatial(CheckEnv& env) {
  ScatteringConfig cfg = env.cfg.scattering;
  cfg.dt = env.cfg.option("cov_dt", 2e-3);
  const auto rep = covariance_check(env.cfg.truncation, env.basis, env.g, env.cfg.polynomial, 0.0,
                                    env.cfg.truncation.dx(), cfg, 1e-10);
  return {record_le("covariance_spatial", rep.deviation, rep.tolerance)};
}

std::vector<CheckRecord> check_covariance_time(CheckEnv& env) {
  ScatteringConfig cfg = env.cfg.scattering;
  cfg.dt = env.cfg.option("cov_dt", 2e-3);
  const Real a_t = cfg.dt * std::round(env.cfg.option("cov_time_steps", 40));
  const auto rep = covariance_check(env.cfg.truncation, env.basis, env.g, env.cfg.polynomial, a_t,
                                    0.0, cfg, cfg.tol_cf);
  return {record_le("covariance_time", rep.deviation, rep.tolerance)};
}

std::vector<CheckRecord> check_group_composition(CheckEnv& env) {
  // Split g at a zero slice of its time support and rebuild S(g) causally.
  const auto& params = env.cfg.truncation;
  ScatteringConfig cfg = env.cfg.scattering;
  cfg.dt = env.cfg.option("causal_dt", 4e-3);
  const Real amp = env.g.is_zero() ? 0.05 : env.g.bumps().front().amplitude;
  BumpSpec early, late;
  early.t_center = -0.4;
  late.t_center = 0.4;
  early.t_radius = late.t_radius = 0.3;
  early.x_center = late.x_center = 0.5 * params.box_length;
  early.x_radius = late.x_radius = 0.25 * params.box_length;
  early.amplitude = late.amplitude = amp;
  const LocalizationFunction g2({early, late}, params);
  const Real cut = 0.0;  // zero slice between the two bumps
  const LocalizationFunction g_early = g2.restricted_to_time(-1.0, cut);
  const LocalizationFunction g_late = g2.restricted_to_time(cut, 1.0);
  const auto bracket = std::make_pair(g2.t_min() - cfg.bracket_margin,
                                      g2.t_max() + cfg.bracket_margin);
  const Matrix s_full = local_s_operator(params, env.basis, g_early + g_late, env.cfg.polynomial,
                                         cfg, bracket)
                            .s;
  const Matrix s_early =
      local_s_operator(params, env.basis, g_early, env.cfg.polynomial, cfg, bracket).s;
  const Matrix s_late =
      local_s_operator(params, env.basis, g_late, env.cfg.polynomial, cfg, bracket).s;
  return {record_le("group_composition", (s_full - s_late * s_early).norm(), cfg.tol_cf)};
}

std::vector<CheckRecord> check_relative_s(CheckEnv& env) {
  const auto& params = env.cfg.truncation;
  ScatteringConfig cfg = env.cfg.scattering;
  cfg.dt = env.cfg.option("causal_dt", 4e-3);
  const LocalizationFunction zero;
  const Index dim = env.basis.size();
  // S_g(0) = 1 and S_0(f) = S(f).
  const Matrix rel_zero =
      relative_s_operator(params, env.basis, env.g, zero, env.cfg.polynomial, cfg);
  const Matrix rel_from_zero =
      relative_s_operator(params, env.basis, zero, env.g, env.cfg.polynomial, cfg);
  const Matrix s_plain = local_s_operator(params, env.basis, env.g, env.cfg.polynomial, cfg).s;
  const Real dev = std::max((rel_zero - Matrix::Identity(dim, dim)).norm(),
                            (rel_from_zero - s_plain).norm());
  return {record_le("relative_s_axioms", dev, 1e-10)};
}

std::vector<CheckRecord> check_dyson(CheckEnv& env) {
  ScatteringConfig cfg = env.cfg.scattering;
  cfg.dt = env.cfg.option("dyson_dt", 1e-3);
  std::vector<Real> amps = {env.cfg.option("dyson_amp1", 0.02), env.cfg.option("dyson_amp2", 0.04),
                            env.cfg.option("dyson_amp3", 0.08)};
  const auto rep = dyson_remainder_study(env.cfg.truncation, env.basis, env.g,
                                         env.cfg.polynomial, amps, 2, cfg);
  CsvWriter csv(env.out_dir + "/dyson_remainder.csv");
  csv.header({"amplitude", "remainder"});
  for (std::size_t i = 0; i < amps.size(); ++i) csv.row({amps[i], rep.remainders[i]});
  std::string detail = "remainders=";
  for (Real r : rep.remainders) detail += format_real17(r) + ";";
  return {record_ge("dyson_remainder", rep.slope, 2.7, detail)};
}

std::vector<CheckRecord> check_scheme_orders(CheckEnv& env, bool midpoint) {
  auto assembler = std::make_shared<InteractionAssembler>(env.cfg.truncation, env.basis, env.g,
                                                          env.cfg.polynomial);
  const Matrix h0 = free_hamiltonian(env.cfg.truncation, env.basis).matrix;
  TimeDependentGenerator gen(
      [assembler, h0](Real t) { return Matrix(h0 + assembler->at_time(t)); }, "H0+V");
  const Real lo = env.g.is_zero() ? 0.0 : env.g.t_min() - 0.1;
  const Real hi = env.g.is_zero() ? 1.0 : env.g.t_max() + 0.1;
  const std::vector<int> steps = {128, 256, 512};
  const TimeGrid ref_grid{lo, hi, steps.back() * 16};
  const Matrix ref = exp_product_propagator(gen, ref_grid,
                                            ExpProductOptions{ProductRule::midpoint,
                                                              ref_grid.n_steps, {}, -1.0})
                         .final();
  std::vector<Real> hs, errs;
  for (int n : steps) {
    const TimeGrid grid{lo, hi, n};
    Matrix u;
    if (midpoint) {
      u = exp_product_propagator(gen, grid,
                                 ExpProductOptions{ProductRule::midpoint, n, {}, -1.0})
              .final();
    } else {
      u = implicit_resolvent_propagator(gen, grid, n).final();
    }
    hs.push_back(grid.dt());
    errs.push_back((u - ref).norm());
  }
  const Real slope = fit_loglog_slope(hs, errs);
  const Real expected = midpoint ? 2.0 : 1.0;
  const std::string name = midpoint ? "scheme_order_midpoint" : "scheme_order_implicit";
  return {record_le(name, std::abs(slope - expected), 0.2, "slope=" + format_real17(slope))};
}

std::vector<CheckRecord> check_approx_uniqueness(CheckEnv& env) {
  // Stronger coupling than the base configuration, so that several cutoff
  // levels genuinely clip before saturation.
  const Real amp_scale = env.cfg.option("uniq_amp_scale", 20.0);
  std::vector<BumpSpec> scaled = env.g.bumps();
  for (auto& b : scaled) b.amplitude *= amp_scale;
  const LocalizationFunction g_strong(scaled, env.cfg.truncation);
  const TimeDependentGenerator gen =
      dirac_interaction_generator(env.cfg.truncation, env.basis, g_strong, env.cfg.polynomial);
  const Real lo = g_strong.is_zero() ? 0.0 : g_strong.t_min() - 0.1;
  const Real hi = g_strong.is_zero() ? 1.0 : g_strong.t_max() + 0.1;
  const Real dt = env.cfg.option("uniq_dt", 4e-3);
  const TimeGrid grid{lo, hi, std::max(1, static_cast<int>(std::ceil((hi - lo) / dt)))};

  // Spectral-cutoff ladder in unit steps.
  Real rho_probe = 0.0;
  for (int s = 0; s <= 32; ++s) {
    const Real t = lo + (hi - lo) * s / 32.0;
    if (!gen.vanishes_at(t)) rho_probe = std::max(rho_probe, gen.eig(t)->spectral_radius());
  }
  ApproximationScheme cutoff;
  cutoff.kind = ApproximationScheme::Kind::spectral_cutoff;
  for (Real level = 1.0; level <= std::ceil(rho_probe) + 2.0; level += 1.0)
    cutoff.levels.push_back(level);
  ApproximativeOptions opts;
  opts.stride = std::max(1, grid.n_steps / 64);
  ApproxDiagnostics cut_diag;
  const PropagatorTable u_cut = approximative_solution(gen, grid, cutoff, opts, &cut_diag);

  ApproximationScheme yosida;
  yosida.kind = ApproximationScheme::Kind::yosida;
  for (Real level = 8.0; level <= env.cfg.option("yosida_top", 4e10); level *= 4.0)
    yosida.levels.push_back(level);
  ApproxDiagnostics yos_diag;
  const PropagatorTable u_yos = approximative_solution(gen, grid, yosida, opts, &yos_diag);

  Real rho_max = 0.0;
  for (const auto& lr : cut_diag.levels) rho_max = std::max(rho_max, lr.max_spectral_radius);
  const Real expected_level = std::ceil(rho_max);

  {
    CsvWriter csv(env.out_dir + "/approx_level_diffs.csv");
    csv.header({"level", "node", "deviation"});
    for (std::size_t l = 0; l < cut_diag.node_diffs.size(); ++l)
      for (std::size_t s = 0; s < cut_diag.node_diffs[l].size(); ++s)
        csv.row({cutoff.levels[l], cut_diag.node_times[s], cut_diag.node_diffs[l][s]});
  }

  std::vector<CheckRecord> out;
  out.push_back(record_le("approx_uniqueness", (u_cut.final() - u_yos.final()).norm(), 1e-8,
                          "cutoff_sat=" + format_real17(cut_diag.saturation_level) +
                              " yosida_sat=" + format_real17(yos_diag.saturation_level)));
  out.push_back(record_le("approx_saturation_level",
                          std::abs(cut_diag.saturation_level - expected_level), 1.0 + 1e-12,
                          "rho_max=" + format_real17(rho_max)));
  return out;
}

std::vector<CheckRecord> check_midpoint_step_doubling(CheckEnv& env) {
  // ||U_dt - U_{dt/2}|| at the final time; scales like dt^2 under a dt sweep.
  auto assembler = std::make_shared<InteractionAssembler>(env.cfg.truncation, env.basis, env.g,
                                                          env.cfg.polynomial);
  const Matrix h0 = free_hamiltonian(env.cfg.truncation, env.basis).matrix;
  TimeDependentGenerator gen(
      [assembler, h0](Real t) { return Matrix(h0 + assembler->at_time(t)); }, "H0+V");
  const Real lo = env.g.is_zero() ? 0.0 : env.g.t_min() - 0.1;
  const Real hi = env.g.is_zero() ? 1.0 : env.g.t_max() + 0.1;
  const Real dt = env.cfg.scattering.dt;
  const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / dt)));
  const Matrix u1 =
      exp_product_propagator(gen, TimeGrid{lo, hi, n},
                             ExpProductOptions{ProductRule::midpoint, n, {}, -1.0})
          .final();
  const Matrix u2 =
      exp_product_propagator(gen, TimeGrid{lo, hi, 2 * n},
                             ExpProductOptions{ProductRule::midpoint, 2 * n, {}, -1.0})
          .final();
  return {record_report("midpoint_step_doubling", (u1 - u2).norm(),
                        "n=" + std::to_string(n))};
}

std::vector<CheckRecord> check_dyson_single(CheckEnv& env) {
  // ||S(g) - S_2(g)|| at the configured amplitude; cubic under an amplitude sweep.
  ScatteringConfig cfg = env.cfg.scattering;
  cfg.dt = env.cfg.option("dyson_dt", 2e-3);
  const Matrix s = local_s_operator(env.cfg.truncation, env.basis, env.g, env.cfg.polynomial,
                                    cfg)
                       .s;
  const Matrix s2 = dyson_series(env.cfg.truncation, env.basis, env.g, env.cfg.polynomial, 2, cfg);
  return {record_report("dyson_remainder_single", (s - s2).norm())};
}

std::vector<CheckRecord> check_goldstein(CheckEnv& env) {
  Rng rng = env.check_rng("goldstein");
  const int triples = static_cast<int>(env.cfg.option("goldstein_triples", 10));
  const Real dt = env.cfg.option("goldstein_dt", 1e-3);
  const Real norm = env.cfg.option("goldstein_norm", 0.04);
  Real worst = 0.0;
  for (int trial = 0; trial < triples; ++trial) {
    const Matrix s = rng.hermitian_with_norm(4, norm);
    const Matrix l = rng.hermitian_with_norm(4, norm);
    const Matrix t = rng.hermitian_with_norm(4, norm);
    const GoldsteinProblem prob(s, l, t, {0.5, 0.4, 0.5}, {1.5, 0.4, 0.5}, {2.5, 0.4, 0.5});
    const TimeDependentGenerator gen = prob.hamiltonian_family();
    const TimeGrid grid{0.0, 3.0, static_cast<int>(std::round(3.0 / dt))};
    const PropagatorTable table =
        exp_product_propagator(gen, grid, ExpProductOptions{ProductRule::midpoint,
                                                            grid.n_steps / 4, {}, -1.0});
    for (int s_idx = 1; s_idx < table.stored_count(); ++s_idx) {
      const Real tt = table.node_time(s_idx);
      worst = std::max(worst, (table.from_start(s_idx) - prob.evolution(tt)).norm());
    }
  }
  return {record_le("goldstein_match", worst, 1e-8, "triples=" + std::to_string(triples))};
}

std::vector<CheckRecord> check_duhamel(CheckEnv& env) {
  TruncationParams params;
  params.mass = 1.0;
  params.box_length = 2.0 * M_PI;
  params.mode_cutoff = 2;
  params.n_max = 3;
  params.x_points = 12;
  const OccupationBasis basis = build_basis(params);
  BumpSpec b;
  b.t_center = 0.0;
  b.t_radius = 0.5;
  b.x_center = 0.5 * params.box_length;
  b.x_radius = 0.3 * params.box_length;
  b.amplitude = env.cfg.option("duhamel_amplitude", 0.1);
  const LocalizationFunction g({b}, params);
  Polynomial quartic(5, 0.0);
  quartic[4] = 1.0;
  const Matrix h0 = free_hamiltonian(params, basis).matrix;
  const Matrix va = interaction_op(params, basis, g, quartic, 0.0, 1).matrix;
  const Matrix vb = interaction_op(params, basis, g, quartic, 0.0, 2).matrix;
  const auto [lhs, rhs] = duhamel_difference(h0 + va, h0 + vb, 0.1, 200);
  return {record_le("duhamel_cutoff", (lhs - rhs).norm(), 1e-6)};
}

std::vector<CheckRecord> check_bogoliubov(CheckEnv& env) {
  const Real lambda = env.cfg.option("bogo_lambda", 0.1);
  const Real t_radius = env.cfg.option("bogo_t_radius", 0.8);
  ScatteringConfig cfg = env.cfg.scattering;
  cfg.dt = env.cfg.option("bogo_dt", 4e-3);

  BumpSpec vb;
  vb.t_center = 0.0;
  vb.t_radius = t_radius;
  vb.amplitude = 1.0;
  vb.space_constant = true;

  const auto eps_for = [&](int n_max) -> Real {
    TruncationParams params = env.cfg.truncation;
    params.n_max = n_max;
    const OccupationBasis basis = build_basis(params);
    const LocalizationFunction v({vb}, params);
    Polynomial quad(3, 0.0);
    quad[2] = 0.5 * lambda;  // (lambda/2) v(t) :phi^2:
    const ScatteringOperator s = local_s_operator(params, basis, v, quad, cfg);
    const auto profile = [vb](Real t) { return vb.value(t, 0.0); };
    const QuadraticOracle oracle =
        quadratic_oracle(params, profile, lambda, s.sigma, s.tau,
                         static_cast<int>(env.cfg.option("bogo_rk_steps", 40000)));
    Real eps = 0.0;
    std::vector<Index> one_rows;
    for (int j = -params.mode_cutoff; j <= params.mode_cutoff; ++j) {
      std::vector<int> occ(static_cast<std::size_t>(params.modes()), 0);
      occ[static_cast<std::size_t>(basis.mode_column(j))] = 1;
      one_rows.push_back(basis.index_of(occ));
    }
    for (int j = 0; j <= params.mode_cutoff; ++j) {
      const auto& mode = oracle.sectors[static_cast<std::size_t>(j)];
      if (mode.degenerate) continue;
      std::vector<int> occ(static_cast<std::size_t>(params.modes()), 0);
      occ[static_cast<std::size_t>(basis.mode_column(j))] = 1;
      const Index row = basis.index_of(occ);
      const Complex measured = s.s(row, row);
      eps = std::max(eps, std::abs(measured - oracle.one_particle_element(j)));
      // Pair-creation amplitude <(j,-j)|S|Omega>.
      std::vector<int> pair_occ(static_cast<std::size_t>(params.modes()), 0);
      if (j == 0) {
        pair_occ[static_cast<std::size_t>(basis.mode_column(0))] = 2;
      } else {
        pair_occ[static_cast<std::size_t>(basis.mode_column(j))] = 1;
        pair_occ[static_cast<std::size_t>(basis.mode_column(-j))] = 1;
      }
      const Index pair_row = basis.index_of(pair_occ);
      eps = std::max(eps, std::abs(s.s(pair_row, 0) - oracle.pair_creation_element(j)));
    }
    // Off-diagonal one-particle elements are predicted to vanish.
    for (Index r : one_rows)
      for (Index c : one_rows)
        if (r != c) eps = std::max(eps, std::abs(s.s(r, c)));
    return eps;
  };

  const Real eps4 = eps_for(4);
  const Real eps8 = eps_for(8);
  const Real ratio = eps8 > 0.0 ? eps4 / eps8 : std::numeric_limits<Real>::infinity();
  std::vector<CheckRecord> out;
  out.push_back(record_report("bogoliubov_eps_nmax4", eps4));
  out.push_back(record_report("bogoliubov_eps_nmax8", eps8));
  out.push_back(record_ge("bogoliubov_shrink", ratio, 4.0,
                          "eps4=" + format_real17(eps4) + " eps8=" + format_real17(eps8)));
  return out;
}

struct HowlandSetup {
  std::shared_ptr<PropagatorTable> table;
  FunctionSpaceGrid grid;
  TimeDependentGenerator gen;
};

HowlandSetup make_howland_setup(CheckEnv& env, int n_t) {
  auto assembler = std::make_shared<InteractionAssembler>(env.cfg.truncation, env.basis, env.g,
                                                          env.cfg.polynomial);
  const Matrix h0 = free_hamiltonian(env.cfg.truncation, env.basis).matrix;
  TimeDependentGenerator gen(
      [assembler, h0](Real t) { return Matrix(h0 + assembler->at_time(t)); }, "H0+V");
  const Real lo = env.g.is_zero() ? 0.0 : env.g.t_min() - 0.1;
  const Real hi = env.g.is_zero() ? 1.0 : env.g.t_max() + 0.1;
  const TimeGrid tg{lo, hi, n_t};
  auto table = std::make_shared<PropagatorTable>(
      exp_product_propagator(gen, tg, ExpProductOptions{ProductRule::midpoint, 1, {}, -1.0}));
  FunctionSpaceGrid grid{lo, hi, n_t, env.basis.size()};
  return HowlandSetup{std::move(table), grid, std::move(gen)};
}

std::vector<CheckRecord> check_howland_semigroup(CheckEnv& env) {
  Rng rng = env.check_rng("howland_semigroup");
  HowlandSetup setup = make_howland_setup(env, static_cast<int>(env.cfg.option("howland_nt", 24)));
  const auto t2 = lift(setup.table, setup.grid, 2 * setup.grid.dt());
  const auto t3 = lift(setup.table, setup.grid, 3 * setup.grid.dt());
  const auto t5 = lift(setup.table, setup.grid, 5 * setup.grid.dt());
  Real worst = 0.0;
  for (int p = 0; p < 6; ++p) {
    const Vector f = rng.unit_vector(setup.grid.flat_size());
    worst = std::max(worst, (t2.apply(t3.apply(f)) - t5.apply(f)).norm());
  }
  return {record_le("howland_semigroup_law", worst, 1e-12)};
}

std::vector<CheckRecord> check_howland_mult(CheckEnv& env) {
  Rng rng = env.check_rng("howland_mult");
  HowlandSetup setup = make_howland_setup(env, static_cast<int>(env.cfg.option("howland_nt", 24)));
  const auto op = lift(setup.table, setup.grid, 3 * setup.grid.dt());
  RealVector phi(setup.grid.n_t);
  for (int i = 0; i < setup.grid.n_t; ++i) {
    const Real t = setup.grid.node(i);
    const Real mid = 0.5 * (setup.grid.a + setup.grid.b);
    const Real width = 0.35 * (setup.grid.b - setup.grid.a);
    phi(i) = 1.0 + mollifier((t - mid) / width);
  }
  const auto rep = multiplication_commutation_check(op, phi, rng, 8, 1e-12);
  return {record_le("howland_mult_commutation", rep.max_deviation, 1e-12)};
}

std::vector<CheckRecord> check_howland_norm(CheckEnv& env) {
  Rng rng = env.check_rng("howland_norm");
  HowlandSetup setup = make_howland_setup(env, static_cast<int>(env.cfg.option("howland_nt", 24)));
  const auto op = lift(setup.table, setup.grid, 2 * setup.grid.dt());
  const auto rep = semigroup_norm_check(op, rng, setup.grid.dt());
  return {record_le("howland_norm_identity", rep.rel_gap, setup.grid.dt(),
                    "T_norm=" + format_real17(rep.op_norm) +
                        " sup_pairs=" + format_real17(rep.sup_pair_norm))};
}

std::vector<CheckRecord> check_howland_resolvent(CheckEnv& env) {
  Rng rng = env.check_rng("howland_resolvent");
  const int base_nt = static_cast<int>(env.cfg.option("howland_nt", 24));
  const Complex lambda(1.0, 0.0);
  const auto residual_at = [&](int n_t) {
    HowlandSetup setup = make_howland_setup(env, n_t);
    Rng local = rng;  // same probes for both resolutions
    const auto rep =
        generator_consistency_check(*setup.table, setup.gen, setup.grid, lambda, local, 4);
    return rep.max_rel_residual;
  };
  const Real r1 = residual_at(base_nt);
  const Real r2 = residual_at(2 * base_nt);
  const Real ratio = r2 > 0.0 ? r1 / r2 : std::numeric_limits<Real>::infinity();
  return {record_le("howland_resolvent_residual", std::abs(ratio - 2.0), 0.5,
                    "r_dt=" + format_real17(r1) + " r_dt/2=" + format_real17(r2))};
}

std::vector<CheckRecord> check_howland_weak(CheckEnv& env) {
  Rng rng = env.check_rng("howland_weak");
  const int base_nt = static_cast<int>(env.cfg.option("howland_nt", 24));
  const auto residual_at = [&](int n_t) {
    HowlandSetup setup = make_howland_setup(env, n_t);
    Rng local = rng;
    const Vector x = local.unit_vector(env.basis.size());
    return weak_solution_pairing_residual(*setup.table, setup.gen, setup.grid, x, local, 3);
  };
  const Real r1 = residual_at(base_nt);
  const Real r2 = residual_at(2 * base_nt);
  const Real ratio = r2 > 0.0 ? r1 / r2 : std::numeric_limits<Real>::infinity();
  return {record_le("howland_weak_pairing", std::abs(ratio - 2.0), 0.7,
                    "r_dt=" + format_real17(r1) + " r_dt/2=" + format_real17(r2))};
}

std::vector<CheckRecord> check_howland_orbit(CheckEnv& env) {
  Rng rng = env.check_rng("howland_orbit");
  const int base_nt = static_cast<int>(env.cfg.option("howland_nt", 24));
  const auto residual_at = [&](int n_t) {
    HowlandSetup setup = make_howland_setup(env, n_t);
    Rng local = rng;
    const Vector x = local.unit_vector(env.basis.size());
    return orbit_generator_residual(*setup.table, setup.gen, setup.grid, x);
  };
  const Real r1 = residual_at(base_nt);
  const Real r2 = residual_at(2 * base_nt);
  const Real ratio = r2 > 0.0 ? r1 / r2 : std::numeric_limits<Real>::infinity();
  return {record_le("howland_orbit_residual", std::abs(ratio - 2.0), 0.7,
                    "r_dt=" + format_real17(r1) + " r_dt/2=" + format_real17(r2))};
}

std::vector<CheckRecord> check_locality(CheckEnv& env) {
  const auto& params = env.cfg.truncation;
  ScatteringConfig cfg = env.cfg.scattering;
  cfg.dt = env.cfg.option("locality_dt", 8e-3);
  const Real amp = env.g.is_zero() ? 0.05 : env.g.bumps().front().amplitude;
  BumpSpec f;
  f.t_center = 0.0;
  f.t_radius = 0.4;
  f.x_center = 0.18 * params.box_length;
  f.x_radius = 0.08 * params.box_length;
  f.amplitude = amp;
  BumpSpec h = f;
  std::vector<Real> seps;
  for (int i = 1; i <= 4; ++i) seps.push_back(i * 0.15 * params.box_length);
  const LocalizationFunction background;
  const auto rows = locality_commutator_sweep(params, env.basis, background, f, h,
                                              env.cfg.polynomial, seps, cfg);
  CsvWriter csv(env.out_dir + "/locality_decay.csv");
  csv.header({"separation", "commutator_norm"});
  for (const auto& r : rows) csv.row({r.separation, r.commutator_norm});
  const Real ratio = rows.front().commutator_norm > 0.0
                         ? rows.back().commutator_norm / rows.front().commutator_norm
                         : 0.0;
  return {record_report("locality_decay", ratio, "rows=" + std::to_string(rows.size()))};
}

const std::vector<std::pair<std::string, CheckFn>>& check_registry() {
  static const std::vector<std::pair<std::string, CheckFn>> registry = {
      {"free_theory_trivial", check_free_theory},
      {"s_unitarity", check_s_unitarity},
      {"s_adjoint_inverse", check_s_adjoint},
      {"s_bracket_independence", check_bracket_independence},
      {"wick_crosscheck", check_wick_crosscheck},
      {"translation_invariance", check_translation_invariance},
      {"vacuum_wick_expectation", check_vacuum_wick},
      {"n_bound", check_n_bound},
      {"semiboundedness_table", check_semiboundedness},
      {"kato_stability", check_kato_stability},
      {"sohr_timeindependent", check_sohr_timeindependent},
      {"sohr_gaussian_profile", check_sohr_gaussian},
      {"sohr_negative_control", check_sohr_negative},
      {"causal_factorization", check_causal},
      {"covariance_spatial", check_covariance_spatial},
      {"covariance_time", check_covariance_time},
      {"group_composition", check_group_composition},
      {"relative_s_axioms", check_relative_s},
      {"dyson_remainder", check_dyson},
      {"scheme_order_implicit", [](CheckEnv& e) { return check_scheme_orders(e, false); }},
      {"scheme_order_midpoint", [](CheckEnv& e) { return check_scheme_orders(e, true); }},
      {"approx_uniqueness", check_approx_uniqueness},
      {"midpoint_step_doubling", check_midpoint_step_doubling},
      {"dyson_remainder_single", check_dyson_single},
      {"goldstein_match", check_goldstein},
      {"duhamel_cutoff", check_duhamel},
      {"bogoliubov_oracle", check_bogoliubov},
      {"howland_semigroup_law", check_howland_semigroup},
      {"howland_mult_commutation", check_howland_mult},
      {"howland_norm_identity", check_howland_norm},
      {"howland_resolvent_residual", check_howland_resolvent},
      {"howland_weak_pairing", check_howland_weak},
      {"howland_orbit_residual", check_howland_orbit},
      {"locality_decay", check_locality},
  };
  return registry;
}

const CheckFn& find_check(const std::string& name) {
  for (const auto& [n, fn] : check_registry())
    if (n == name) return fn;
  throw ConfigInvalid("unknown check '" + name + "'");
}

}  // namespace

std::vector<std::string> registered_checks() {
  std::vector<std::string> names;
  for (const auto& [n, fn] : check_registry()) names.push_back(n);
  return names;
}

RunReport run_experiment(const ExperimentConfig& cfg, const std::string& output_dir,
                         int workers) {
  fs::create_directories(output_dir);
  CheckEnv env(cfg, output_dir);

  RunReport report;
  report.schema = cfg.schema;
  report.label = cfg.label;
  report.config_hash = config_hash(cfg);
  report.seed = cfg.seed;
  report.version = kVersion;

  const auto t_start = std::chrono::steady_clock::now();
  std::vector<std::vector<CheckRecord>> slots(cfg.checks.size());
  std::vector<double> timings(cfg.checks.size(), 0.0);
  std::atomic<std::size_t> next{0};
  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(cfg.checks.size())));
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.checks.size()) return;
      try {
        const auto c_start = std::chrono::steady_clock::now();
        slots[i] = find_check(cfg.checks[i])(env);
        timings[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               c_start)
                         .count();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (n_workers == 1) {
    worker();
  } else {
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (auto& records : slots)
    for (auto& r : records) report.checks.push_back(std::move(r));

  {
    std::ofstream out(output_dir + "/report.json", std::ios::binary);
    out << report.to_json();
  }
  {
    const double total =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();
    std::ofstream out(output_dir + "/timing.json");
    out << "{\n  \"total_ms\": " << total << ",\n  \"checks\": {\n";
    for (std::size_t i = 0; i < cfg.checks.size(); ++i) {
      out << "    \"" << cfg.checks[i] << "\": " << timings[i]
          << (i + 1 == cfg.checks.size() ? "\n" : ",\n");
    }
    out << "  }\n}\n";
  }
  return report;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const std::string& axis,
                      const std::vector<Real>& values, const std::string& output_dir,
                      int workers) {
  static const std::vector<std::string> axes = {"dt", "n_max", "K", "approx_level", "amplitude"};
  if (std::find(axes.begin(), axes.end(), axis) == axes.end())
    throw ConfigInvalid("sweep axis must be one of dt, n_max, K, approx_level, amplitude");
  if (values.empty()) throw ConfigInvalid("sweep needs at least one value");
  fs::create_directories(output_dir);

  SweepResult result;
  result.axis = axis;
  result.values = values;
  result.observables.resize(values.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= values.size()) return;
      try {
        ExperimentConfig point = cfg;
        const Real v = values[i];
        if (axis == "dt") point.scattering.dt = v;
        else if (axis == "n_max") point.truncation.n_max = static_cast<int>(v);
        else if (axis == "K") point.truncation.mode_cutoff = static_cast<int>(v);
        else if (axis == "approx_level") point.scattering.levels = {v, v + 1.0};
        else if (axis == "amplitude") {
          for (auto& b : point.bumps) b.amplitude *= v;
        }
        const std::string point_dir = output_dir + "/" + axis + "_" + std::to_string(i);
        const RunReport rep = run_experiment(point, point_dir, 1);
        for (const auto& c : rep.checks) result.observables[i][c.name] = c.value;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(values.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Fitted log-log slopes per observable over the sweep values.
  std::vector<std::string> names;
  for (const auto& [name, value] : result.observables.front()) names.push_back(name);
  for (const auto& name : names) {
    std::vector<Real> errs;
    bool usable = true;
    for (const auto& obs : result.observables) {
      const auto it = obs.find(name);
      if (it == obs.end() || !(it->second > 0.0)) {
        usable = false;
        break;
      }
      errs.push_back(it->second);
    }
    if (usable && values.size() >= 2) result.slopes[name] = fit_loglog_slope(values, errs);
  }

  result.csv_path = output_dir + "/sweep_" + axis + ".csv";
  CsvWriter csv(result.csv_path);
  std::vector<std::string> header = {axis};
  header.insert(header.end(), names.begin(), names.end());
  csv.header(header);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::vector<Real> row = {values[i]};
    for (const auto& name : names) {
      const auto it = result.observables[i].find(name);
      row.push_back(it == result.observables[i].end() ? std::nan("") : it->second);
    }
    csv.row(row);
  }
  std::vector<std::string> slope_row = {"slope"};
  for (const auto& name : names) {
    const auto it = result.slopes.find(name);
    slope_row.push_back(it == result.slopes.end() ? "" : format_real17(it->second));
  }
  csv.raw_row(slope_row);
  return result;
}

int check_report(const std::string& report_path) {
  std::ifstream in(report_path);
  if (!in) {
    return 2;
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (...) {
    return 2;
  }
  if (!doc.contains("checks") || !doc["checks"].is_array()) return 2;
  bool all_pass = true;
  for (const auto& c : doc["checks"]) {
    if (!c.contains("value") || !c.contains("tolerance") || !c.contains("cmp") ||
        !c.contains("pass"))
      return 2;
    const Real value = c["value"].get<Real>();
    const Real tol = c["tolerance"].get<Real>();
    const std::string cmp = c["cmp"].get<std::string>();
    bool expected = true;
    if (cmp == "le") expected = value <= tol;
    else if (cmp == "ge") expected = value >= tol;
    else if (cmp == "none") expected = true;
    else return 2;
    if (expected != c["pass"].get<bool>()) return 2;  // inconsistent report
    all_pass = all_pass && expected;
  }
  return all_pass ? 0 : 1;
}

}  // namespace qftlab
