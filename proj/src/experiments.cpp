#include "gyrokit/asymptotics.hpp"
#include "gyrokit/harness.hpp"
#include "gyrokit/phase_averaging.hpp"
#include "gyrokit/vlasov_transport.hpp"
#include "gyrokit/wave_kernel.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace gyrokit {

namespace {

std::vector<std::string> with_model_keys(std::vector<std::string> keys) {
  keys.insert(keys.end(), kModelKeys.begin(), kModelKeys.end());
  return keys;
}

std::vector<double> uniform_times(double t_final, int samples) {
  if (samples < 2) throw SpecError("samples must be at least 2");
  if (!(t_final > 0.0)) throw SpecError("t_final must be positive");
  std::vector<double> t(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) t[static_cast<std::size_t>(i)] = t_final * i / (samples - 1);
  return t;
}

IntegratorConfig integrator_from(const Config& c, double t_final) {
  IntegratorConfig cfg;
  cfg.steps_per_gyroperiod = c.integer("steps_per_gyroperiod", cfg.steps_per_gyroperiod);
  cfg.t_final = t_final;
  return cfg;
}

void note_fit(ResultTable& table, const std::string& name, const SlopeFit& fit) {
  table.note("slope_" + name, fit.slope);
  table.note("slope_" + name + "_hw95", fit.half_width_95);
}

SlopeFit fit_column(const std::vector<double>& eps, const std::vector<double>& values) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < eps.size(); ++i) pts.emplace_back(eps[i], values[i]);
  return convergence_order(pts);
}

// Test states with |ξ| ≤ 1 and nonzero perpendicular momentum.
const std::vector<PhaseState>& sample_states() {
  static const std::vector<PhaseState> s = {
      {Vec3(0.3, -0.2, 0.1), Vec3(0.6, 0.3, 0.2)},
      {Vec3(-0.4, 0.1, 0.0), Vec3(-0.2, 0.7, -0.4)},
      {Vec3(0.1, 0.5, -0.3), Vec3(0.35, -0.25, 0.6)},
  };
  return s;
}

ExperimentResult validate_field_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"model", "max_div", "max_curl", "min_b", "max_b", "max_vertical_grad_b", "ok"};
  GridSpec grid;
  grid.n = c.integer("grid_n", grid.n);
  if (grid.n < 2) throw SpecError("grid_n must be at least 2");
  const double div_tol = c.real("div_tol", 1e-8);
  const ConstantField cf(Vec3(0.0, 0.0, 1.0));
  const FixedDirectionField ff({});
  const HarmonicField hf({});
  const std::vector<const MagneticFieldModel*> models = {&cf, &ff, &hf};
  for (std::size_t i = 0; i < models.size(); ++i) {
    const ValidationReport v = validate_field(*models[i], grid);
    r.table.add_row({static_cast<double>(i), v.max_div, v.max_curl, v.min_b, v.max_b, v.max_vertical_grad_b,
                     v.ok() ? 1.0 : 0.0});
    r.check(v.ok(), i, fmt::format("{} field failed validation", models[i]->name()));
    r.check(v.max_div <= div_tol, i, fmt::format("max_div = {} > {}", v.max_div, div_tol));
  }
  r.table.note("model_index", "0=constant 1=fixed 2=harmonic");
  return r;
}

// Closed-form gyration in B = b e₃: Ξ rotates counter-clockwise by bt/(ε⟨ξ⟩).
PhaseState homogeneous_exact(const PhaseState& z, double b, double eps, double t) {
  const double gam = bracket(z.xi);
  const double ph = b * t / (eps * gam);
  const Vec3 xb = horizontal(z.xi);
  const Vec3 xp = perp(z.xi);
  PhaseState out;
  out.xi = std::cos(ph) * xb - std::sin(ph) * xp + z.xi[2] * Vec3::UnitZ();
  out.x = z.x + t * z.xi[2] / gam * Vec3::UnitZ() + eps / b * (std::sin(ph) * xb + (std::cos(ph) - 1.0) * xp);
  return out;
}

ExperimentResult oracle_homogeneous_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"eps", "state", "err_x", "err_xi"};
  const auto eps = c.reals("eps", {1e-2, 1e-3});
  validate_eps_grid(eps);
  const double b = c.real("b0", 1.3);
  const double tol = c.real("tol", 1e-8);
  const double t_final = c.real("t_final", 1.0);
  const auto times = uniform_times(t_final, c.integer("samples", 101));
  const ConstantField model(Vec3(0.0, 0.0, b));
  const auto& states = sample_states();
  struct Job {
    double eps;
    std::size_t state;
  };
  std::vector<Job> jobs;
  for (double e : eps)
    for (std::size_t s = 0; s < states.size(); ++s) jobs.push_back({e, s});
  const auto errs = parallel_map(jobs.size(), [&](std::size_t j) {
    IntegratorConfig cfg = integrator_from(c, t_final);
    cfg.epsilon = jobs[j].eps;
    const Trajectory tr = integrate_linear(model, states[jobs[j].state], cfg, times);
    double ex = 0.0, exi = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const PhaseState ref = homogeneous_exact(states[jobs[j].state], b, jobs[j].eps, times[i]);
      ex = std::max(ex, (tr.states[i].x - ref.x).norm());
      exi = std::max(exi, (tr.states[i].xi - ref.xi).norm());
    }
    return std::pair{ex, exi};
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    r.table.add_row({jobs[j].eps, static_cast<double>(jobs[j].state), errs[j].first, errs[j].second});
    r.check(errs[j].first <= tol && errs[j].second <= tol, j,
            fmt::format("eps = {}: error ({}, {}) above {}", jobs[j].eps, errs[j].first, errs[j].second, tol));
  }
  return r;
}

ExperimentResult converge_fixed_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"eps", "err_x", "err_xi"};
  const auto eps = c.reals("eps", {1e-1, 3e-2, 1e-2, 3e-3, 1e-3});
  validate_eps_grid(eps);
  const double t_final = c.real("t_final", 0.5);
  const auto times = uniform_times(t_final, c.integer("samples", 51));
  const std::string sign_name = c.text("drift_sign", "gradient");
  if (sign_name != "gradient" && sign_name != "reversed") throw SpecError("drift_sign must be gradient or reversed");
  const DriftSign sign = sign_name == "gradient" ? DriftSign::gradient_drift : DriftSign::reversed;
  const auto model = make_model(c, "fixed");
  const auto errs = parallel_map(eps.size(), [&](std::size_t i) {
    ApproxError worst;
    for (const auto& s : sample_states()) {
      const ApproxError e = approx_error_fixed(*model, s, eps[i], times, integrator_from(c, t_final), sign);
      worst.err_x = std::max(worst.err_x, e.err_x);
      worst.err_xi = std::max(worst.err_xi, e.err_xi);
    }
    return worst;
  });
  std::vector<double> ex, exi;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    r.table.add_row({eps[i], errs[i].err_x, errs[i].err_xi});
    ex.push_back(errs[i].err_x);
    exi.push_back(errs[i].err_xi);
  }
  const SlopeFit fx = fit_column(eps, ex);
  const SlopeFit fxi = fit_column(eps, exi);
  note_fit(r.table, "x", fx);
  note_fit(r.table, "xi", fxi);
  r.table.note("drift_sign", sign_name);
  const auto x_range = c.reals("slope_x_range", {1.7, 2.3});
  const auto xi_range = c.reals("slope_xi_range", {0.7, 1.3});
  r.check(fx.slope >= x_range.at(0) && fx.slope <= x_range.at(1),
          fmt::format("slope_x = {} outside [{}, {}]", fx.slope, x_range[0], x_range[1]));
  r.check(fxi.slope >= xi_range.at(0) && fxi.slope <= xi_range.at(1),
          fmt::format("slope_xi = {} outside [{}, {}]", fxi.slope, xi_range[0], xi_range[1]));
  return r;
}

ExperimentResult converge_general_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"eps", "err_u", "err_theta", "err_u1"};
  const auto eps = c.reals("eps", {1e-1, 3e-2, 1e-2, 3e-3, 1e-3});
  validate_eps_grid(eps);
  const double t_final = c.real("t_final", 0.5);
  const auto times = uniform_times(t_final, c.integer("samples", 51));
  const auto model = make_model(c, "harmonic");
  const PolarState state{Vec3(0.3, -0.2, 0.1), 0.8, 0.7, 0.4};
  const auto errs = parallel_map(eps.size(), [&](std::size_t i) {
    return approx_error_general(*model, state, eps[i], times, integrator_from(c, t_final));
  });
  std::vector<double> eu, et;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    r.table.add_row({eps[i], errs[i].err_u, errs[i].err_theta, errs[i].err_u1});
    eu.push_back(errs[i].err_u);
    et.push_back(errs[i].err_theta);
  }
  const SlopeFit fu = fit_column(eps, eu);
  const SlopeFit ft = fit_column(eps, et);
  note_fit(r.table, "u", fu);
  note_fit(r.table, "theta", ft);
  r.check(fu.slope >= 1.6 && fu.slope <= 2.4, fmt::format("slope_u = {} outside [1.6, 2.4]", fu.slope));
  r.check(ft.slope >= 0.6 && ft.slope <= 1.4, fmt::format("slope_theta = {} outside [0.6, 1.4]", ft.slope));
  return r;
}

ExperimentResult symbols_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"R", "sup_p", "exact_p", "bound_p", "sup_q", "exact_q", "bound_q"};
  const auto radii = c.reals("R", {0.5, 1.0, 2.0});
  const int n_polar = c.integer("n_polar", 200);
  const double tol = c.real("tol", 1e-3);
  const Vec3 dir = Vec3(0.6, 0.0, 0.8);
  const auto rows = parallel_map(radii.size(), [&](std::size_t i) {
    const Vec3 xi = radii[i] * dir;
    const double sp = sup_on_sphere([&](const Vec3& w) { return symbol_p(1.0, w, xi).norm(); }, n_polar);
    const double sq = sup_on_sphere([&](const Vec3& w) { return symbol_q(1.0, w, xi).norm(); }, n_polar);
    return std::vector<double>{radii[i],
                               sp,
                               symbol_p_sup_exact(radii[i]),
                               symbol_bound_p(radii[i]),
                               sq,
                               symbol_q_sup_exact(radii[i]),
                               symbol_bound_q(radii[i])};
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = rows[i];
    if (!(v[0] >= 0.0)) throw SpecError("R must be nonnegative");
    r.table.add_row(v);
    r.check(v[1] <= v[3], i, fmt::format("sup_p = {} above bound {}", v[1], v[3]));
    r.check(v[4] <= v[6], i, fmt::format("sup_q = {} above bound {}", v[4], v[6]));
    r.check(std::abs(v[1] - v[2]) <= tol, i, fmt::format("sup_p = {} differs from <xi> = {}", v[1], v[2]));
    r.check(std::abs(v[4] - v[5]) <= tol, i, fmt::format("sup_q = {} differs from sharp value {}", v[4], v[5]));
  }
  return r;
}

ExperimentResult shell_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"case", "t", "value", "expected", "error"};
  const auto times = c.reals("t", {0.5, 1.0, 2.0});
  const int time_nodes = c.integer("time_nodes", 24);
  const SphericalQuadrature quad =
      SphericalQuadrature::product(c.integer("n_polar", 16), c.integer("n_azimuth", 32));
  const Vec3 x(0.2, -0.1, 0.3);
  const auto one = [](double, const Vec3&) { return 1.0; };
  const SpaceTimeFn smooth = [](double tau, const Vec3& y) { return std::exp(-y.squaredNorm()) * (1.0 + tau * tau); };
  const SpaceTimeFn smooth_dt = [](double tau, const Vec3& y) { return std::exp(-y.squaredNorm()) * 2.0 * tau; };
  std::size_t row = 0;
  for (double t : times) {
    if (!(t > 0.0)) throw SpecError("t values must be positive");
    const double unit = shell_convolution([](const Vec3&) { return 1.0; }, 0, one, t, x, quad, time_nodes);
    const double rel = std::abs(unit - 0.5 * t * t) / (0.5 * t * t);
    r.table.add_row({0.0, t, unit, 0.5 * t * t, rel});
    r.check(rel <= 1e-6, row++, fmt::format("t = {}: unit case relative error {}", t, rel));
    const double odd = shell_convolution([](const Vec3& w) { return w[0]; }, 0, one, t, x, quad, time_nodes);
    r.table.add_row({1.0, t, odd, 0.0, std::abs(odd)});
    r.check(std::abs(odd) <= 1e-10, row++, fmt::format("t = {}: odd case |value| = {}", t, std::abs(odd)));
    const double res = time_derivative_identity_residual(smooth, smooth_dt, t, x, quad, time_nodes);
    r.table.add_row({2.0, t, res, 0.0, res});
    r.check(res <= 1e-8, row++, fmt::format("t = {}: time-derivative identity residual {}", t, res));
  }
  r.table.note("case_index", "0=unit 1=odd_symbol 2=time_derivative_identity");
  return r;
}

TestDensity transfer_density(bool theta_independent) {
  auto bump = [](double r2) { return r2 < 1.0 ? std::pow(1.0 - r2, 4) : 0.0; };
  auto dbump = [](double r2) { return r2 < 1.0 ? -8.0 * std::pow(1.0 - r2, 3) : 0.0; };
  TestDensity d;
  d.xi_radius = 1.0;
  if (theta_independent) {
    d.value = [=](double tau, const Vec3& y, const Vec3& xi) { return (1.0 + 0.3 * y[0] + 0.2 * tau) * bump(xi.squaredNorm()); };
    d.grad_xi = [=](double tau, const Vec3& y, const Vec3& xi) {
      return Vec3((1.0 + 0.3 * y[0] + 0.2 * tau) * dbump(xi.squaredNorm()) * xi);
    };
    return d;
  }
  d.value = [=](double tau, const Vec3& y, const Vec3& xi) {
    return (1.0 + 0.3 * y[0] + 0.2 * tau) * bump(xi.squaredNorm()) * (1.0 + 0.5 * xi[0] + 0.3 * xi[2] * xi[1]);
  };
  d.grad_xi = [=](double tau, const Vec3& y, const Vec3& xi) {
    const double a = 1.0 + 0.3 * y[0] + 0.2 * tau;
    const double r2 = xi.squaredNorm();
    const double P = 1.0 + 0.5 * xi[0] + 0.3 * xi[2] * xi[1];
    const Vec3 gP(0.5, 0.3 * xi[2], 0.3 * xi[1]);
    return Vec3(a * (dbump(r2) * xi * P + bump(r2) * gP));
  };
  return d;
}

ExperimentResult transfer_identity_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"case", "lhs1", "lhs2", "lhs3", "rhs1", "rhs2", "rhs3", "abs_diff", "rel_diff"};
  const double t = c.real("t", 0.5);
  if (!(t > 0.0)) throw SpecError("t must be positive");
  const double rel_tol = c.real("rel_tol", 1e-4);
  const double zero_tol = c.real("zero_tol", 1e-10);
  TransferQuadrature quad;
  quad.time_nodes = c.integer("time_nodes", quad.time_nodes);
  quad.radial = c.integer("radial", quad.radial);
  const Vec3 x(0.1, 0.2, -0.1);
  const FixedDirectionField ff({});
  const HarmonicField hf({});
  struct Case {
    const MagneticFieldModel* model;
    bool zero;
  };
  const std::vector<Case> cases = {{&ff, false}, {&hf, false}, {&hf, true}};
  const auto res = parallel_map(cases.size(), [&](std::size_t i) {
    return transfer_identity_residual(*cases[i].model, transfer_density(cases[i].zero), t, x, quad);
  });
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& v = res[i];
    r.table.add_row({static_cast<double>(i), v.lhs[0], v.lhs[1], v.lhs[2], v.rhs[0], v.rhs[1], v.rhs[2], v.abs_diff,
                     v.rel_diff});
    if (cases[i].zero)
      r.check(v.abs_diff <= zero_tol && v.lhs.norm() <= zero_tol, i,
              fmt::format("theta-independent case: |lhs| = {}, |lhs - rhs| = {}", v.lhs.norm(), v.abs_diff));
    else
      r.check(v.rel_diff <= rel_tol, i, fmt::format("relative difference {} above {}", v.rel_diff, rel_tol));
  }
  r.table.note("case_index", "0=fixed 1=harmonic 2=harmonic_theta_independent");
  return r;
}

ExperimentResult osc_scaling_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"kind", "eps", "n", "value", "reference"};
  const Vec3 xi(0.5, 0.2, 0.3);
  const double gam = bracket(xi);

  // Constant b_e = 1 at resonant times: |I| = 2ε⟨ξ⟩/|n|.
  const ConstantField cf(Vec3(0.0, 0.0, 1.0));
  const double eq_tol = c.real("equality_tol", 1e-12);
  std::size_t row = 0;
  for (double eps : {1e-1, 1e-2, 1e-3})
    for (int n : {1, 2}) {
      OscillatoryIntegralSpec s;
      s.g = [](double, const Slow&) { return 1.0; };
      s.n = n;
      s.eps = eps;
      s.state = {Vec3::Zero(), xi};
      s.t = 7.0 * pi * eps * gam / n;
      OscillatoryOptions o;
      o.mode = PhaseEvaluation::asymptotic;
      const double v = std::abs(oscillatory_integral(s, cf, o));
      const double ref = 2.0 * eps * gam / n;
      r.table.add_row({0.0, eps, static_cast<double>(n), v, ref});
      r.check(std::abs(v - ref) <= eq_tol, row, fmt::format("closed form {} vs {}", v, ref));
      ++row;
    }

  // Inhomogeneous sweep and the n = 0 control.
  const auto eps = c.reals("eps", {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4});
  validate_eps_grid(eps);
  const auto model = make_model(c, "fixed");
  const auto t_list = c.reals("t", {0.3, 0.4, 0.5});
  auto sweep = [&](int n) {
    return parallel_map(eps.size(), [&, n](std::size_t i) {
      double worst = 0.0;
      for (double t : t_list) {
        OscillatoryIntegralSpec s;
        s.g = [](double sv, const Slow& u) { return (1.0 + sv) * (1.0 + 0.3 * u[0]); };
        s.n = n;
        s.eps = eps[i];
        s.omega = Vec3(0.6, 0.0, 0.8);
        s.state = {Vec3(0.1, 0.0, 0.0), xi};
        s.t = t;
        worst = std::max(worst, std::abs(oscillatory_integral(s, *model, {})));
      }
      return worst;
    });
  };
  const auto osc = sweep(1);
  const auto mean = sweep(0);
  for (std::size_t i = 0; i < eps.size(); ++i) r.table.add_row({1.0, eps[i], 1.0, osc[i], 0.0});
  for (std::size_t i = 0; i < eps.size(); ++i) r.table.add_row({2.0, eps[i], 0.0, mean[i], 0.0});

  // Initial-data term on the cos 2θ data, sup over t. The phase 2t/(ε⟨ξ⟩)
  // varies across the momentum grid, so the r and z node counts grow like 1/ε.
  const auto eps_init = c.reals("eps_initial", {2e-1, 1e-1, 5e-2, 2.5e-2});
  validate_eps_grid(eps_init, "eps_initial");
  const auto t_init = c.reals("t_initial", {0.3, 0.4, 0.5});
  const double node_scale = c.real("momentum_node_scale", 0.3);
  const InitialData data = example_initial_data(GyroProfile::compact(1.0, 1.0));
  const auto init = parallel_map(eps_init.size(), [&](std::size_t i) {
    InitialTermQuadrature q;
    q.momentum.n_r = q.momentum.n_z = std::max(6, static_cast<int>(std::ceil(node_scale / eps_init[i])));
    double worst = 0.0;
    for (double t : t_init)
      worst = std::max(worst, averaged_initial_term(*model, data.f_in, t, Vec3(0.1, 0.0, 0.0), eps_init[i], q).norm());
    return worst;
  });
  for (std::size_t i = 0; i < eps_init.size(); ++i) r.table.add_row({3.0, eps_init[i], 2.0, init[i], 0.0});

  const SlopeFit f_osc = fit_column(eps, osc);
  const SlopeFit f_mean = fit_column(eps, mean);
  const SlopeFit f_init = fit_column(eps_init, init);
  note_fit(r.table, "osc", f_osc);
  note_fit(r.table, "mean_mode", f_mean);
  note_fit(r.table, "initial_term", f_init);
  r.table.note("kind_index", "0=closed_form 1=inhomogeneous 2=mean_mode_control 3=initial_term");
  r.check(f_osc.slope >= 0.7 && f_osc.slope <= 1.3, fmt::format("oscillatory slope {} outside [0.7, 1.3]", f_osc.slope));
  r.check(std::abs(f_mean.slope) <= 0.3, fmt::format("mean-mode control slope {} not near 0", f_mean.slope));
  r.check(f_init.slope >= 0.7, fmt::format("initial-term slope {} below 0.7", f_init.slope));
  return r;
}

ExperimentResult prepared_vs_ill_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"eps", "sup_dt_ill", "sup_dxi_ill", "sup_dt_prepared", "sup_dxi_prepared", "residual_max", "rho_abs",
                     "J_abs"};
  const auto eps = c.reals("eps", {1e-1, 3e-2, 1e-2, 3e-3, 1e-3});
  validate_eps_grid(eps);
  const double t = c.real("t", 0.5);
  if (!(t > 0.0)) throw SpecError("t must be positive");
  const auto model = make_model(c, "fixed");
  const GyroProfile chi = GyroProfile::compact(1.0, 1.0);
  const InitialData ill = example_initial_data(chi);
  InitialData prepared;
  prepared.f_in = [chi](const Vec3& x, const Vec3& xi) {
    return (1.0 + 0.5 * std::sin(x[0]) + 0.3 * x[2]) * chi.value(std::hypot(xi[0], xi[1]), xi[2]);
  };
  std::vector<PhaseState> probes;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double a = 2.0 * pi * j / 4.0 + 0.3 * i;
      probes.push_back({Vec3(0.15 * i - 0.2, 0.1 * j, 0.05 * (i - j)), Vec3(0.5 * std::cos(a), 0.5 * std::sin(a), 0.1 * i)});
    }
  const IntegratorConfig cfg = integrator_from(c, t);
  const auto rows_ill = lipschitz_growth_probe(*model, ill, eps, t, probes, cfg);
  const auto rows_prep = lipschitz_growth_probe(*model, prepared, eps, t, probes, cfg);
  const CylindricalGrid grid{1.0, 1.0, 6, 16, 6, 1};
  std::vector<double> dt_ill, dt_prep;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    double res = 0.0, rho = 0.0, J = 0.0;
    for (int k = 0; k < 8; ++k) {
      const double tk = t * k / 7.0;
      const Vec3 xi(0.2 + 0.05 * k, 0.3 - 0.04 * k, 0.1 * (k % 3) - 0.1);
      res = std::max(res, std::abs(example_closed_form(chi, eps[i], tk, Vec3::Zero(), xi).residual));
      const Moments m = example_moments(chi, eps[i], tk, Vec3::Zero(), grid);
      rho = std::max(rho, std::abs(m.rho));
      J = std::max(J, m.J.norm());
    }
    r.table.add_row({eps[i], rows_ill[i].sup_dt, rows_ill[i].sup_dxi, rows_prep[i].sup_dt, rows_prep[i].sup_dxi, res, rho, J});
    r.check(res <= 1e-10, i, fmt::format("closed-form residual {} above 1e-10", res));
    r.check(rho <= 1e-12 && J <= 1e-12, i, "closed-form moments do not vanish");
    dt_ill.push_back(rows_ill[i].sup_dt);
    dt_prep.push_back(rows_prep[i].sup_dt);
  }
  const SlopeFit fi = fit_column(eps, dt_ill);
  const SlopeFit fp = fit_column(eps, dt_prep);
  note_fit(r.table, "dt_ill", fi);
  note_fit(r.table, "dt_prepared", fp);
  r.check(std::abs(fi.slope + 1.0) <= 0.3, fmt::format("ill-prepared slope {} outside -1 +- 0.3", fi.slope));
  r.check(std::abs(fp.slope) <= 0.3, fmt::format("prepared slope {} outside 0 +- 0.3", fp.slope));
  return r;
}

ExperimentResult volume_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"flow", "quantity", "eps", "value", "tolerance"};
  const auto eps = c.reals("eps", {1e-2});
  validate_eps_grid(eps);
  const double t = c.real("t", 1.0);
  const double drift_tol = c.real("drift_tol", 1e-10);
  const double det_tol = c.real("det_tol", 1e-6);
  const auto model = make_model(c, "fixed");
  const HarmonicField general({});
  std::size_t row = 0;
  for (double e : eps) {
    IntegratorConfig cfg = integrator_from(c, t);
    cfg.epsilon = e;
    const auto drifts = parallel_map(3, [&](std::size_t f) {
      double worst = 0.0;
      for (const auto& s : sample_states()) {
        const Trajectory tr = f == 0   ? integrate_linear(*model, s, cfg)
                              : f == 1 ? integrate_straightened(general, s, cfg)
                                       : integrate_full(general, s, cfg);
        worst = std::max(worst, tr.invariant_drift);
      }
      return worst;
    });
    for (std::size_t f = 0; f < 3; ++f) {
      r.table.add_row({static_cast<double>(f), 0.0, e, drifts[f], drift_tol});
      r.check(drifts[f] <= drift_tol, row++, fmt::format("momentum-norm drift {} above {}", drifts[f], drift_tol));
    }
    for (std::size_t f : {std::size_t{0}, std::size_t{2}}) {
      double worst = 0.0;
      for (const auto& s : sample_states()) {
        const FlowJacobian fj = f == 0 ? flow_jacobian(*model, s, t, cfg, Flow::linear)
                                       : flow_jacobian(general, s, t, cfg, Flow::full);
        worst = std::max(worst, std::abs(fj.det - 1.0));
      }
      r.table.add_row({static_cast<double>(f), 1.0, e, worst, det_tol});
      r.check(worst <= det_tol, row++, fmt::format("|det - 1| = {} above {}", worst, det_tol));
    }
  }
  r.table.note("flow_index", "0=linear 1=straightened 2=full");
  r.table.note("quantity_index", "0=momentum_norm_drift 1=jacobian_det_error");
  return r;
}

ExperimentResult diffeo_margin_exp(const Config& c) {
  ExperimentResult r;
  r.table.columns = {"eps", "t", "margin"};
  const auto eps = c.reals("eps", {1e-1, 1e-2});
  validate_eps_grid(eps);
  const auto times = c.reals("t", {0.0, 0.1, 0.2, 0.4, 0.8});
  const auto model = make_model(c, "fixed");
  struct Job {
    double eps, t;
  };
  std::vector<Job> jobs;
  for (double e : eps)
    for (double t : times) {
      if (t < 0.0) throw SpecError("t values must be nonnegative");
      jobs.push_back({e, t});
    }
  const auto margins = parallel_map(jobs.size(), [&](std::size_t j) {
    if (jobs[j].t == 0.0) return 0.0;
    return diffeo_margin(*model, jobs[j].eps, jobs[j].t, sample_states(), integrator_from(c, jobs[j].t));
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    r.table.add_row({jobs[j].eps, jobs[j].t, margins[j]});
    r.check(margins[j] < 1.0, j, fmt::format("margin {} not below 1 at t = {}", margins[j], jobs[j].t));
  }
  return r;
}

}  // namespace

const std::vector<Experiment>& experiments() {
  static const std::vector<Experiment> list = {
      {"validate-field", "admissibility checks of the built-in field models", {"grid_n", "div_tol"}, validate_field_exp},
      {"oracle-homogeneous", "integrator against the closed-form gyration in a constant field",
       {"eps", "b0", "tol", "t_final", "samples", "steps_per_gyroperiod"}, oracle_homogeneous_exp},
      {"converge-fixed", "error orders of the fixed-direction flow approximation",
       with_model_keys({"eps", "t_final", "samples", "drift_sign", "steps_per_gyroperiod", "slope_x_range",
                        "slope_xi_range"}),
       converge_fixed_exp},
      {"converge-general", "error orders of second-order gyro-averaging in a general-direction field",
       with_model_keys({"eps", "t_final", "samples", "steps_per_gyroperiod"}), converge_general_exp},
      {"symbols", "sup norms of the division-lemma symbols against their bounds", {"R", "n_polar", "tol"}, symbols_exp},
      {"shell", "analytic cases of the shell convolution", {"t", "time_nodes", "n_polar", "n_azimuth"}, shell_exp},
      {"transfer-identity", "both sides of the gyro-angle transfer identity",
       {"t", "rel_tol", "zero_tol", "time_nodes", "radial"}, transfer_identity_exp},
      {"osc-scaling", "epsilon scaling of oscillatory integrals along the flow",
       with_model_keys({"eps", "t", "equality_tol", "eps_initial", "t_initial", "momentum_node_scale"}), osc_scaling_exp},
      {"prepared-vs-ill", "time-derivative growth for prepared and ill-prepared data",
       with_model_keys({"eps", "t", "steps_per_gyroperiod"}), prepared_vs_ill_exp},
      {"volume", "momentum-norm conservation and flow-Jacobian determinants",
       with_model_keys({"eps", "t", "drift_tol", "det_tol", "steps_per_gyroperiod"}), volume_exp},
      {"diffeo-margin", "distance of the spatial flow derivative from the identity",
       with_model_keys({"eps", "t", "steps_per_gyroperiod"}), diffeo_margin_exp},
  };
  return list;
}

}  // namespace gyrokit
