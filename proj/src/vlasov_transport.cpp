#include "gyrokit/vlasov_transport.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace gyrokit {

Vec6 InitialData::gradient(const Vec3& x, const Vec3& xi) const {
  if (grad) return grad(x, xi);
  constexpr double h = 1e-5;
  Vec6 g;
  for (int k = 0; k < 6; ++k) {
    auto at = [&](double d) {
      Vec3 y = x, p = xi;
      if (k < 3)
        y[k] += d;
      else
        p[k - 3] += d;
      return f_in(y, p);
    };
    g[k] = (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
  }
  return g;
}

double preparedness_norm(const MagneticFieldModel& model, const InitialData& data, const PhaseGrid& grid) {
  const auto nodes = grid.momentum.nodes();
  double sup = 0.0;
  for (const Vec3& x : grid.x) {
    const Vec3 B = model.B(x);
    for (const auto& n : nodes) {
      const Vec3 xi = n.xi();
      const Vec3 gxi = data.gradient(x, xi).tail<3>();
      sup = std::max(sup, std::abs(relativistic_velocity(xi).cross(B).dot(gxi)));
    }
  }
  return sup;
}

PreparednessReport preparedness_report(const MagneticFieldModel& model, const InitialData& data, const PhaseGrid& grid,
                                       double eps, double C) {
  PreparednessReport r;
  r.sup_norm = preparedness_norm(model, data, grid);
  r.epsilon_ref = eps;
  r.C = C;
  r.prepared = r.sup_norm <= C * eps;
  return r;
}

CompatibilityResiduals compatibility_residuals(const InitialData& data, const PhaseGrid& grid, double h) {
  const auto nodes = grid.momentum.nodes();
  auto div = [h](const SpatialField& F, const Vec3& x) {
    double d = 0.0;
    for (int j = 0; j < 3; ++j) {
      const Vec3 e = Vec3::Unit(j) * h;
      d += (-F(x + 2 * e)[j] + 8.0 * F(x + e)[j] - 8.0 * F(x - e)[j] + F(x - 2 * e)[j]) / (12.0 * h);
    }
    return d;
  };
  CompatibilityResiduals r;
  for (const Vec3& x : grid.x) {
    double rho = 0.0;
    for (const auto& n : nodes) rho += n.weight * data.f_in(x, n.xi());
    const double dE = data.E_in ? div(data.E_in, x) : 0.0;
    r.div_E_minus_rho = std::max(r.div_E_minus_rho, std::abs(dE - rho));
    r.div_E_plus_rho = std::max(r.div_E_plus_rho, std::abs(dE + rho));
    if (data.B_in) r.div_B = std::max(r.div_B, std::abs(div(data.B_in, x)));
  }
  return r;
}

std::vector<double> duhamel_linear_density(const MagneticFieldModel& model, const PhaseFunction& f_in,
                                           const EquilibriumProfile& M, const TimeField& E, double t,
                                           const std::vector<PhaseState>& states, const IntegratorConfig& config,
                                           const DuhamelOptions& options) {
  if (model.kind() == FieldKind::general_direction)
    throw DomainError("duhamel_linear_density: the linear flow needs a fixed-direction model");
  if (!(t >= 0.0)) throw DomainError(fmt::format("duhamel_linear_density: t = {}", t));
  config.validate();
  const bool source = E && M.M_prime;
  std::vector<double> out;
  out.reserve(states.size());
  for (const PhaseState& z : states) {
    const PhaseState back = propagate(model, Flow::linear, z, 0.0, -t, config);
    double f = f_in(back.x, back.xi);
    if (source && t > 0.0) {
      const double period = 2.0 * pi * config.epsilon * bracket(z.xi) / model.b(z.x);
      const int panels = std::max(1, static_cast<int>(std::ceil(t / period * options.panels_per_period)));
      const Rule1D rule = composite_gauss(panels, 8, 0.0, t);
      // Walk backwards from s = t so each leg is short.
      PhaseState cur = z;
      double tau = 0.0;
      double acc = 0.0;
      for (std::size_t i = rule.nodes.size(); i-- > 0;) {
        const double s = rule.nodes[i];
        cur = propagate(model, Flow::linear, cur, tau, s - t, config);
        tau = s - t;
        const double r = cur.xi.norm();
        if (r > 0.0) acc += rule.weights[i] * M.M_prime(r) * (cur.xi / r).dot(E(s, cur.x));
      }
      f += config.epsilon * acc;
    }
    if (!std::isfinite(f)) throw EvaluationError("duhamel_linear_density: non-finite density");
    out.push_back(f);
  }
  return out;
}

GyroProfile GyroProfile::compact(double amplitude, double radius) {
  GyroProfile p;
  const double R2 = radius * radius;
  p.value = [=](double r, double z) {
    const double u = 1.0 - (r * r + z * z) / R2;
    return u > 0.0 ? amplitude * u * u * u * u : 0.0;
  };
  auto d = [=](double r, double z, double c) {
    const double u = 1.0 - (r * r + z * z) / R2;
    return u > 0.0 ? -8.0 * amplitude * u * u * u * c / R2 : 0.0;
  };
  p.dr = [=](double r, double z) { return d(r, z, r); };
  p.dz = [=](double r, double z) { return d(r, z, z); };
  return p;
}

ClosedFormValue example_closed_form(const GyroProfile& chi, double eps, double t, const Vec3& x, const Vec3& xi) {
  (void)x;  // χ does not depend on x
  const double r = std::hypot(xi[0], xi[1]);
  if (!(r > 0.0)) throw DomainError("example_closed_form: needs r > 0");
  const double z = xi[2];
  const double gam = bracket(xi);
  const double phi = std::atan2(xi[1], xi[0]) - t / (eps * gam);
  const double c = chi.value(r, z);
  const double cs = std::cos(2.0 * phi);
  const double sn = std::sin(2.0 * phi);
  ClosedFormValue out;
  out.f = c * cs;
  out.dt = 2.0 * c * sn / (eps * gam);
  // ∇_ξ via the Cartesian chain rule: ∇r, e₃ and ∇φ = ∇θ + t ξ/(ε⟨ξ⟩³).
  const Vec3 grad_r(xi[0] / r, xi[1] / r, 0.0);
  const Vec3 grad_phi = Vec3(-xi[1], xi[0], 0.0) / (r * r) + t * xi / (eps * gam * gam * gam);
  out.grad_xi = cs * (chi.dr(r, z) * grad_r + chi.dz(r, z) * Vec3::UnitZ()) - 2.0 * c * sn * grad_phi;
  const double dtheta = xi[1] * out.grad_xi[0] - xi[0] * out.grad_xi[1];
  out.residual = out.dt - dtheta / (eps * gam);
  return out;
}

Moments example_moments(const GyroProfile& chi, double eps, double t, const Vec3& x, const CylindricalGrid& grid) {
  Moments m;
  for (const auto& n : grid.nodes()) {
    if (n.r <= 0.0) continue;
    const Vec3 xi = n.xi();
    const double f = example_closed_form(chi, eps, t, x, xi).f;
    m.rho += n.weight * f;
    m.J += n.weight * f * relativistic_velocity(xi);
  }
  return m;
}

InitialData example_initial_data(const GyroProfile& chi) {
  InitialData d;
  d.f_in = [chi](const Vec3&, const Vec3& xi) {
    const double r = std::hypot(xi[0], xi[1]);
    return r > 0.0 ? chi.value(r, xi[2]) * std::cos(2.0 * std::atan2(xi[1], xi[0])) : 0.0;
  };
  d.grad = [chi](const Vec3& x, const Vec3& xi) {
    Vec6 g = Vec6::Zero();
    if (std::hypot(xi[0], xi[1]) > 0.0) g.tail<3>() = example_closed_form(chi, 1.0, 0.0, x, xi).grad_xi;
    return g;
  };
  return d;
}

DiluteBound dilute_source_bound(const MagneticFieldModel& model, const EquilibriumProfile& M, const Vec3& x,
                                const std::vector<double>& times, const std::vector<double>& E_sup, double t,
                                double R_xi, int n_r, int n_z) {
  if (times.size() != E_sup.size()) throw DomainError("dilute_source_bound: history sizes differ");
  for (std::size_t i = 0; i < E_sup.size(); ++i) {
    if (!(E_sup[i] >= 0.0)) throw DomainError("dilute_source_bound: history must be nonnegative");
    if (i > 0 && !(times[i] > times[i - 1])) throw DomainError("dilute_source_bound: times must increase");
  }
  DiluteBound out;
  // Running sup, trapezoid on [0, t] (history clipped to t).
  double running = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double prev = running;
    running = std::max(running, E_sup[i]);
    if (i == 0) continue;
    const double a = times[i - 1];
    const double b = std::min(times[i], t);
    if (b <= a) break;
    const double rb = times[i] <= t ? running : prev + (running - prev) * (b - a) / (times[i] - a);
    out.history_integral += 0.5 * (prev + rb) * (b - a);
  }
  if (!M.M_prime || out.history_integral == 0.0) return out;

  double b_sup = model.b(x);
  const SphericalQuadrature ball = SphericalQuadrature::product(6, 12);
  for (int k = 1; k <= 5; ++k)
    for (const Vec3& w : ball.nodes) b_sup = std::max(b_sup, model.b(Vec3(x + t * k / 5.0 * w)));

  // sup_ω|∂_θp| is invariant under rotations about e₃ in ξ, so the ξ-integral
  // reduces to (r, z) with weight 2πr.
  const Rule1D rr = gauss_legendre(n_r, 0.0, R_xi);
  const Rule1D rz = gauss_legendre(n_z, -R_xi, R_xi);
  double integral = 0.0;
  for (int i = 0; i < n_r; ++i)
    for (int j = 0; j < n_z; ++j) {
      const double r = rr.nodes[i], z = rz.nodes[j];
      const double rad = std::hypot(r, z);
      if (rad >= R_xi) continue;
      const double mp = std::abs(M.M_prime(rad));
      if (mp == 0.0) continue;
      const Vec3 xi(r, 0.0, z);
      const double sup = sup_on_sphere(
          [&](const Vec3& w) { return (symbol_p_dxi(1.0, w, xi) * perp(xi)).norm(); }, 24);
      integral += rr.weights[i] * rz.weights[j] * 2.0 * pi * r * mp / bracket(xi) * sup;
    }
  out.C_T = t * t / 3.0 * b_sup * integral;
  out.value = out.C_T * out.history_integral;
  return out;
}

std::vector<LipschitzRow> lipschitz_growth_probe(const MagneticFieldModel& model, const InitialData& data,
                                                 const std::vector<double>& eps_list, double t,
                                                 const std::vector<PhaseState>& probes,
                                                 const IntegratorConfig& config) {
  std::vector<LipschitzRow> rows;
  for (double eps : eps_list) {
    IntegratorConfig cfg = config;
    cfg.epsilon = eps;
    LipschitzRow row;
    row.eps = eps;
    for (const PhaseState& z : probes) {
      const FlowJacobian fj = flow_jacobian(model, z, -t, cfg, Flow::linear);
      Vec6 w;
      w << fj.image.x, fj.image.xi;
      const Vec6 g = data.gradient(fj.image.x, fj.image.xi);
      const Vec6 V = flow_vector_field(model, Flow::linear, eps, 0.0, w);
      row.sup_dt = std::max(row.sup_dt, std::abs(g.dot(V)));
      const Vec6 gz = fj.J.transpose() * g;
      row.sup_dxi = std::max(row.sup_dxi, gz.tail<3>().norm());
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gyrokit
