#include "gyrokit/phase_averaging.hpp"

#include "gyrokit/wave_kernel.hpp"

#include <unsupported/Eigen/FFT>
#include <fmt/format.h>

#include <algorithm>

namespace gyrokit {

void OscillatoryIntegralSpec::validate() const {
  if (!g) throw DomainError("oscillatory integral: amplitude g is empty");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError(fmt::format("oscillatory integral: eps = {}", eps));
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(fmt::format("oscillatory integral: t = {}", t));
  if (std::abs(omega.norm() - 1.0) > 1e-12) throw DomainError("oscillatory integral: omega must be a unit vector");
  if (!state.finite()) throw DomainError("oscillatory integral: non-finite state");
}

namespace {

bool use_asymptotic(PhaseEvaluation mode, double eps) {
  return mode == PhaseEvaluation::asymptotic || (mode == PhaseEvaluation::automatic && eps <= 1e-3);
}

// Slow part and unwrapped-or-not gyro-angle of the state reached from
// (y, ξ) after time tau. Only e^{inΘ} is used, so wrapping does not matter.
struct RayPoint {
  Slow u;
  double theta;
};

RayPoint ray_point(const MagneticFieldModel& model, const Vec3& y, const Vec3& xi, double tau, double eps,
                   bool asymptotic, const IntegratorConfig& integrator) {
  const bool fixed = model.kind() != FieldKind::general_direction;
  RayPoint p;
  if (asymptotic && fixed) {
    const Vec3 X = x_approx(model, tau, y, xi, eps);
    const Vec3 Xi = xi_approx(model, tau, y, xi, eps);
    p.u << X, std::hypot(Xi[0], Xi[1]), Xi[2];
    p.theta = std::atan2(xi[1], xi[0]) + phase_phi(model, tau, y, xi, eps) / (eps * bracket(xi));
    return p;
  }
  if (asymptotic) {
    const GeneralAveraged av = averaged_flow_general(model, PolarState::from({y, xi}), eps, {0.0, tau});
    p.u = av.u2.back();
    p.theta = av.theta1.back();
    return p;
  }
  IntegratorConfig cfg = integrator;
  cfg.epsilon = eps;
  const PhaseState end =
      propagate(model, fixed ? Flow::linear : Flow::straightened, {y, xi}, 0.0, tau, cfg);
  const PolarState ps = PolarState::from(end);
  p.u << ps.x, ps.r, ps.z;
  p.theta = ps.theta;
  return p;
}

double ray_time(TimeDirection d, double s, double t) { return d == TimeDirection::backward ? s - t : t - s; }

Rule1D phase_rule(double t, double period, int n, int nodes_per_period) {
  constexpr int order = 8;
  const double per_period = std::max(1, std::abs(n)) * static_cast<double>(nodes_per_period) / order;
  const int panels = std::max(1, static_cast<int>(std::ceil(t / period * per_period)));
  return composite_gauss(panels, order, 0.0, t);
}

}  // namespace

cplx oscillatory_integral(const OscillatoryIntegralSpec& spec, const MagneticFieldModel& model,
                          const OscillatoryOptions& options) {
  spec.validate();
  if (spec.n != 0) require_nonstationary_threshold(model, spec.state.x, spec.t);
  const bool asym = use_asymptotic(options.mode, spec.eps);
  const Vec3& x = spec.state.x;
  const Vec3& xi = spec.state.xi;
  const double period = 2.0 * pi * spec.eps * bracket(xi) / model.b(x);
  const Rule1D rule = phase_rule(spec.t, period, spec.n, options.nodes_per_period);
  cplx acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double s = rule.nodes[i];
    const RayPoint p =
        ray_point(model, x - s * spec.omega, xi, ray_time(spec.direction, s, spec.t), spec.eps, asym, options.integrator);
    const double amp = spec.g(s, p.u);
    if (!std::isfinite(amp)) throw EvaluationError(fmt::format("oscillatory integral: non-finite amplitude at s = {}", s));
    acc += rule.weights[i] * amp * std::polar(1.0, spec.n * p.theta);
  }
  return acc;
}

ThresholdReport nonstationary_threshold(const MagneticFieldModel& model, const Vec3& x, double t) {
  ThresholdReport r;
  r.b_minus = model.b(x);
  r.grad_sup = model.grad_b(x).norm();
  if (t > 0.0) {
    const SphericalQuadrature sphere = SphericalQuadrature::product(6, 12);
    for (int k = 1; k <= 5; ++k) {
      const double rad = t * k / 5.0;
      for (const Vec3& w : sphere.nodes) {
        const Vec3 y = x + rad * w;
        r.b_minus = std::min(r.b_minus, model.b(y));
        r.grad_sup = std::max(r.grad_sup, model.grad_b(y).norm());
      }
    }
  }
  r.slack = r.b_minus - t * r.grad_sup - 0.75 * r.b_minus;
  return r;
}

void require_nonstationary_threshold(const MagneticFieldModel& model, const Vec3& x, double t) {
  const ThresholdReport r = nonstationary_threshold(model, x, t);
  if (!(r.slack > 0.0))
    throw PreconditionError(fmt::format(
        "non-stationary phase threshold fails: b_- = {}, t*|grad b| = {}, need b_- - t|grad b| > 0.75 b_-", r.b_minus,
        t * r.grad_sup));
}

double phase_speed_margin(const MagneticFieldModel& model, const Vec3& omega, double t, const Vec3& x, const Vec3& xi,
                          double eps, TimeDirection direction, int samples) {
  if (samples < 2) throw DomainError("phase_speed_margin: samples must be at least 2");
  const double sign = direction == TimeDirection::backward ? 1.0 : -1.0;
  double margin = std::numeric_limits<double>::infinity();
  if (model.kind() != FieldKind::general_direction) {
    for (int i = 0; i < samples; ++i) {
      const double s = t * i / (samples - 1);
      const PhiDerivatives d = phase_phi_derivatives(model, ray_time(direction, s, t), x - s * omega, xi, eps);
      margin = std::min(margin, std::abs(sign * d.dt - omega.dot(d.dx)));
    }
    return margin;
  }
  // General direction: d/ds of ε⟨ξ⟩Θ₁ along the ray, each Θ₁ from its own
  // averaged run, so the sample count is capped.
  const int n = std::min(samples, 41);
  const double gam = bracket(xi);
  const double h = 1e-3 * std::max(t, 1e-3);
  auto phase = [&](double s) {
    const GeneralAveraged av =
        averaged_flow_general(model, PolarState::from({x - s * omega, xi}), eps, {0.0, ray_time(direction, s, t)});
    return eps * gam * av.theta1.back();
  };
  for (int i = 0; i < n; ++i) {
    const double s = t * i / (n - 1);
    const double lo = std::max(0.0, s - h);
    const double hi = std::min(t, s + h);
    margin = std::min(margin, std::abs((phase(hi) - phase(lo)) / (hi - lo)));
  }
  return margin;
}

double GyroFourier::reconstruct(double theta) const {
  cplx acc = 0.0;
  for (int n = -n_modes; n <= n_modes; ++n) acc += mode(n) * std::polar(1.0, n * theta);
  return acc.real();
}

GyroFourier gyro_fourier_coefficients(const PhaseFunction& f_in, double r, double z, const Vec3& x, int n_modes) {
  if (n_modes < 0) throw DomainError("gyro_fourier_coefficients: n_modes must be non-negative");
  int M = 8;
  while (M < 4 * n_modes) M *= 2;
  std::vector<cplx> samples(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) {
    const double th = 2.0 * pi * j / M;
    const double v = f_in(x, Vec3(r * std::cos(th), r * std::sin(th), z));
    if (!std::isfinite(v)) throw EvaluationError("gyro_fourier_coefficients: non-finite sample");
    samples[static_cast<std::size_t>(j)] = v;
  }
  Eigen::FFT<double> fft;
  std::vector<cplx> spec;
  fft.fwd(spec, samples);
  GyroFourier out;
  out.n_modes = n_modes;
  out.samples = M;
  out.coeffs.resize(static_cast<std::size_t>(2 * n_modes + 1));
  for (int n = -n_modes; n <= n_modes; ++n) {
    const cplx c = spec[static_cast<std::size_t>((n + M) % M)] / static_cast<double>(M);
    out.coeffs[static_cast<std::size_t>(n + n_modes)] = c;
    if (n != 0) out.decay_sum += std::abs(c) / std::abs(n);
  }
  return out;
}

Vec3 averaged_initial_term(const MagneticFieldModel& model, const PhaseFunction& f_in, double t, const Vec3& x,
                           double eps, const InitialTermQuadrature& quad) {
  if (!(t > 0.0)) throw DomainError("averaged_initial_term: t must be positive");
  if (!(eps > 0.0)) throw DomainError("averaged_initial_term: eps must be positive");
  require_nonstationary_threshold(model, x, t);
  const bool asym = use_asymptotic(quad.mode, eps);
  const auto momentum = quad.momentum.nodes();
  const SphericalQuadrature sphere = SphericalQuadrature::product(quad.sphere_polar, quad.sphere_azimuth);

  Vec3 acc = Vec3::Zero();
  for (const auto& m : momentum) {
    const Vec3 xi = m.xi();
    const double gam = bracket(xi);
    const double period = 2.0 * pi * eps * gam / model.b(x);
    const Rule1D rule = phase_rule(t, period, 1, quad.nodes_per_period);
    for (std::size_t j = 0; j < sphere.size(); ++j) {
      const Vec3& w = sphere.nodes[j];
      const Vec3 dtheta = symbol_p_dxi(1.0, w, xi) * perp(xi);
      Vec3 inner = Vec3::Zero();
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double s = rule.nodes[i];
        const Vec3 y = x - s * w;
        const double tau = s - t;
        double fv;
        if (asym && model.kind() != FieldKind::general_direction) {
          fv = f_in(x_approx(model, tau, y, xi, eps), xi_approx(model, tau, y, xi, eps));
        } else if (asym) {
          const GeneralAveraged av = averaged_flow_general(model, PolarState::from({y, xi}), eps, {0.0, tau});
          const Slow& u = av.u2.back();
          const double th = av.theta1.back();
          fv = f_in(u.head<3>(), Vec3(u[3] * std::cos(th), u[3] * std::sin(th), u[4]));
        } else {
          IntegratorConfig cfg = quad.integrator;
          cfg.epsilon = eps;
          const Flow flow = model.kind() != FieldKind::general_direction ? Flow::linear : Flow::straightened;
          const PhaseState end = propagate(model, flow, {y, xi}, 0.0, tau, cfg);
          fv = f_in(end.x, end.xi);
        }
        inner += rule.weights[i] * s * model.b(y) * fv * dtheta;
      }
      acc += m.weight * sphere.weights[j] / (4.0 * pi * gam) * inner;
    }
  }
  if (!acc.allFinite()) throw EvaluationError("averaged_initial_term: non-finite result");
  return acc;
}

}  // namespace gyrokit
