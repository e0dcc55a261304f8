#include "gyrokit/asymptotics.hpp"

#include "gyrokit/straightening.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

namespace gyrokit {

namespace {

void require_fixed(const MagneticFieldModel& model) {
  if (model.kind() == FieldKind::general_direction)
    throw DomainError("fixed-direction approximation needs a constant or fixed-direction model");
}

}  // namespace

double phase_phi(const MagneticFieldModel& model, double t, const Vec3& x, const Vec3& xi, double eps) {
  const double b = model.b(x);
  const Vec3 g = model.grad_b(x);
  const double gam = bracket(xi);
  const Vec3 xb = horizontal(xi);
  const Vec3 xp = perp(xi);
  const Vec3 bracketed = t * xp / b - t * t * g.dot(xp) / (4.0 * gam * b * b) * xb + t * t * g.dot(xb) / (4.0 * gam * b * b) * xp;
  return b * t - eps * g.dot(bracketed);
}

PhiDerivatives phase_phi_derivatives(const MagneticFieldModel& model, double t, const Vec3& x, const Vec3& xi,
                                     double eps) {
  // The two t² terms cancel identically after the dot product with ∇b, so
  // Φ = b t − ε t ∇b·ξ^⊥/b for the derivatives.
  const double b = model.b(x);
  const Vec3 g = model.grad_b(x);
  const Mat3 H = model.hess_b(x);
  const Vec3 xp = perp(xi);
  PhiDerivatives d;
  d.value = phase_phi(model, t, x, xi, eps);
  d.dt = b - eps * g.dot(xp) / b;
  d.dx = t * g - eps * t * (H * xp / b - g.dot(xp) * g / (b * b));
  return d;
}

Vec3 remainder_r_eps(const MagneticFieldModel& model, double t, const Vec3& x, const Vec3& xi, double eps,
                     DriftSign sign) {
  const double b = model.b(x);
  const Vec3 g = model.grad_b(x);
  const double gam = bracket(xi);
  const Vec3 xb = horizontal(xi);
  const Vec3 xp = perp(xi);
  const double ph = phase_phi(model, t, x, xi, eps) / (eps * gam);
  const Vec3 gyration = (std::sin(ph) * xb + std::cos(ph) * xp - xp) / b;
  const double k = t / (2.0 * gam * b * b);
  const Vec3 drift = k * (g.dot(xb) * xp - g.dot(xp) * xb);
  return sign == DriftSign::gradient_drift ? Vec3(gyration + drift) : Vec3(gyration - drift);
}

Vec3 x_approx(const MagneticFieldModel& model, double t, const Vec3& x, const Vec3& xi, double eps, DriftSign sign) {
  return x + t * xi[2] / bracket(xi) * Vec3::UnitZ() + eps * remainder_r_eps(model, t, x, xi, eps, sign);
}

Vec3 xi_approx(const MagneticFieldModel& model, double t, const Vec3& x, const Vec3& xi, double eps) {
  const double ph = phase_phi(model, t, x, xi, eps) / (eps * bracket(xi));
  return std::cos(ph) * horizontal(xi) - std::sin(ph) * perp(xi) + Vec3(0.0, 0.0, xi[2]);
}

ApproxError approx_error_fixed(const MagneticFieldModel& model, const PhaseState& state, double eps,
                               const std::vector<double>& t_grid, const IntegratorConfig& config, DriftSign sign) {
  require_fixed(model);
  IntegratorConfig ref = config;
  ref.epsilon = eps;
  ref.steps_per_gyroperiod = 8 * config.steps_per_gyroperiod;
  const Trajectory tr = integrate_linear(model, state, ref, t_grid);
  ApproxError e;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double t = tr.times[i];
    e.err_x = std::max(e.err_x, (tr.states[i].x - x_approx(model, t, state.x, state.xi, eps, sign)).norm());
    e.err_xi = std::max(e.err_xi, (tr.states[i].xi - xi_approx(model, t, state.x, state.xi, eps)).norm());
  }
  return e;
}

SlopeFit convergence_order(const std::vector<std::pair<double, double>>& errors) {
  if (errors.size() < 2) throw DomainError("convergence_order: need at least two points");
  const std::size_t n = errors.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(errors[i].first > 0.0) || !(errors[i].second > 0.0))
      throw DomainError(fmt::format("convergence_order: non-positive entry ({}, {})", errors[i].first, errors[i].second));
    lx[i] = std::log(errors[i].first);
    ly[i] = std::log(errors[i].second);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("convergence_order: all epsilon values coincide");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ly[i] - fit.intercept - fit.slope * lx[i];
      ssr += r * r;
    }
    const double se = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    const boost::math::students_t dist(static_cast<double>(n - 2));
    fit.half_width_95 = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  }
  return fit;
}

PolarState PolarState::from(const PhaseState& s) {
  return {s.x, std::hypot(s.xi[0], s.xi[1]), std::atan2(s.xi[1], s.xi[0]), s.xi[2]};
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * pi);
  if (w <= -pi) w += 2.0 * pi;
  return w;
}

namespace {

using Rhs6 = Eigen::Matrix<double, 6, 1>;

Rhs6 slow_rhs_in_frame(const StraightenedFrame& frame, const Slow& u, double gamma, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Vec3 xi(u[3] * c, u[3] * s, u[4]);
  const Vec3 Q = frame.drift(xi);
  Rhs6 out;
  out.head<3>() = frame.O * xi / gamma;
  out[3] = (c * Q[0] + s * Q[1]) / gamma;
  out[4] = Q[2] / gamma;
  out[5] = (-s * Q[0] + c * Q[1]) / (u[3] * gamma);
  return out;
}

GyroModes modes_in_frame(const StraightenedFrame& frame, const Slow& u, double gamma) {
  constexpr int M = 8;
  GyroModes out;
  for (auto& c : out.c) c.setZero();
  for (int j = 0; j < M; ++j) {
    const double th = 2.0 * pi * j / M;
    const Rhs6 f = slow_rhs_in_frame(frame, u, gamma, th);
    for (int n = -kGyroModes; n <= kGyroModes; ++n)
      out.c[static_cast<std::size_t>(n + kGyroModes)] += f.cast<cplx>() * std::polar(1.0 / M, -n * th);
  }
  return out;
}

// Everything the averaged vector fields need at one slow point.
struct SlowPoint {
  GyroModes modes;
  double omega;
  Vec3 grad_omega;
};

SlowPoint slow_point(const MagneticFieldModel& m, const Slow& u, double gamma) {
  const Vec3 x = u.head<3>();
  const StraightenedFrame frame = StraightenedFrame::at(m, x);
  return {modes_in_frame(frame, u, gamma), m.b(x) / gamma, m.grad_b(x) / gamma};
}

Slow mean_part(const GyroModes& g) { return g.mode(0).head<5>().real(); }

Slow first_corrector(const SlowPoint& p, double theta) {
  Slow w = Slow::Zero();
  for (int n = 1; n <= kGyroModes; ++n) {
    const cplx factor = std::polar(1.0, n * theta) / (cplx(0.0, n) * p.omega);
    w += 2.0 * (p.modes.mode(n).head<5>() * factor).real();
  }
  return w;
}

Slow second_order_mean(const MagneticFieldModel& m, const Slow& u, double gamma, const SlowPoint& p) {
  constexpr int K = 16;
  const Slow mean = mean_part(p.modes);
  Slow acc = Slow::Zero();
  for (int k = 0; k < K; ++k) {
    const double th = 2.0 * pi * k / K;
    const Slow w = first_corrector(p, th);
    const double scale = std::max(1e-12, w.norm());
    const double d = 1e-3 / scale;
    auto F = [&](double s) {
      const Slow us = u + s * w;
      return Slow(slow_rhs_in_frame(StraightenedFrame::at(m, us.head<3>()), us, gamma, th).head<5>());
    };
    const Slow dF = (-F(2 * d) + 8.0 * F(d) - 8.0 * F(-d) + F(-2 * d)) / (12.0 * d);
    const Rhs6 f = p.modes.evaluate(th);
    const Slow osc = f.head<5>() - mean;
    const double G = f[5];
    acc += dF - (p.grad_omega.dot(w.head<3>()) / p.omega) * osc - (G / p.omega) * osc;
  }
  return acc / K;
}

// State of the averaged ODEs: U₁, Ũ₂, Θ₁.
using Averaged = Eigen::Matrix<double, 11, 1>;

Averaged averaged_rhs(const MagneticFieldModel& m, const Averaged& y, double gamma, double eps) {
  const Slow u1 = y.head<5>();
  const Slow u2 = y.segment<5>(5);
  const SlowPoint p1 = slow_point(m, u1, gamma);
  const SlowPoint p2 = slow_point(m, u2, gamma);
  Averaged out;
  out.head<5>() = mean_part(p1.modes);
  out.segment<5>(5) = mean_part(p2.modes) + eps * second_order_mean(m, u2, gamma, p2);
  out[10] = p2.omega / eps + p1.modes.mode(0)[5].real();
  return out;
}

}  // namespace

Eigen::Matrix<double, 6, 1> GyroModes::evaluate(double theta) const {
  Coeffs acc = Coeffs::Zero();
  for (int n = -kGyroModes; n <= kGyroModes; ++n) acc += mode(n) * std::polar(1.0, n * theta);
  return acc.real();
}

Eigen::Matrix<double, 6, 1> polar_slow_rhs(const MagneticFieldModel& model, const Slow& u, double gamma,
                                           double theta) {
  return slow_rhs_in_frame(StraightenedFrame::at(model, u.head<3>()), u, gamma, theta);
}

GyroModes fourier_split_rhs(const MagneticFieldModel& model, const Slow& u, double gamma) {
  return modes_in_frame(StraightenedFrame::at(model, u.head<3>()), u, gamma);
}

GeneralAveraged averaged_flow_general(const MagneticFieldModel& model, const PolarState& state, double eps,
                                      const std::vector<double>& t_grid, double max_step) {
  if (!(state.r > 0.0)) throw DomainError("averaged_flow_general: needs perpendicular momentum r > 0");
  if (t_grid.empty() || t_grid.front() != 0.0) throw DomainError("averaged_flow_general: t_grid must start at 0");
  const double gamma = std::sqrt(1.0 + state.r * state.r + state.z * state.z);
  Slow u0;
  u0 << state.x, state.r, state.z;
  const SlowPoint p0 = slow_point(model, u0, gamma);
  Averaged y;
  y << u0, u0 - eps * first_corrector(p0, state.theta), state.theta;

  GeneralAveraged out;
  auto record = [&](double t) {
    const Slow u2t = y.segment<5>(5);
    out.times.push_back(t);
    out.u1.push_back(y.head<5>());
    out.u2_tilde.push_back(u2t);
    out.theta1.push_back(y[10]);
    out.u2.push_back(u2t + eps * first_corrector(slow_point(model, u2t, gamma), y[10]));
  };
  record(0.0);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double dt = t_grid[i] - t_grid[i - 1];
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(dt) / max_step - 1e-9)));
    const double h = dt / n;
    for (int k = 0; k < n; ++k) {
      const Averaged k1 = averaged_rhs(model, y, gamma, eps);
      const Averaged k2 = averaged_rhs(model, y + 0.5 * h * k1, gamma, eps);
      const Averaged k3 = averaged_rhs(model, y + 0.5 * h * k2, gamma, eps);
      const Averaged k4 = averaged_rhs(model, y + h * k3, gamma, eps);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    record(t_grid[i]);
  }
  return out;
}

GeneralError approx_error_general(const MagneticFieldModel& model, const PolarState& state, double eps,
                                  const std::vector<double>& t_grid, const IntegratorConfig& config) {
  IntegratorConfig ref = config;
  ref.epsilon = eps;
  ref.steps_per_gyroperiod = 8 * config.steps_per_gyroperiod;
  const Trajectory tr = integrate_straightened(model, {state.x, state.xi()}, ref, {}, t_grid);
  const GeneralAveraged av = averaged_flow_general(model, state, eps, t_grid);
  GeneralError e;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const PolarState p = PolarState::from(tr.states[i]);
    Slow u;
    u << p.x, p.r, p.z;
    e.err_u = std::max(e.err_u, (u - av.u2[i]).norm());
    e.err_u1 = std::max(e.err_u1, (u - av.u1[i]).norm());
    e.err_theta = std::max(e.err_theta, std::abs(wrap_angle(p.theta - av.theta1[i])));
  }
  return e;
}

double diffeo_margin(const MagneticFieldModel& model, double eps, double t, const std::vector<PhaseState>& samples,
                     const IntegratorConfig& config) {
  require_fixed(model);
  IntegratorConfig cfg = config;
  cfg.epsilon = eps;
  double worst = 0.0;
  for (const auto& s : samples) {
    const FlowJacobian fj = flow_jacobian(model, s, t, cfg, Flow::linear);
    const Mat3 D = fj.J.topLeftCorner<3, 3>() - Mat3::Identity();
    worst = std::max(worst, Eigen::JacobiSVD<Mat3>(D).singularValues()[0]);
  }
  return worst;
}

}  // namespace gyrokit
