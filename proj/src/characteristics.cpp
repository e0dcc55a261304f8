#include "gyrokit/characteristics.hpp"

#include "gyrokit/straightening.hpp"

#include <fmt/format.h>

#include <ostream>
#include <type_traits>

namespace gyrokit {

namespace {
PhaseState propagate_with_period(const MagneticFieldModel& m, Flow flow, const PhaseState& s, double t0, double t1,
                                 const IntegratorConfig& cfg, const InternalFields& fields, double* drift,
                                 double period);
}  // namespace

void IntegratorConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError(fmt::format("epsilon = {} outside (0, 1]", epsilon));
  if (steps_per_gyroperiod < 1) throw DomainError("steps_per_gyroperiod must be positive");
  if (scheme == Scheme::rk4_reference && steps_per_gyroperiod < 16)
    throw DomainError("rk4-reference needs steps_per_gyroperiod >= 16");
}

namespace {

// Displacement over time s and rotated momentum for the helix with angular
// rate w about the unit axis n (counter-clockwise), momentum P at s = 0.
template <class T>
void helix(const V3<T>& P, const V3<T>& n, const T& w, double s, V3<T>& integral, V3<T>& rotated) {
  using std::cos;
  using std::sin;
  const T par = n.dot(P);
  const V3<T> Ppar = par * n;
  const V3<T> Pperp = P - Ppar;
  const V3<T> nxP = n.cross(Pperp);
  const T phi = w * s;
  const T sp = sin(phi);
  const T cp = cos(phi);
  const T half = sin(0.5 * phi);
  rotated = Ppar + cp * Pperp + sp * nxP;
  integral = s * Ppar + (sp / w) * Pperp + (2.0 * half * half / w) * nxP;
}

// Same about e₃, written out to keep the fixed-direction case exact.
template <class T>
void helix_e3(const V3<T>& P, const T& w, double s, V3<T>& integral, V3<T>& rotated) {
  using std::cos;
  using std::sin;
  const T phi = w * s;
  const T sp = sin(phi);
  const T cp = cos(phi);
  const T half = sin(0.5 * phi);
  const T omc = 2.0 * half * half;
  rotated = V3<T>(cp * P[0] - sp * P[1], sp * P[0] + cp * P[1], P[2]);
  integral = V3<T>((sp * P[0] - omc * P[1]) / w, (omc * P[0] + sp * P[1]) / w, s * P[2]);
}

// Stiff substep: the helix with coefficients frozen at the implicit
// midpoint X_m = X + ½-step displacement, found by fixed-point iteration.
template <class T>
void helix_substep(const MagneticFieldModel& m, Flow flow, double eps, double h, V3<T>& X, V3<T>& P) {
  const T gamma = bracket(P);
  auto advance = [&](const V3<T>& Xm, double s, V3<T>& rotated) -> V3<T> {
    V3<T> integral;
    if (flow == Flow::full) {
      const V3<T> B = field_B(m, Xm);
      const T b = B.norm();
      helix<T>(P, V3<T>(B / b), T(b / (eps * gamma)), s, integral, rotated);
      return integral / gamma;
    }
    const T b = field_b(m, Xm);
    helix_e3<T>(P, T(b / (eps * gamma)), s, integral, rotated);
    if (flow == Flow::straightened) {
      if constexpr (std::is_same_v<T, double>) {
        return rotation_at(m, Xm).transpose() * integral / gamma;
      } else {
        throw DomainError("tangent maps of the straightened flow are not supported");
      }
    }
    return integral / gamma;
  };
  V3<T> rotated;
  V3<T> Xm = X;
  const double tol = 4e-16 * std::max(1.0, value_of(X).norm());
  for (int it = 0; it < 40; ++it) {
    const V3<T> next = X + advance(Xm, 0.5 * h, rotated);
    const double change = (value_of(next) - value_of(Xm)).norm();
    Xm = next;
    if (it >= 2 && change <= tol) break;
  }
  X += advance(Xm, h, rotated);
  P = rotated;
}

bool has_nonstiff(Flow flow, const InternalFields& fields) {
  return flow == Flow::straightened || !fields.empty();
}

Vec3 nonstiff_rhs(const MagneticFieldModel& m, Flow flow, double eps, double t, const Vec3& X, const Vec3& P,
                  const StraightenedFrame* frame, const InternalFields& fields) {
  Vec3 out = Vec3::Zero();
  const Vec3 v = relativistic_velocity(P);
  if (flow == Flow::straightened) {
    out += frame->drift(P) / bracket(P);
    const Mat3 Ot = frame->O.transpose();
    if (fields.E) out -= eps * (Ot * fields.E(t, X));
    if (fields.B) out -= eps * v.cross(Ot * fields.B(t, X));
  } else {
    if (fields.E) out -= eps * fields.E(t, X);
    if (fields.B) out -= eps * v.cross(fields.B(t, X));
  }
  (void)m;
  return out;
}

// Non-stiff substep at frozen X: implicit midpoint, which keeps |P| when
// only the drift acts since P·Q = 0.
void nonstiff_substep(const MagneticFieldModel& m, Flow flow, double eps, double t, double tau, const Vec3& X, Vec3& P,
                      const InternalFields& fields) {
  StraightenedFrame frame;
  if (flow == Flow::straightened) frame = StraightenedFrame::at(m, X);
  const double tm = t + 0.5 * tau;
  Vec3 next = P;
  for (int it = 0; it < 60; ++it) {
    const Vec3 mid = 0.5 * (P + next);
    const Vec3 cand = P + tau * nonstiff_rhs(m, flow, eps, tm, X, mid, &frame, fields);
    const double change = (cand - next).norm();
    next = cand;
    if (change <= 1e-16 * std::max(1.0, next.norm())) break;
  }
  P = next;
}

void split_step(const MagneticFieldModel& m, Flow flow, double eps, double t, double h, Vec3& X, Vec3& P,
                const InternalFields& fields) {
  const bool ns = has_nonstiff(flow, fields);
  if (ns) nonstiff_substep(m, flow, eps, t, 0.5 * h, X, P, fields);
  helix_substep<double>(m, flow, eps, h, X, P);
  if (ns) nonstiff_substep(m, flow, eps, t + 0.5 * h, 0.5 * h, X, P, fields);
}

void rk4_step(const MagneticFieldModel& m, Flow flow, double eps, double t, double h, Vec3& X, Vec3& P,
              const InternalFields& fields) {
  Vec6 z;
  z << X, P;
  const Vec6 k1 = flow_vector_field(m, flow, eps, t, z, fields);
  const Vec6 k2 = flow_vector_field(m, flow, eps, t + 0.5 * h, z + 0.5 * h * k1, fields);
  const Vec6 k3 = flow_vector_field(m, flow, eps, t + 0.5 * h, z + 0.5 * h * k2, fields);
  const Vec6 k4 = flow_vector_field(m, flow, eps, t + h, z + h * k3, fields);
  z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  X = z.head<3>();
  P = z.tail<3>();
}

double gyroperiod(const MagneticFieldModel& m, const PhaseState& s, double eps) {
  const double b = m.b(s.x);
  if (!(b > 0.0)) throw DomainError(fmt::format("b_e vanishes at ({}, {}, {})", s.x[0], s.x[1], s.x[2]));
  return 2.0 * pi * eps * bracket(s.xi) / b;
}

// Steps over an interval: a multiple of steps_per_gyroperiod so that doubling
// the resolution halves every step exactly.
long substeps(double dt, double period, int per_period) {
  if (dt == 0.0) return 0;
  const double periods = std::abs(dt) / period;
  return static_cast<long>(per_period) * std::max(1L, static_cast<long>(std::ceil(periods - 1e-9)));
}

void check_flow(const MagneticFieldModel& m, Flow flow) {
  if (flow == Flow::linear && m.kind() == FieldKind::general_direction)
    throw DomainError("the linear flow needs a constant or fixed-direction model");
}

std::vector<double> default_times(double t_final) {
  std::vector<double> out(101);
  for (int i = 0; i <= 100; ++i) out[i] = t_final * i / 100.0;
  return out;
}

Trajectory integrate(const MagneticFieldModel& m, Flow flow, const PhaseState& s, const IntegratorConfig& cfg,
                     const InternalFields& fields, const std::vector<double>& times_in) {
  cfg.validate();
  check_flow(m, flow);
  const std::vector<double> times = times_in.empty() ? default_times(cfg.t_final) : times_in;
  if (times.front() != 0.0) throw DomainError("output times must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("output times must increase strictly");
  Trajectory traj;
  traj.config = cfg;
  traj.flow = flow;
  traj.times = times;
  traj.states.reserve(times.size());
  traj.states.push_back(s);
  PhaseState cur = s;
  const double period = gyroperiod(m, s, cfg.epsilon);
  for (std::size_t i = 1; i < times.size(); ++i) {
    double drift = 0.0;
    cur = propagate_with_period(m, flow, cur, times[i - 1], times[i], cfg, fields, &drift, period);
    traj.states.push_back(cur);
  }
  const double n0 = s.xi.norm();
  for (const auto& st : traj.states) traj.invariant_drift = std::max(traj.invariant_drift, std::abs(st.xi.norm() - n0));
  return traj;
}

}  // namespace

Vec6 flow_vector_field(const MagneticFieldModel& m, Flow flow, double eps, double t, const Vec6& z,
                       const InternalFields& fields) {
  const Vec3 X = z.head<3>();
  const Vec3 P = z.tail<3>();
  const double g = bracket(P);
  const Vec3 v = P / g;
  Vec6 out;
  switch (flow) {
    case Flow::linear: {
      out << v, -(m.b(X) / (eps * g)) * Vec3(P[1], -P[0], 0.0);
      if (!fields.empty()) out.tail<3>() += nonstiff_rhs(m, flow, eps, t, X, P, nullptr, fields);
      break;
    }
    case Flow::straightened: {
      const StraightenedFrame frame = StraightenedFrame::at(m, X);
      out << frame.O * v, -(m.b(X) / (eps * g)) * Vec3(P[1], -P[0], 0.0) +
                              nonstiff_rhs(m, flow, eps, t, X, P, &frame, fields);
      break;
    }
    case Flow::full: {
      out << v, -v.cross(m.B(X)) / eps + nonstiff_rhs(m, flow, eps, t, X, P, nullptr, fields);
      break;
    }
  }
  return out;
}

PhaseState propagate(const MagneticFieldModel& m, Flow flow, const PhaseState& s, double t0, double t1,
                     const IntegratorConfig& cfg, const InternalFields& fields, double* drift) {
  return propagate_with_period(m, flow, s, t0, t1, cfg, fields, drift, gyroperiod(m, s, cfg.epsilon));
}

namespace {

PhaseState propagate_with_period(const MagneticFieldModel& m, Flow flow, const PhaseState& s, double t0, double t1,
                                 const IntegratorConfig& cfg, const InternalFields& fields, double* drift,
                                 double period) {
  const long n = substeps(t1 - t0, period, cfg.steps_per_gyroperiod);
  Vec3 X = s.x;
  Vec3 P = s.xi;
  const double n0 = P.norm();
  double worst = 0.0;
  for (long k = 0; k < n; ++k) {
    const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n);
    const double h = (t1 - t0) / static_cast<double>(n);
    if (cfg.scheme == Scheme::rk4_reference)
      rk4_step(m, flow, cfg.epsilon, t, h, X, P, fields);
    else
      split_step(m, flow, cfg.epsilon, t, h, X, P, fields);
    if (!X.allFinite() || !P.allFinite())
      throw EvaluationError(fmt::format("integration produced a non-finite state at t = {}", t + h));
    worst = std::max(worst, std::abs(P.norm() - n0));
  }
  if (drift) *drift = worst;
  return {X, P};
}

}  // namespace

Trajectory integrate_linear(const MagneticFieldModel& model, const PhaseState& state, const IntegratorConfig& config,
                            const std::vector<double>& times) {
  return integrate(model, Flow::linear, state, config, {}, times);
}

Trajectory integrate_straightened(const MagneticFieldModel& model, const PhaseState& state,
                                  const IntegratorConfig& config, const InternalFields& fields,
                                  const std::vector<double>& times) {
  return integrate(model, Flow::straightened, state, config, fields, times);
}

Trajectory integrate_full(const MagneticFieldModel& model, const PhaseState& state, const IntegratorConfig& config,
                          const InternalFields& fields, const std::vector<double>& times) {
  return integrate(model, Flow::full, state, config, fields, times);
}

PhaseState backward_flow(const MagneticFieldModel& model, const PhaseState& state, double t,
                         const IntegratorConfig& config, Flow flow) {
  config.validate();
  check_flow(model, flow);
  return propagate(model, flow, state, 0.0, -t, config);
}

FlowJacobian flow_jacobian(const MagneticFieldModel& model, const PhaseState& state, double t,
                           const IntegratorConfig& config, Flow flow) {
  config.validate();
  check_flow(model, flow);
  if (flow == Flow::straightened) throw DomainError("flow_jacobian supports the linear and full flows");
  if (config.scheme != Scheme::exact_rotation_splitting) throw DomainError("flow_jacobian uses the splitting scheme");
  V3<Jet6> X;
  V3<Jet6> P;
  for (int i = 0; i < 3; ++i) {
    X[i] = Jet6(state.x[i], Vec6::Unit(i));
    P[i] = Jet6(state.xi[i], Vec6::Unit(3 + i));
  }
  const long n = substeps(t, gyroperiod(model, state, config.epsilon), config.steps_per_gyroperiod);
  const double h = n > 0 ? t / static_cast<double>(n) : 0.0;
  for (long k = 0; k < n; ++k) helix_substep<Jet6>(model, flow, config.epsilon, h, X, P);
  FlowJacobian out;
  for (int i = 0; i < 3; ++i) {
    out.J.row(i) = X[i].derivatives().transpose();
    out.J.row(3 + i) = P[i].derivatives().transpose();
  }
  out.det = out.J.determinant();
  out.image = {value_of(X), value_of(P)};
  return out;
}

double support_radius_bound(double R0, const std::vector<double>& times, const std::vector<double>& E_norms,
                            double eps, double C) {
  if (R0 < 0.0 || eps < 0.0 || C < 0.0) throw DomainError("support_radius_bound: negative input");
  if (times.size() != E_norms.size()) throw DomainError("support_radius_bound: history size mismatch");
  double integral = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (E_norms[i] < 0.0 || E_norms[i - 1] < 0.0) throw DomainError("support_radius_bound: negative field norm");
    integral += 0.5 * (times[i] - times[i - 1]) * (E_norms[i] + E_norms[i - 1]);
  }
  return R0 + eps * C * integral;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "t,x1,x2,x3,xi1,xi2,xi3,norm_drift\n";
  const double n0 = traj.states.front().xi.norm();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const auto& s = traj.states[i];
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", traj.times[i], s.x[0],
                       s.x[1], s.x[2], s.xi[0], s.xi[1], s.xi[2], s.xi.norm() - n0);
  }
}

}  // namespace gyrokit
