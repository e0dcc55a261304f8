#pragma once

#include "gyrokit/field_models.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace gyrokit {

enum class Scheme { exact_rotation_splitting, rk4_reference };

// linear: Ẋ = Ξ/⟨Ξ⟩, Ξ̇ = −(b_e/ε⟨Ξ⟩) Ξ×e₃ (fixed direction).
// straightened: Ẋ = OΞ/⟨Ξ⟩, Ξ̇ = Q/⟨Ξ⟩ − (b_e/ε⟨Ξ⟩) Ξ×e₃ − ε(OᵗE + v×OᵗB).
// full: Ẋ = v(P), Ṗ = −ε⁻¹ v×B_e − ε(E + v×B).
enum class Flow { linear, straightened, full };

struct IntegratorConfig {
  Scheme scheme = Scheme::exact_rotation_splitting;
  int steps_per_gyroperiod = 64;
  double t_final = 1.0;
  double epsilon = 0.1;

  void validate() const;
};

using TimeField = std::function<Vec3(double t, const Vec3& x)>;

// Internal fields (E, B); either may be left empty.
struct InternalFields {
  TimeField E;
  TimeField B;

  bool empty() const { return !E && !B; }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseState> states;
  double invariant_drift = 0.0;
  IntegratorConfig config;
  Flow flow = Flow::linear;
};

// Output times default to 101 uniform samples of [0, t_final]. Explicit
// times must start at 0 and increase strictly.
Trajectory integrate_linear(const MagneticFieldModel& model, const PhaseState& state, const IntegratorConfig& config,
                            const std::vector<double>& times = {});
Trajectory integrate_straightened(const MagneticFieldModel& model, const PhaseState& state,
                                  const IntegratorConfig& config, const InternalFields& fields = {},
                                  const std::vector<double>& times = {});
Trajectory integrate_full(const MagneticFieldModel& model, const PhaseState& state, const IntegratorConfig& config,
                          const InternalFields& fields = {}, const std::vector<double>& times = {});

// State at time t1 of the flow started at time t0 (t1 < t0 allowed).
// `drift` receives the max | |Ξ| − |ξ| | along the way when non-null.
PhaseState propagate(const MagneticFieldModel& model, Flow flow, const PhaseState& state, double t0, double t1,
                     const IntegratorConfig& config, const InternalFields& fields = {}, double* drift = nullptr);

// F_{−t}(state).
PhaseState backward_flow(const MagneticFieldModel& model, const PhaseState& state, double t,
                         const IntegratorConfig& config, Flow flow = Flow::linear);

struct FlowJacobian {
  Mat6 J;
  double det = 1.0;
  PhaseState image;
};

// Tangent map of the discrete flow over time t (negative for backward),
// propagated with forward-mode jets through the splitting. Supported for
// the linear and full flows without internal fields.
FlowJacobian flow_jacobian(const MagneticFieldModel& model, const PhaseState& state, double t,
                           const IntegratorConfig& config, Flow flow = Flow::linear);

// R⁰ + εC∫₀ᵗ ||E(s)|| ds by the trapezoid rule on the sampled history.
double support_radius_bound(double R0, const std::vector<double>& times, const std::vector<double>& E_norms,
                            double eps, double C);

// Right-hand side of the chosen flow, used by the reference scheme and by
// transport diagnostics.
Vec6 flow_vector_field(const MagneticFieldModel& model, Flow flow, double eps, double t, const Vec6& z,
                       const InternalFields& fields = {});

void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace gyrokit
