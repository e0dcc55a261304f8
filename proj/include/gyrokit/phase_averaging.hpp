#pragma once

#include "gyrokit/asymptotics.hpp"
#include "gyrokit/quadrature.hpp"

#include <functional>
#include <vector>

namespace gyrokit {

// Which flow the phase is taken along. `backward` composes with the flow for
// time s − t as in the non-stationary-phase estimate; `forward` uses t − s.
enum class TimeDirection { backward, forward };

// How (U, Θ) along the ray is obtained: integrating the flow at every node,
// or from the closed-form approximation (Φ for fixed-direction models, the
// averaged system otherwise). `automatic` integrates for ε > 1e-3.
enum class PhaseEvaluation { automatic, true_flow, asymptotic };

struct OscillatoryIntegralSpec {
  std::function<double(double s, const Slow& u)> g;  // amplitude g(s, X, R, Z)
  int n = 1;
  double eps = 0.1;
  Vec3 omega = Vec3::UnitX();
  double t = 1.0;
  PhaseState state;
  TimeDirection direction = TimeDirection::backward;

  void validate() const;
};

struct OscillatoryOptions {
  PhaseEvaluation mode = PhaseEvaluation::automatic;
  int nodes_per_period = 64;
  IntegratorConfig integrator{};
};

// ∫₀ᵗ g(s, U) e^{inΘ} ds with (U, Θ) the polar state of the flow from
// (x − sω, ξ) for time s − t (backward) or t − s (forward). For n ≠ 0 the
// non-stationary threshold is required; n = 0 skips it and gives the plain
// mean.
cplx oscillatory_integral(const OscillatoryIntegralSpec& spec, const MagneticFieldModel& model,
                          const OscillatoryOptions& options = {});

struct ThresholdReport {
  double b_minus = 0.0;
  double grad_sup = 0.0;
  double slack = 0.0;  // b_− − t||∇b_e|| − (3/4)b_−
};

// b_− and ||∇b_e|| sampled on the ball |y − x| ≤ t.
ThresholdReport nonstationary_threshold(const MagneticFieldModel& model, const Vec3& x, double t);
// Throws PreconditionError unless b_− − t||∇b_e|| > (3/4) b_−.
void require_nonstationary_threshold(const MagneticFieldModel& model, const Vec3& x, double t);

// min over s ∈ [0,t] of |∂ₜΦ − ω·∇ₓΦ| at (s − t, x − sω) (backward) or
// |∂ₜΦ + ω·∇ₓΦ| at (t − s, x − sω) (forward). For general-direction models
// Φ is replaced by ε⟨ξ⟩(Θ₁ − θ) and differentiated numerically.
double phase_speed_margin(const MagneticFieldModel& model, const Vec3& omega, double t, const Vec3& x, const Vec3& xi,
                          double eps, TimeDirection direction = TimeDirection::backward, int samples = 201);

struct GyroFourier {
  int n_modes = 0;
  int samples = 0;
  std::vector<cplx> coeffs;  // index n + n_modes
  double decay_sum = 0.0;    // Σ_{n≠0} |f_n|/|n|

  cplx mode(int n) const { return coeffs[static_cast<std::size_t>(n + n_modes)]; }
  double reconstruct(double theta) const;
};

// f_n = (1/2π)∫ f(x, (r cos θ, r sin θ, z)) e^{−inθ} dθ by FFT over 2^k ≥ 4N angles.
GyroFourier gyro_fourier_coefficients(const PhaseFunction& f_in, double r, double z, const Vec3& x, int n_modes);

struct InitialTermQuadrature {
  CylindricalGrid momentum{1.0, 1.0, 6, 12, 6, 1};
  int sphere_polar = 4;
  int sphere_azimuth = 8;
  int nodes_per_period = 64;
  PhaseEvaluation mode = PhaseEvaluation::asymptotic;
  IntegratorConfig integrator{};
};

// ∫∫∫ s ∂_θp(1,ω,ξ)/(4π) · b_e(x − sω)/⟨ξ⟩ · f_in∘(X,Ξ)(s − t, x − sω, ξ) ds dω dξ
// with ∂_θ = ξ₂∂₁ − ξ₁∂₂.
Vec3 averaged_initial_term(const MagneticFieldModel& model, const PhaseFunction& f_in, double t, const Vec3& x,
                           double eps, const InitialTermQuadrature& quad = {});

}  // namespace gyrokit
