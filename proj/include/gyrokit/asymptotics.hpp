#pragma once

#include "gyrokit/characteristics.hpp"

#include <array>
#include <utility>
#include <vector>

namespace gyrokit {

// Sign of the t-linear drift terms in R_ε. `gradient_drift` is the
// guiding-centre drift ε t |ξ̄|² (∇b_e × e₃)/(2⟨ξ⟩b_e²), which gives the second
// order X error; `reversed` flips it and only reaches first order.
enum class DriftSign { gradient_drift, reversed };

// Φ(t,x,ξ) = b t − ε∇b·( tξ^⊥/b − t²(∇b·ξ^⊥)ξ̄/(4⟨ξ⟩b²) + t²(∇b·ξ̄)ξ^⊥/(4⟨ξ⟩b²) ).
double phase_phi(const MagneticFieldModel& model, double t, const Vec3& x, const Vec3& xi, double eps);

struct PhiDerivatives {
  double value = 0.0;
  double dt = 0.0;
  Vec3 dx = Vec3::Zero();
};
PhiDerivatives phase_phi_derivatives(const MagneticFieldModel& model, double t, const Vec3& x, const Vec3& xi,
                                     double eps);

Vec3 remainder_r_eps(const MagneticFieldModel& model, double t, const Vec3& x, const Vec3& xi, double eps,
                     DriftSign sign = DriftSign::gradient_drift);
Vec3 x_approx(const MagneticFieldModel& model, double t, const Vec3& x, const Vec3& xi, double eps,
              DriftSign sign = DriftSign::gradient_drift);
Vec3 xi_approx(const MagneticFieldModel& model, double t, const Vec3& x, const Vec3& xi, double eps);

struct ApproxError {
  double err_x = 0.0;
  double err_xi = 0.0;
};

// Sup errors on t_grid against the linear flow at 8× config resolution.
ApproxError approx_error_fixed(const MagneticFieldModel& model, const PhaseState& state, double eps,
                               const std::vector<double>& t_grid, const IntegratorConfig& config,
                               DriftSign sign = DriftSign::gradient_drift);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width_95 = 0.0;  // zero with two points
};

// Least-squares slope of log(error) against log(ε).
SlopeFit convergence_order(const std::vector<std::pair<double, double>>& errors);

// Polar straightened momentum Ξ = (R cos Θ, R sin Θ, Z), Θ counter-clockwise.
// In these coordinates
//   Ẋ = O(X)Ξ/⟨ξ⟩,  Ṙ = (cos Θ, sin Θ, 0)·Q/⟨ξ⟩,  Ż = Q₃/⟨ξ⟩,
//   Θ̇ = b_e(X)/(ε⟨ξ⟩) + (−sin Θ, cos Θ, 0)·Q/(R⟨ξ⟩).
struct PolarState {
  Vec3 x = Vec3::Zero();
  double r = 0.0;
  double theta = 0.0;
  double z = 0.0;

  Vec3 xi() const { return {r * std::cos(theta), r * std::sin(theta), z}; }
  static PolarState from(const PhaseState& s);
};

using Slow = Eigen::Matrix<double, 5, 1>;  // (X, R, Z)

inline constexpr int kGyroModes = 3;

// Θ-Fourier modes n = −3..3 of the slow right-hand side, components
// (X₁, X₂, X₃, R, Z, Θ-drift). The X part has degree 1 in Θ, R and Z degree 2,
// the Θ-drift degree 3, so 8 uniform angles are exact.
struct GyroModes {
  using Coeffs = Eigen::Matrix<cplx, 6, 1>;
  std::array<Coeffs, 2 * kGyroModes + 1> c;

  const Coeffs& mode(int n) const { return c[static_cast<std::size_t>(n + kGyroModes)]; }
  Eigen::Matrix<double, 6, 1> evaluate(double theta) const;
};

// Slow right-hand side at one angle (the stiff b_e/(ε⟨ξ⟩) term excluded).
Eigen::Matrix<double, 6, 1> polar_slow_rhs(const MagneticFieldModel& model, const Slow& u, double gamma, double theta);

GyroModes fourier_split_rhs(const MagneticFieldModel& model, const Slow& u, double gamma);

struct GeneralAveraged {
  std::vector<double> times;
  std::vector<Slow> u1;
  std::vector<Slow> u2_tilde;
  std::vector<Slow> u2;
  std::vector<double> theta1;
};

// Second-order averaging in the gyro-angle. With ω = b_e/⟨ξ⟩ and the slow
// system U̇ = F(U,Θ), Θ̇ = ω/ε + G:
//   w₁ = Σ_{n≠0} F_n e^{inΘ}/(inω),
//   a₂ = ⟨D_U F·w₁ − (∇ω·w₁)F̃/ω − G F̃/ω⟩_Θ,
//   U̇₁ = F̄(U₁),  Ũ̇₂ = F̄(Ũ₂) + εa₂(Ũ₂),  Ũ₂(0) = U(0) − εw₁(U(0), θ),
//   Θ₁ = θ + ∫ ω(Ũ₂)/ε + Ḡ(U₁),  U₂ = Ũ₂ + εw₁(Ũ₂, Θ₁).
GeneralAveraged averaged_flow_general(const MagneticFieldModel& model, const PolarState& state, double eps,
                                      const std::vector<double>& t_grid, double max_step = 5e-3);

// Errors of the averaged approximation against the straightened flow.
struct GeneralError {
  double err_u = 0.0;      // sup |U − U₂|
  double err_theta = 0.0;  // sup |Θ − Θ₁| wrapped to (−π, π]
  double err_u1 = 0.0;     // sup |U − U₁|
};
GeneralError approx_error_general(const MagneticFieldModel& model, const PolarState& state, double eps,
                                  const std::vector<double>& t_grid, const IntegratorConfig& config);

// max over samples of ||D_xX(t) − I||₂ for the linear flow.
double diffeo_margin(const MagneticFieldModel& model, double eps, double t, const std::vector<PhaseState>& samples,
                     const IntegratorConfig& config);

double wrap_angle(double a);

}  // namespace gyrokit
