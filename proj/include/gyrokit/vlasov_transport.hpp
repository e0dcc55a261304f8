#pragma once

#include "gyrokit/characteristics.hpp"
#include "gyrokit/quadrature.hpp"
#include "gyrokit/wave_kernel.hpp"

#include <functional>
#include <vector>

namespace gyrokit {

// (∇ₓf, ∇_ξf) stacked.
using PhaseGradient = std::function<Vec6(const Vec3& x, const Vec3& xi)>;

struct InitialData {
  PhaseFunction f_in;
  PhaseGradient grad;  // optional, centred differences when empty
  SpatialField E_in;
  SpatialField B_in;
  double R_x0 = 1.0;
  double R_xi0 = 1.0;

  Vec6 gradient(const Vec3& x, const Vec3& xi) const;
};

// Phase-space sample set: positions times a cylindrical momentum grid.
struct PhaseGrid {
  std::vector<Vec3> x;
  CylindricalGrid momentum{1.0, 1.0, 6, 16, 6, 1};
};

// sup |[v(ξ)×B_e(x)]·∇_ξf_in| over the grid.
double preparedness_norm(const MagneticFieldModel& model, const InitialData& data, const PhaseGrid& grid);

struct PreparednessReport {
  double sup_norm = 0.0;
  double epsilon_ref = 0.0;
  double C = 1.0;
  bool prepared = false;
};
PreparednessReport preparedness_report(const MagneticFieldModel& model, const InitialData& data, const PhaseGrid& grid,
                                       double eps, double C);

struct CompatibilityResiduals {
  double div_E_minus_rho = 0.0;  // sup |∇·E_in − ρ(f_in)|
  double div_E_plus_rho = 0.0;   // sup |∇·E_in + ρ(f_in)|
  double div_B = 0.0;            // sup |∇·B_in|
};
// Reports both charge-sign conventions; nothing is asserted.
CompatibilityResiduals compatibility_residuals(const InitialData& data, const PhaseGrid& grid, double h = 1e-3);

// f_ℓ(t, z) = f_in(F_{−t}z) + ε∫₀ᵗ [M'(|ξ|)(ξ/|ξ|)·E(s, x)](F_{s−t}z) ds along
// the linear flow of a fixed-direction model. The s-integral uses 8 Gauss
// nodes per panel and `panels_per_period` panels per gyro-period.
struct DuhamelOptions {
  int panels_per_period = 2;
};
std::vector<double> duhamel_linear_density(const MagneticFieldModel& model, const PhaseFunction& f_in,
                                           const EquilibriumProfile& M, const TimeField& E, double t,
                                           const std::vector<PhaseState>& states, const IntegratorConfig& config,
                                           const DuhamelOptions& options = {});

// χ(r, z) with its partial derivatives.
struct GyroProfile {
  std::function<double(double r, double z)> value;
  std::function<double(double r, double z)> dr;
  std::function<double(double r, double z)> dz;

  // A(1 − (r² + z²)/R²)⁴ inside the ball of radius R.
  static GyroProfile compact(double amplitude, double radius);
};

struct ClosedFormValue {
  double f = 0.0;
  double dt = 0.0;
  Vec3 grad_xi = Vec3::Zero();
  double residual = 0.0;  // ∂ₜf + v·∇ₓf − (1/ε⟨ξ⟩)(ξ₂∂₁ − ξ₁∂₂)f
};

// f = χ(r,z) cos 2(θ − t/(ε⟨ξ⟩)) with θ the counter-clockwise angle, the
// solution for b_e = 1, M ≡ 0 and vanishing internal fields. Needs r > 0.
ClosedFormValue example_closed_form(const GyroProfile& chi, double eps, double t, const Vec3& x, const Vec3& xi);

// ρ(f)(t, x) and J(f)(t, x) of the closed form on the cylindrical grid.
struct Moments {
  double rho = 0.0;
  Vec3 J = Vec3::Zero();
};
Moments example_moments(const GyroProfile& chi, double eps, double t, const Vec3& x, const CylindricalGrid& grid);

// Initial data of the example (t = 0) for use with the transport routines.
InitialData example_initial_data(const GyroProfile& chi);

// C_T·∫₀ᵗ sup_{s'≤s}||E(s')|| ds with
// C_T = t²/3 · sup_{|y−x|≤t} b_e(y) · ∫_{|ξ|≤R_ξ} |M'(|ξ|)|/⟨ξ⟩ · sup_ω|∂_θp(1,ω,ξ)| dξ.
// The running sup of the sampled history is integrated by the trapezoid rule.
struct DiluteBound {
  double C_T = 0.0;
  double history_integral = 0.0;
  double value = 0.0;
};
DiluteBound dilute_source_bound(const MagneticFieldModel& model, const EquilibriumProfile& M, const Vec3& x,
                                const std::vector<double>& times, const std::vector<double>& E_sup, double t,
                                double R_xi, int n_r = 8, int n_z = 8);

struct LipschitzRow {
  double eps = 0.0;
  double sup_dt = 0.0;   // sup |∂ₜf_ℓ(t)|
  double sup_dxi = 0.0;  // sup |∇_ξf_ℓ(t)|
};

// Transport only (E ≡ 0). ∂ₜf_ℓ(t,z) = −(∇f_in·V)(F_{−t}z) with V the linear
// vector field, and ∇_ξf_ℓ from the transposed tangent map of F_{−t}.
std::vector<LipschitzRow> lipschitz_growth_probe(const MagneticFieldModel& model, const InitialData& data,
                                                 const std::vector<double>& eps_list, double t,
                                                 const std::vector<PhaseState>& probes,
                                                 const IntegratorConfig& config);

}  // namespace gyrokit
