#pragma once

#include "gyrokit/field_models.hpp"
#include "gyrokit/quadrature.hpp"

#include <fmt/format.h>

#include <functional>
#include <type_traits>

namespace gyrokit {

// p = (v t − x)/(v·x − t), homogeneous of degree 0.
Vec3 symbol_p(double t, const Vec3& x, const Vec3& xi);
// q = (v t − x)/(⟨ξ⟩²(v·x − t)²), homogeneous of degree −1.
Vec3 symbol_q(double t, const Vec3& x, const Vec3& xi);
// ∂p/∂ξ as a 3×3 matrix (row i: ∇_ξ p_i).
Mat3 symbol_p_dxi(double t, const Vec3& x, const Vec3& xi);

struct KernelSymbol {
  enum class Name { p, q } name;
  int degree;
  Vec3 operator()(double t, const Vec3& x, const Vec3& xi) const {
    return name == Name::p ? symbol_p(t, x, xi) : symbol_q(t, x, xi);
  }
  static KernelSymbol P() { return {Name::p, 0}; }
  static KernelSymbol Q() { return {Name::q, -1}; }
};

// 2(1 + R² + R⟨R⟩) and 2(1 + R² + R⟨R⟩)².
double symbol_bound_p(double R);
double symbol_bound_q(double R);

// Sharp values of sup_{S²}|p(1,·,ξ)| and sup_{S²}|q(1,·,ξ)| at |ξ| = R.
// For p the maximiser has ω·v = |v|² and the sup is ⟨ξ⟩. For q with
// s = |v| the sup is (3√3/4)⟨ξ⟩ when s ≥ 1/2 and 1 + s otherwise.
double symbol_p_sup_exact(double R);
double symbol_q_sup_exact(double R);

// Dense product grid on S² followed by a local pattern search from the best
// nodes.
double sup_on_sphere(const std::function<double(const Vec3&)>& f, int n_polar = 200);

// ∫₀ᵗ∫_{S²} g(ω)/(4π) f(t−s, x−sω) s^{1+m} dω ds with Gauss–Legendre in s.
template <class Weight, class Source>
auto shell_convolution(const Weight& g, int m, const Source& f, double t, const Vec3& x,
                       const SphericalQuadrature& quad, int time_nodes) {
  using G = std::decay_t<decltype(g(Vec3()))>;
  G acc;
  if constexpr (std::is_arithmetic_v<G>)
    acc = 0.0;
  else
    acc = G::Zero();
  if (t <= 0.0) return acc;
  const Rule1D rule = gauss_legendre(time_nodes, 0.0, t);
  for (int i = 0; i < time_nodes; ++i) {
    const double s = rule.nodes[i];
    const double ws = rule.weights[i] * std::pow(s, 1 + m) / (4.0 * pi);
    for (std::size_t j = 0; j < quad.size(); ++j) {
      const Vec3& w = quad.nodes[j];
      const double fv = f(t - s, Vec3(x - s * w));
      if (!std::isfinite(fv))
        throw EvaluationError(fmt::format("shell_convolution: non-finite source at s = {}, omega = ({}, {}, {})", s,
                                          w[0], w[1], w[2]));
      acc += (ws * quad.weights[j] * fv) * g(w);
    }
  }
  return acc;
}

using SpatialField = std::function<Vec3(const Vec3&)>;
using SpaceTimeFn = std::function<double(double, const Vec3&)>;

// J(f)(y) = ∫ v(ξ) f(y, ξ) dξ on the cylindrical grid.
SpatialField current_density(const PhaseFunction& f_in, const CylindricalGrid& grid);

struct KirchhoffTerms {
  Vec3 K1 = Vec3::Zero();
  Vec3 K2 = Vec3::Zero();
};

// Sphere averages of t ∂ₜu|₀ + u₀ + t(ω·∇)u₀ over |y − x| = t, with
// ∂ₜE|₀ = J + ∇×B_in and ∂ₜB|₀ = −∇×E_in. Spatial derivatives by 4th-order
// centred differences with step h.
KirchhoffTerms kirchhoff_terms(const SpatialField& E_in, const SpatialField& B_in, const SpatialField& J_in, double t,
                               const Vec3& x, const SphericalQuadrature& quad, double h = 1e-3);

// |∂ₜ(Y*f) − Y*∂ₜf − (t/4π)∫f(0, x − tω)dω| with the left side by a 4th-order
// centred difference in t. df_dt may be empty (then differenced too).
double time_derivative_identity_residual(const SpaceTimeFn& f, const SpaceTimeFn& df_dt, double t, const Vec3& x,
                                         const SphericalQuadrature& quad, int time_nodes = 24);

// Smooth density ḡ(τ, y, ξ) with its ξ-gradient, supported in |ξ| < xi_radius.
struct TestDensity {
  std::function<double(double, const Vec3&, const Vec3&)> value;
  std::function<Vec3(double, const Vec3&, const Vec3&)> grad_xi;
  double xi_radius = 1.0;
};

struct TransferQuadrature {
  int time_nodes = 8;
  int sphere_polar = 12;
  int sphere_azimuth = 24;
  int radial = 10;
  int ball_polar = 12;
  int ball_azimuth = 48;
};

struct TransferResult {
  Vec3 lhs = Vec3::Zero();
  Vec3 rhs = Vec3::Zero();
  double abs_diff = 0.0;
  double rel_diff = 0.0;
};

// Both sides of the transfer identity with the common 1/ε removed:
//   lhs = ∫∫ s/(4π) ∫ p(1,ω,ξ)·[(v×B_e(y))·∇_ξḡ] dξ dω ds,
//   rhs = −∫∫ s/(4π) ∫ (d/dθ)[p(1,ω,O(y)η)] (b_e(y)/⟨η⟩) ḡ(O(y)η) dη dω ds,
// y = x − sω, τ = t − s. The left side uses a momentum ball with a tilted
// polar axis, the right side one aligned with e₃.
TransferResult transfer_identity_residual(const MagneticFieldModel& model, const TestDensity& density, double t,
                                          const Vec3& x, const TransferQuadrature& quad = {});

}  // namespace gyrokit
