#pragma once

#include "gyrokit/core.hpp"
#include "gyrokit/quadrature.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gyrokit {

enum class FieldKind { constant, fixed_direction, general_direction };

std::string to_string(FieldKind kind);

struct Box {
  Vec3 lo = Vec3::Constant(-1.0);
  Vec3 hi = Vec3::Constant(1.0);

  double diameter() const { return (hi - lo).norm(); }
  bool contains(const Vec3& x) const { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); }
};

// External field B_e. Derived classes provide B and its first two derivatives;
// the magnitude b_e = |B_e| and its derivatives are assembled here.
class MagneticFieldModel {
 public:
  MagneticFieldModel(Box region, double c_lower);
  virtual ~MagneticFieldModel() = default;

  virtual FieldKind kind() const = 0;
  virtual std::string name() const = 0;
  virtual Vec3 B(const Vec3& x) const = 0;
  // J(i, j) = ∂B_i/∂x_j
  virtual Mat3 jacobian(const Vec3& x) const = 0;
  // H[i](j, k) = ∂²B_i/∂x_j∂x_k
  virtual std::array<Mat3, 3> hessian(const Vec3& x) const = 0;
  virtual bool analytic_derivatives() const { return true; }

  double b(const Vec3& x) const { return B(x).norm(); }
  Vec3 grad_b(const Vec3& x) const;
  Mat3 hess_b(const Vec3& x) const;

  const Box& region() const { return region_; }
  double c_lower() const { return c_lower_; }

 private:
  Box region_;
  double c_lower_;
};

using FieldPtr = std::shared_ptr<const MagneticFieldModel>;

class ConstantField final : public MagneticFieldModel {
 public:
  explicit ConstantField(Vec3 B0, Box region = {}, double c_lower = 0.0);
  FieldKind kind() const override { return FieldKind::constant; }
  std::string name() const override { return "constant"; }
  Vec3 B(const Vec3&) const override { return B0_; }
  Mat3 jacobian(const Vec3&) const override { return Mat3::Zero(); }
  std::array<Mat3, 3> hessian(const Vec3&) const override;

 private:
  Vec3 B0_;
};

// B_e = b(x₁, x₂) e₃ with b = b₀ + a sin(k₁x₁) + c cos(k₂x₂).
class FixedDirectionField final : public MagneticFieldModel {
 public:
  struct Params {
    double b0 = 1.0;
    double a = 0.1;
    double k1 = 1.0;
    double c = 0.0;
    double k2 = 1.0;
  };
  explicit FixedDirectionField(Params p, Box region = {});
  FieldKind kind() const override { return FieldKind::fixed_direction; }
  std::string name() const override { return "fixed-direction"; }
  Vec3 B(const Vec3& x) const override;
  Mat3 jacobian(const Vec3& x) const override;
  std::array<Mat3, 3> hessian(const Vec3& x) const override;
  const Params& params() const { return p_; }

 private:
  Params p_;
};

// B_e = ∇ψ with ψ = x₃ + α(x₁² − x₂²) + β x₁x₃, harmonic so B_e is curl and
// divergence free. B_e is affine in x.
class HarmonicField final : public MagneticFieldModel {
 public:
  struct Params {
    double alpha = 0.1;
    double beta = 0.05;
  };
  explicit HarmonicField(Params p, Box region = {});
  FieldKind kind() const override { return FieldKind::general_direction; }
  std::string name() const override { return "harmonic"; }
  Vec3 B(const Vec3& x) const override;
  Mat3 jacobian(const Vec3& x) const override;
  std::array<Mat3, 3> hessian(const Vec3& x) const override;

 private:
  Params p_;
};

// User field: derivatives by 4th-order centred differences, h = 1e-4·diam.
class FunctionField final : public MagneticFieldModel {
 public:
  FunctionField(FieldKind kind, std::function<Vec3(const Vec3&)> fn, Box region, double c_lower,
                std::string name = "user");
  FieldKind kind() const override { return kind_; }
  std::string name() const override { return name_; }
  Vec3 B(const Vec3& x) const override { return fn_(x); }
  Mat3 jacobian(const Vec3& x) const override;
  std::array<Mat3, 3> hessian(const Vec3& x) const override;
  bool analytic_derivatives() const override { return false; }

 private:
  FieldKind kind_;
  std::function<Vec3(const Vec3&)> fn_;
  std::string name_;
  double h_;
};

Vec3 relativistic_velocity(const Vec3& xi);

template <class T>
V3<T> relativistic_velocity(const V3<T>& xi) {
  return xi / bracket(xi);
}

// Field sampling lifted to jets: value and first derivatives only.
inline double field_b(const MagneticFieldModel& m, const Vec3& x) { return m.b(x); }
Jet6 field_b(const MagneticFieldModel& m, const V3<Jet6>& x);
inline Vec3 field_B(const MagneticFieldModel& m, const Vec3& x) { return m.B(x); }
V3<Jet6> field_B(const MagneticFieldModel& m, const V3<Jet6>& x);

struct GridSpec {
  int n = 9;  // nodes per axis
  bool finite_differences = false;  // div/curl by centred differences with the grid step
};

struct ValidationReport {
  double max_div = 0.0;
  double max_curl = 0.0;
  double min_b = 0.0;
  double max_b = 0.0;
  double max_vertical_grad_b = 0.0;
  double grid_step = 0.0;
  bool lower_bound_violated = false;
  bool upper_bound_violated = false;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

ValidationReport validate_field(const MagneticFieldModel& model, const GridSpec& grid);

// Radial profile M(|ξ|) supported in [0, R_M).
struct EquilibriumProfile {
  std::function<double(double)> M;
  std::function<double(double)> M_prime;
  double R_M = 1.0;
  bool even_extension_ok = true;

  // M(r) = A(1 − r²/R²)³ for r < R. M'(0) = 0 and M'(r)/r is bounded.
  static EquilibriumProfile compact_polynomial(double amplitude, double radius);
  static EquilibriumProfile zero();
};

// Problems found by sampling; empty when the profile is admissible.
std::vector<std::string> check_profile(const EquilibriumProfile& profile);

using PhaseFunction = std::function<double(const Vec3& x, const Vec3& xi)>;

// sup over x_samples of |∫ f_in(x, ξ) dξ| on the cylindrical momentum grid.
// Throws DomainError when f_in is nonzero on the boundary of the grid box.
double neutrality_check(const PhaseFunction& f_in, const CylindricalGrid& grid, const std::vector<Vec3>& x_samples);

}  // namespace gyrokit
