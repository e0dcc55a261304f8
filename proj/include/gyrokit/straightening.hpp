#pragma once

#include "gyrokit/field_models.hpp"

#include <array>
#include <functional>
#include <vector>

namespace gyrokit {

// Rotation Oᵗ(B) with Oᵗ B = |B| e₃: axis B×e₃, cos ϑ = B₃/|B|. Written as
// cos ϑ·I + [u×] + u⊗u/(1 + cos ϑ) with u = sin ϑ·k, which avoids the
// normalisation of k. B = −|B|e₃ maps to diag(1, −1, −1).
template <class T>
Eigen::Matrix<T, 3, 3> align_to_e3(const V3<T>& B) {
  using std::sqrt;
  const T b = sqrt(B.squaredNorm());
  Eigen::Matrix<T, 3, 3> R;
  if (B[0] == 0.0 && B[1] == 0.0) {
    R.setZero();
    if (B[2] > 0.0) {
      R(0, 0) = R(1, 1) = R(2, 2) = T(1.0);
    } else {
      R(0, 0) = T(1.0);
      R(1, 1) = R(2, 2) = T(-1.0);
    }
    return R;
  }
  const T c = B[2] / b;
  const V3<T> u(B[1] / b, -B[0] / b, T(0.0));
  const T w = 1.0 / (1.0 + c);
  R(0, 0) = c + u[0] * u[0] * w;
  R(0, 1) = -u[2] + u[0] * u[1] * w;
  R(0, 2) = u[1] + u[0] * u[2] * w;
  R(1, 0) = u[2] + u[1] * u[0] * w;
  R(1, 1) = c + u[1] * u[1] * w;
  R(1, 2) = -u[0] + u[1] * u[2] * w;
  R(2, 0) = -u[1] + u[2] * u[0] * w;
  R(2, 1) = u[0] + u[2] * u[1] * w;
  R(2, 2) = c + u[2] * u[2] * w;
  return R;
}

// Oᵗ(x). Throws DomainError when b_e(x) ≤ 0.
Mat3 rotation_at(const MagneticFieldModel& model, const Vec3& x);

// dO[j] = ∂O/∂x_j, through the model's first derivatives.
std::array<Mat3, 3> rotation_derivatives(const MagneticFieldModel& model, const Vec3& x);

// [∇_x(O(x)ξ)]_{ij} = Σ_k ∂_j O_{ik} ξ_k.
Mat3 rotation_gradient(const MagneticFieldModel& model, const Vec3& x, const Vec3& xi);

// Q(x, ξ) = −Oᵗ ∇_x(Oξ) Oξ.
Vec3 quadratic_drift(const MagneticFieldModel& model, const Vec3& x, const Vec3& xi);

// O and the skew matrix A(ξ) with Q = −A(ξ)ξ, evaluated together.
struct StraightenedFrame {
  Mat3 O;
  std::array<Mat3, 3> dO;

  static StraightenedFrame at(const MagneticFieldModel& model, const Vec3& x);
  Vec3 drift(const Vec3& xi) const;
};

class RotationField {
 public:
  explicit RotationField(FieldPtr model) : model_(std::move(model)) {}
  Mat3 transpose_at(const Vec3& x) const { return rotation_at(*model_, x); }
  Mat3 at(const Vec3& x) const { return rotation_at(*model_, x).transpose(); }
  Mat3 gradient(const Vec3& x, const Vec3& xi) const { return rotation_gradient(*model_, x, xi); }
  const MagneticFieldModel& model() const { return *model_; }

 private:
  FieldPtr model_;
};

class QuadraticDrift {
 public:
  explicit QuadraticDrift(FieldPtr model) : model_(std::move(model)) {}
  Vec3 operator()(const Vec3& x, const Vec3& xi) const { return quadratic_drift(*model_, x, xi); }

 private:
  FieldPtr model_;
};

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// max over grid of |∇_y·F̃ − ∇_x·F − F·∇_x ln|det Dη||, F̃ = (Dη F)∘η⁻¹.
// The left side is evaluated without inverting η as tr(D_x(Dη F)·Dη⁻¹).
double divergence_transfer_check(const VectorFn& F, const VectorFn& eta, const std::vector<Eigen::VectorXd>& grid,
                                 double h = 1e-3);

// Phase-space maps on (x, ξ) ∈ R⁶.
VectorFn straightening_map(FieldPtr model);
VectorFn vlasov_vector_field(FieldPtr model, double eps);

}  // namespace gyrokit
