#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gyrokit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

// Forward-mode jet over the six phase-space coordinates.
using Jet6 = Eigen::AutoDiffScalar<Vec6>;

template <class T>
using V3 = Eigen::Matrix<T, 3, 1>;

struct PhaseState {
  Vec3 x = Vec3::Zero();
  Vec3 xi = Vec3::Zero();

  bool finite() const { return x.allFinite() && xi.allFinite(); }
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double bracket(const Vec3& xi) { return std::sqrt(1.0 + xi.squaredNorm()); }

template <class T>
T bracket(const V3<T>& xi) {
  using std::sqrt;
  return sqrt(1.0 + xi.squaredNorm());
}

// ξ^⊥ = (ξ₂, −ξ₁, 0) and ξ̄ = (ξ₁, ξ₂, 0).
inline Vec3 perp(const Vec3& xi) { return {xi[1], -xi[0], 0.0}; }
inline Vec3 horizontal(const Vec3& xi) { return {xi[0], xi[1], 0.0}; }

inline Mat3 cross_matrix(const Vec3& k) {
  Mat3 m;
  m << 0.0, -k[2], k[1], k[2], 0.0, -k[0], -k[1], k[0], 0.0;
  return m;
}

inline double value_of(double v) { return v; }
inline double value_of(const Jet6& v) { return v.value(); }

template <class T>
Vec3 value_of(const V3<T>& v) {
  return {value_of(v[0]), value_of(v[1]), value_of(v[2])};
}

}  // namespace gyrokit
