#include "gyrokit/straightening.hpp"

#include <fmt/format.h>

namespace gyrokit {

namespace {

using Jet3 = Eigen::AutoDiffScalar<Vec3>;

void require_positive(const MagneticFieldModel& model, const Vec3& x, const Vec3& B) {
  if (!(B.norm() > 0.0))
    throw DomainError(fmt::format("rotation: b_e = 0 at ({}, {}, {}) in model {}", x[0], x[1], x[2], model.name()));
}

}  // namespace

Mat3 rotation_at(const MagneticFieldModel& model, const Vec3& x) {
  const Vec3 B = model.B(x);
  require_positive(model, x, B);
  return align_to_e3<double>(B);
}

std::array<Mat3, 3> rotation_derivatives(const MagneticFieldModel& model, const Vec3& x) {
  const Vec3 B = model.B(x);
  require_positive(model, x, B);
  const Mat3 J = model.jacobian(x);
  V3<Jet3> Bj;
  for (int i = 0; i < 3; ++i) Bj[i] = Jet3(B[i], J.row(i).transpose());
  const Eigen::Matrix<Jet3, 3, 3> R = align_to_e3<Jet3>(Bj);
  std::array<Mat3, 3> dO;
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c) dO[j](a, c) = R(c, a).derivatives()[j];
  return dO;
}

Mat3 rotation_gradient(const MagneticFieldModel& model, const Vec3& x, const Vec3& xi) {
  const auto dO = rotation_derivatives(model, x);
  Mat3 G;
  for (int j = 0; j < 3; ++j) G.col(j) = dO[j] * xi;
  return G;
}

Vec3 quadratic_drift(const MagneticFieldModel& model, const Vec3& x, const Vec3& xi) {
  return StraightenedFrame::at(model, x).drift(xi);
}

StraightenedFrame StraightenedFrame::at(const MagneticFieldModel& model, const Vec3& x) {
  return {rotation_at(model, x).transpose(), rotation_derivatives(model, x)};
}

Vec3 StraightenedFrame::drift(const Vec3& xi) const {
  const Vec3 p = O * xi;
  Vec3 acc = Vec3::Zero();
  for (int j = 0; j < 3; ++j) acc += p[j] * (dO[j] * xi);
  return -O.transpose() * acc;
}

namespace {

Eigen::MatrixXd fd_jacobian(const VectorFn& f, const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
    e[j] = h;
    J.col(j) = (-f(x + 2 * e) + 8.0 * f(x + e) - 8.0 * f(x - e) + f(x - 2 * e)) / (12.0 * h);
  }
  return J;
}

}  // namespace

double divergence_transfer_check(const VectorFn& F, const VectorFn& eta, const std::vector<Eigen::VectorXd>& grid,
                                 double h) {
  const VectorFn pushed = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return fd_jacobian(eta, x, h) * F(x); };
  const std::function<double(const Eigen::VectorXd&)> log_det = [&](const Eigen::VectorXd& x) {
    return std::log(std::abs(fd_jacobian(eta, x, h).determinant()));
  };
  double worst = 0.0;
  for (const auto& x : grid) {
    const Eigen::MatrixXd D = fd_jacobian(eta, x, h);
    const double det = D.determinant();
    if (!(std::abs(det) > 1e-12)) throw DomainError(fmt::format("divergence_transfer_check: singular Jacobian, det = {}", det));
    const double lhs = (fd_jacobian(pushed, x, h) * D.inverse()).trace();
    const double div_F = fd_jacobian(F, x, h).trace();
    Eigen::VectorXd grad_ld(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
      e[j] = h;
      grad_ld[j] = (-log_det(x + 2 * e) + 8.0 * log_det(x + e) - 8.0 * log_det(x - e) + log_det(x - 2 * e)) / (12.0 * h);
    }
    worst = std::max(worst, std::abs(lhs - div_F - F(x).dot(grad_ld)));
  }
  return worst;
}

VectorFn straightening_map(FieldPtr model) {
  return [model](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    const Vec3 x = z.head<3>();
    const Vec3 xi = z.tail<3>();
    Eigen::VectorXd out(6);
    out << x, rotation_at(*model, x) * xi;
    return out;
  };
}

VectorFn vlasov_vector_field(FieldPtr model, double eps) {
  return [model, eps](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    const Vec3 x = z.head<3>();
    const Vec3 v = relativistic_velocity(Vec3(z.tail<3>()));
    Eigen::VectorXd out(6);
    out << v, -v.cross(model->B(x)) / eps;
    return out;
  };
}

}  // namespace gyrokit
