#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gyrokit/straightening.hpp"

using namespace gyrokit;

TEST_CASE("rotation aligns the field with e3") {
  const HarmonicField f({0.3, 0.2});
  for (const Vec3& x : {Vec3(0.1, 0.2, 0.3), Vec3(-0.8, 0.5, 0.9), Vec3(0.9, -0.9, -0.9)}) {
    const Mat3 Ot = rotation_at(f, x);
    const Vec3 aligned = Ot * f.B(x);
    CHECK(std::abs(aligned[0]) < 1e-14);
    CHECK(std::abs(aligned[1]) < 1e-14);
    CHECK(aligned[2] == doctest::Approx(f.b(x)).epsilon(1e-14));
    CHECK(std::abs(Ot.determinant() - 1.0) < 1e-12);
    CHECK((Ot * Ot.transpose() - Mat3::Identity()).norm() < 1e-14);
  }
}

TEST_CASE("exact branches") {
  CHECK((align_to_e3<double>(Vec3(0.0, 0.0, 2.0)) - Mat3::Identity()).norm() == 0.0);
  const Mat3 flip = align_to_e3<double>(Vec3(0.0, 0.0, -1.0));
  CHECK((flip - Vec3(1.0, -1.0, -1.0).asDiagonal().toDenseMatrix()).norm() == 0.0);
  const ConstantField zero(Vec3::Zero());
  CHECK_THROWS_AS(rotation_at(zero, Vec3::Zero()), DomainError);
}

TEST_CASE("rotation derivatives match differences") {
  const HarmonicField f({0.1, 0.05});
  const Vec3 x(0.2, -0.1, 0.4);
  const auto dO = rotation_derivatives(f, x);
  const double h = 1e-5;
  for (int j = 0; j < 3; ++j) {
    const Vec3 e = Vec3::Unit(j) * h;
    const Mat3 fd = (rotation_at(f, x + e).transpose() - rotation_at(f, x - e).transpose()) / (2 * h);
    CHECK((fd - dO[j]).norm() < 1e-9);
  }
}

TEST_CASE("drift is orthogonal to the momentum and vanishes for fixed direction") {
  const HarmonicField f({0.1, 0.05});
  const Vec3 xi(0.3, -0.5, 0.2);
  const Vec3 Q = quadratic_drift(f, Vec3(0.1, 0.2, 0.3), xi);
  CHECK(Q.norm() > 1e-3);
  CHECK(std::abs(Q.dot(xi)) < 1e-15);
  const StraightenedFrame frame = StraightenedFrame::at(f, Vec3(0.1, 0.2, 0.3));
  CHECK((frame.drift(xi) - Q).norm() < 1e-15);
  CHECK(quadratic_drift(FixedDirectionField({}), Vec3(0.1, 0.2, 0.3), xi).norm() == 0.0);
}

TEST_CASE("drift quadratic in the momentum") {
  const HarmonicField f({0.1, 0.05});
  const Vec3 x(0.0, 0.3, -0.2);
  const Vec3 xi(0.4, 0.1, -0.3);
  CHECK((quadratic_drift(f, x, 2.0 * xi) - 4.0 * quadratic_drift(f, x, xi)).norm() < 1e-14);
}

TEST_CASE("divergence transfer through the straightening map") {
  const FieldPtr model = std::make_shared<HarmonicField>(HarmonicField::Params{0.1, 0.05});
  const VectorFn F = vlasov_vector_field(model, 0.1);
  const VectorFn eta = straightening_map(model);
  std::vector<Eigen::VectorXd> grid;
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd z(6);
    z << 0.1 * i, -0.2, 0.05 * i, 0.3, -0.1 * i, 0.2;
    grid.push_back(z);
  }
  CHECK(divergence_transfer_check(F, eta, grid) < 1e-6);
}
