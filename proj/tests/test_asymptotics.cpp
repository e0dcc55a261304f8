#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gyrokit/asymptotics.hpp"

using namespace gyrokit;

namespace {

std::vector<double> grid(double t, int n) {
  std::vector<double> g;
  for (int i = 0; i <= n; ++i) g.push_back(t * i / n);
  return g;
}

}  // namespace

TEST_CASE("approximation at t = 0 and norm invariance") {
  const FixedDirectionField f({});
  const Vec3 x(0.2, 0.1, 0.0), xi(0.5, 0.2, 0.3);
  CHECK((x_approx(f, 0.0, x, xi, 0.1) - x).norm() == 0.0);
  CHECK((xi_approx(f, 0.0, x, xi, 0.1) - xi).norm() < 1e-16);
  CHECK(phase_phi(f, 0.0, x, xi, 0.1) == 0.0);
  for (double t : {0.1, 0.37, 0.5})
    CHECK(std::abs(xi_approx(f, t, x, xi, 0.01).norm() - xi.norm()) < 1e-14);
}

TEST_CASE("phase derivatives, frozen and differenced") {
  const FixedDirectionField f({});
  const Vec3 x(0.2, 0.1, 0.0), xi(0.5, 0.2, 0.3);
  const PhiDerivatives d = phase_phi_derivatives(f, 0.3, x, xi, 0.1);
  CHECK(d.value == doctest::Approx(0.30538349495219363).epsilon(1e-13));
  CHECK(d.dt == doctest::Approx(1.0179449831739789).epsilon(1e-13));
  CHECK(d.dx[0] == doctest::Approx(0.02957428526690618).epsilon(1e-12));
  const double h = 1e-6;
  const double dt = (phase_phi(f, 0.3 + h, x, xi, 0.1) - phase_phi(f, 0.3 - h, x, xi, 0.1)) / (2 * h);
  CHECK(dt == doctest::Approx(d.dt).epsilon(1e-8));
  const Vec3 e = Vec3::UnitX() * h;
  const double dx = (phase_phi(f, 0.3, x + e, xi, 0.1) - phase_phi(f, 0.3, x - e, xi, 0.1)) / (2 * h);
  CHECK(dx == doctest::Approx(d.dx[0]).epsilon(1e-7));
}

TEST_CASE("constant field approximation is exact") {
  const ConstantField f(Vec3(0.0, 0.0, 1.3));
  const PhaseState s{Vec3(0.3, -0.2, 0.1), Vec3(0.6, 0.3, 0.2)};
  IntegratorConfig cfg;
  const ApproxError e = approx_error_fixed(f, s, 1e-2, grid(0.5, 50), cfg);
  CHECK(e.err_x < 1e-10);
  CHECK(e.err_xi < 1e-9);
}

TEST_CASE("fixed-direction errors, frozen") {
  const FixedDirectionField f({});
  const PhaseState s{Vec3(0.3, -0.2, 0.1), Vec3(0.6, 0.3, 0.2)};
  IntegratorConfig cfg;
  const ApproxError e = approx_error_fixed(f, s, 0.1, grid(0.5, 50), cfg);
  CHECK(e.err_x == doctest::Approx(0.00082446306270336864).epsilon(1e-8));
  CHECK(e.err_xi == doctest::Approx(0.0076444014309364205).epsilon(1e-8));
}

TEST_CASE("drift sign decides the X order") {
  const FixedDirectionField f({});
  const PhaseState s{Vec3(0.3, -0.2, 0.1), Vec3(0.6, 0.3, 0.2)};
  IntegratorConfig cfg;
  std::vector<std::pair<double, double>> good, bad;
  for (double eps : {1e-1, 3e-2, 1e-2}) {
    good.emplace_back(eps, approx_error_fixed(f, s, eps, grid(0.5, 50), cfg).err_x);
    bad.emplace_back(eps, approx_error_fixed(f, s, eps, grid(0.5, 50), cfg, DriftSign::reversed).err_x);
  }
  CHECK(convergence_order(good).slope > 1.7);
  CHECK(convergence_order(bad).slope < 1.3);
}

TEST_CASE("least-squares slope") {
  const SlopeFit exact = convergence_order({{0.1, 3e-2}, {0.01, 3e-4}, {0.001, 3e-6}});
  CHECK(exact.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(exact.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(exact.half_width_95 < 1e-10);
  CHECK(convergence_order({{0.1, 1.0}, {0.01, 0.1}}).half_width_95 == 0.0);
  CHECK_THROWS(convergence_order({{0.1, 1.0}}));
}

TEST_CASE("gyro modes reproduce the slow right-hand side") {
  const HarmonicField f({});
  Slow u;
  u << 0.1, -0.2, 0.3, 0.7, 0.4;
  const double g = std::sqrt(1.0 + 0.49 + 0.16);
  const GyroModes m = fourier_split_rhs(f, u, g);
  for (int k = 0; k < 13; ++k) {
    const double th = 0.37 + 0.5 * k;
    CHECK((m.evaluate(th) - polar_slow_rhs(f, u, g, th)).norm() < 1e-10);
  }
}

TEST_CASE("fixed-direction reduction of the averaged flow") {
  const FixedDirectionField f({});
  const PolarState s{Vec3(0.1, 0.2, 0.0), 0.6, 0.4, 0.3};
  const GeneralAveraged av = averaged_flow_general(f, s, 0.05, {0.0, 0.25, 0.5});
  const double g = std::sqrt(1.0 + 0.36 + 0.09);
  const Slow& u1 = av.u1.back();
  CHECK((u1.head<3>() - (s.x + 0.5 * 0.3 / g * Vec3::UnitZ())).norm() < 1e-12);
  CHECK(u1[3] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(u1[4] == doctest::Approx(0.3).epsilon(1e-12));
  // Θ₁ against θ + Φ/(ε⟨ξ⟩) up to O(ε).
  const double phi = phase_phi(f, 0.5, s.x, s.xi(), 0.05) / (0.05 * g);
  CHECK(std::abs(wrap_angle(av.theta1.back() - (s.theta + phi))) < 0.05);
}

TEST_CASE("general averaged flow, frozen") {
  const GeneralAveraged av =
      averaged_flow_general(HarmonicField({}), PolarState{Vec3(0.3, -0.2, 0.1), 0.8, 0.7, 0.4}, 0.1, {0.0, 0.25, 0.5});
  const Slow& u = av.u2.back();
  const double frozen[5] = {0.18089248996167978, -0.11877377306021138, 0.25113608135398729, 0.80367845872594623,
                            0.39264546589831151};
  for (int i = 0; i < 5; ++i) CHECK(u[i] == doctest::Approx(frozen[i]).epsilon(1e-10));
  CHECK(av.theta1.back() == doctest::Approx(4.4817069422040596).epsilon(1e-10));
  CHECK_THROWS_AS(averaged_flow_general(HarmonicField({}), PolarState{Vec3::Zero(), 0.0, 0.0, 0.3}, 0.1, {0.0, 0.1}),
                  DomainError);
}

TEST_CASE("general averaging orders") {
  const HarmonicField f({});
  const PolarState s{Vec3(0.3, -0.2, 0.1), 0.8, 0.7, 0.4};
  IntegratorConfig cfg;
  std::vector<std::pair<double, double>> eu, et;
  for (double eps : {1e-1, 3e-2, 1e-2}) {
    const GeneralError e = approx_error_general(f, s, eps, grid(0.5, 25), cfg);
    eu.emplace_back(eps, e.err_u);
    et.emplace_back(eps, e.err_theta);
  }
  CHECK(convergence_order(eu).slope == doctest::Approx(2.0).epsilon(0.2));
  CHECK(convergence_order(et).slope == doctest::Approx(1.0).epsilon(0.4));
}

TEST_CASE("diffeomorphism margin") {
  const FixedDirectionField f({});
  const std::vector<PhaseState> samples = {{Vec3(0.3, -0.2, 0.1), Vec3(0.6, 0.3, 0.2)}};
  IntegratorConfig cfg;
  const double m1 = diffeo_margin(f, 1e-2, 0.2, samples, cfg);
  const double m2 = diffeo_margin(f, 1e-2, 0.4, samples, cfg);
  CHECK(m1 > 0.0);
  CHECK(m2 < 1.0);
  CHECK(m2 / m1 == doctest::Approx(2.0).epsilon(0.25));
  CHECK_THROWS_AS(diffeo_margin(HarmonicField({}), 0.1, 0.1, samples, cfg), DomainError);
}

TEST_CASE("angle wrapping") {
  CHECK(wrap_angle(3.0 * pi) == doctest::Approx(pi));
  CHECK(wrap_angle(-pi) == doctest::Approx(pi));
  CHECK(wrap_angle(0.5) == 0.5);
}
