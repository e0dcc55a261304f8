#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gyrokit/phase_averaging.hpp"
#include "gyrokit/vlasov_transport.hpp"

using namespace gyrokit;

namespace {

OscillatoryIntegralSpec unit_spec(int n, double eps, double t) {
  OscillatoryIntegralSpec s;
  s.g = [](double, const Slow&) { return 1.0; };
  s.n = n;
  s.eps = eps;
  s.t = t;
  s.state = {Vec3::Zero(), Vec3(0.5, 0.2, 0.3)};
  return s;
}

OscillatoryOptions asymptotic() {
  OscillatoryOptions o;
  o.mode = PhaseEvaluation::asymptotic;
  return o;
}

}  // namespace

TEST_CASE("constant field closed form") {
  // |∫₀ᵗ e^{inbs/(ε⟨ξ⟩)} ds| = 2ε⟨ξ⟩|sin(nbt/(2ε⟨ξ⟩))|/(nb).
  const double b = 1.3;
  const ConstantField f(Vec3(0.0, 0.0, b));
  const double gam = bracket(Vec3(0.5, 0.2, 0.3));
  for (double eps : {1e-1, 1e-2, 1e-3})
    for (int n : {1, 2, -3})
      for (double t : {0.37, 1.0}) {
        const double ref = 2.0 * eps * gam * std::abs(std::sin(n * b * t / (2.0 * eps * gam))) / std::abs(n * b);
        CHECK(std::abs(oscillatory_integral(unit_spec(n, eps, t), f, asymptotic())) ==
              doctest::Approx(ref).epsilon(1e-12).scale(1.0));
        auto fwd = unit_spec(n, eps, t);
        fwd.direction = TimeDirection::forward;
        CHECK(std::abs(std::abs(oscillatory_integral(fwd, f, asymptotic())) - ref) < 1e-12);
      }
}

TEST_CASE("true flow agrees with the asymptotic phase in a constant field") {
  const ConstantField f(Vec3(0.0, 0.0, 1.0));
  OscillatoryOptions o;
  o.mode = PhaseEvaluation::true_flow;
  const cplx a = oscillatory_integral(unit_spec(1, 0.05, 0.6), f, o);
  const cplx b = oscillatory_integral(unit_spec(1, 0.05, 0.6), f, asymptotic());
  CHECK(std::abs(a - b) < 1e-9);
}

TEST_CASE("mean mode is the plain integral") {
  const FixedDirectionField f({});
  auto s = unit_spec(0, 0.01, 0.8);
  s.g = [](double sv, const Slow&) { return 1.0 + sv; };
  CHECK(oscillatory_integral(s, f, asymptotic()).real() == doctest::Approx(0.8 + 0.32).epsilon(1e-13));
  CHECK(oscillatory_integral(s, f, asymptotic()).imag() == 0.0);
}

TEST_CASE("frozen oscillatory integral") {
  OscillatoryIntegralSpec s;
  s.g = [](double sv, const Slow& u) { return (1.0 + sv) * (1.0 + 0.3 * u[0]); };
  s.n = 1;
  s.eps = 0.01;
  s.omega = Vec3(0.6, 0.0, 0.8);
  s.state = {Vec3(0.1, 0.0, 0.0), Vec3(0.5, 0.2, 0.3)};
  s.t = 0.5;
  const cplx v = oscillatory_integral(s, FixedDirectionField({}));
  CHECK(v.real() == doctest::Approx(-0.0050713152426759269).epsilon(1e-9));
  CHECK(v.imag() == doctest::Approx(-0.01325914353114396).epsilon(1e-9));
  // The asymptotic phase is within O(ε) of the integrated flow.
  CHECK(std::abs(oscillatory_integral(s, FixedDirectionField({}), asymptotic()) - v) < 0.02 * std::abs(v) + 1e-3);
}

TEST_CASE("spec validation") {
  const ConstantField f(Vec3::UnitZ());
  auto s = unit_spec(1, 0.1, 0.5);
  s.omega = Vec3(1.0, 1.0, 0.0);
  CHECK_THROWS_AS(oscillatory_integral(s, f), DomainError);
  s = unit_spec(1, -0.1, 0.5);
  CHECK_THROWS_AS(oscillatory_integral(s, f), DomainError);
  s = unit_spec(1, 0.1, 0.0);
  CHECK_THROWS_AS(oscillatory_integral(s, f), DomainError);
  s = unit_spec(1, 0.1, 0.5);
  s.g = nullptr;
  CHECK_THROWS_AS(oscillatory_integral(s, f), DomainError);
}

TEST_CASE("non-stationary threshold") {
  const ConstantField cf(Vec3(0.0, 0.0, 2.0));
  const ThresholdReport c = nonstationary_threshold(cf, Vec3::Zero(), 10.0);
  CHECK(c.b_minus == 2.0);
  CHECK(c.grad_sup == 0.0);
  CHECK(c.slack == doctest::Approx(0.5));
  const FixedDirectionField ff({});
  CHECK(nonstationary_threshold(ff, Vec3::Zero(), 0.5).slack > 0.0);
  CHECK_NOTHROW(require_nonstationary_threshold(ff, Vec3::Zero(), 0.5));
  CHECK(nonstationary_threshold(ff, Vec3::Zero(), 5.0).slack < 0.0);
  CHECK_THROWS_AS(require_nonstationary_threshold(ff, Vec3::Zero(), 5.0), PreconditionError);
  CHECK_THROWS_AS(oscillatory_integral(unit_spec(1, 0.1, 5.0), ff, asymptotic()), PreconditionError);
  // n = 0 does not need the threshold.
  CHECK_NOTHROW(oscillatory_integral(unit_spec(0, 0.1, 5.0), ff, asymptotic()));
}

TEST_CASE("phase speed margin") {
  const Vec3 w(0.6, 0.0, 0.8), x(0.1, 0.0, 0.0), xi(0.5, 0.2, 0.3);
  CHECK(phase_speed_margin(ConstantField(Vec3(0.0, 0.0, 1.7)), w, 0.5, x, xi, 0.01) == doctest::Approx(1.7));
  const FixedDirectionField ff({});
  CHECK(phase_speed_margin(ff, w, 0.5, x, xi, 0.01) == doctest::Approx(0.97993308048785144).epsilon(1e-12));
  for (double t : {0.3, 0.8, 1.2}) {
    const ThresholdReport th = nonstationary_threshold(ff, x, t);
    if (th.slack <= 0.0) continue;
    for (auto d : {TimeDirection::backward, TimeDirection::forward})
      CHECK(phase_speed_margin(ff, w, t, x, xi, 0.01, d) >= 0.75 * th.b_minus - 0.05);
  }
  CHECK_THROWS_AS(phase_speed_margin(ff, w, 0.5, x, xi, 0.01, TimeDirection::backward, 1), DomainError);
}

TEST_CASE("general-direction margin stays near b") {
  const HarmonicField hf({});
  const double m = phase_speed_margin(hf, Vec3(0.6, 0.0, 0.8), 0.3, Vec3(0.1, 0.0, 0.0), Vec3(0.5, 0.2, 0.3), 0.01);
  CHECK(m > 0.75 * nonstationary_threshold(hf, Vec3(0.1, 0.0, 0.0), 0.3).b_minus);
  CHECK(m < 1.5);
}

TEST_CASE("gyro Fourier coefficients") {
  const GyroProfile chi = GyroProfile::compact(1.0, 1.0);
  const double r = 0.4, z = 0.2;
  SUBCASE("gyro-invariant data has only the mean mode") {
    const PhaseFunction radial = [&](const Vec3&, const Vec3& xi) { return chi.value(std::hypot(xi[0], xi[1]), xi[2]); };
    const GyroFourier g = gyro_fourier_coefficients(radial, r, z, Vec3::Zero(), 4);
    CHECK(std::abs(g.mode(0) - chi.value(r, z)) < 1e-15);
    for (int n = 1; n <= 4; ++n) {
      CHECK(std::abs(g.mode(n)) < 1e-15);
      CHECK(std::abs(g.mode(-n)) < 1e-15);
    }
    CHECK(g.decay_sum < 1e-14);
  }
  SUBCASE("cos 2θ data") {
    const InitialData d = example_initial_data(chi);
    const GyroFourier g = gyro_fourier_coefficients(d.f_in, r, z, Vec3::Zero(), 5);
    CHECK(g.samples == 32);
    CHECK(std::abs(g.mode(2) - 0.5 * chi.value(r, z)) < 1e-15);
    CHECK(std::abs(g.mode(-2) - 0.5 * chi.value(r, z)) < 1e-15);
    CHECK(std::abs(g.mode(0)) < 1e-15);
    CHECK(g.decay_sum == doctest::Approx(0.5 * chi.value(r, z)).epsilon(1e-13));
  }
  SUBCASE("reconstruction of a band-limited function") {
    const PhaseFunction f = [](const Vec3& x, const Vec3& xi) {
      const double th = std::atan2(xi[1], xi[0]);
      return 1.0 + x[0] + 0.3 * std::cos(th) - 0.2 * std::sin(3 * th) + 0.1 * std::cos(5 * th + 0.4);
    };
    const Vec3 x(0.25, 0.0, 0.0);
    const GyroFourier g = gyro_fourier_coefficients(f, r, z, x, 6);
    for (int k = 0; k < 128; ++k) {
      const double th = 2.0 * pi * k / 128.0 + 0.01;
      CHECK(std::abs(g.reconstruct(th) - f(x, Vec3(r * std::cos(th), r * std::sin(th), z))) < 1e-10);
    }
  }
  CHECK_THROWS_AS(gyro_fourier_coefficients([](const Vec3&, const Vec3&) { return 0.0; }, r, z, Vec3::Zero(), -1),
                  DomainError);
}

TEST_CASE("averaged initial term") {
  const GyroProfile chi = GyroProfile::compact(1.0, 1.0);
  SUBCASE("gyro-invariant data gives no contribution") {
    const PhaseFunction radial = [&](const Vec3&, const Vec3& xi) { return chi.value(std::hypot(xi[0], xi[1]), xi[2]); };
    CHECK(averaged_initial_term(ConstantField(Vec3::UnitZ()), radial, 0.5, Vec3::Zero(), 0.05).norm() < 1e-14);
  }
  SUBCASE("decays with eps on the cos 2θ data") {
    const InitialData d = example_initial_data(chi);
    const FixedDirectionField ff({});
    double prev = 1e300;
    for (double eps : {0.2, 0.1, 0.05}) {
      InitialTermQuadrature q;
      q.momentum.n_r = q.momentum.n_z = std::max(6, static_cast<int>(std::ceil(0.3 / eps)));
      double v = 0.0;
      for (double t : {0.3, 0.4, 0.5})
        v = std::max(v, averaged_initial_term(ff, d.f_in, t, Vec3(0.1, 0.0, 0.0), eps, q).norm());
      CHECK(v < 0.5 * prev);
      prev = v;
    }
  }
  SUBCASE("argument checks") {
    const PhaseFunction zero = [](const Vec3&, const Vec3&) { return 0.0; };
    CHECK_THROWS_AS(averaged_initial_term(ConstantField(Vec3::UnitZ()), zero, 0.0, Vec3::Zero(), 0.1), DomainError);
    CHECK_THROWS_AS(averaged_initial_term(ConstantField(Vec3::UnitZ()), zero, 0.5, Vec3::Zero(), 0.0), DomainError);
    CHECK_THROWS_AS(averaged_initial_term(FixedDirectionField({}), zero, 5.0, Vec3::Zero(), 0.1), PreconditionError);
  }
}
