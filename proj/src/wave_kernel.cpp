#include "gyrokit/wave_kernel.hpp"

#include "gyrokit/straightening.hpp"

#include <algorithm>

namespace gyrokit {

namespace {

double cone_denominator(double t, const Vec3& x, const Vec3& v) {
  const double d = v.dot(x) - t;
  if (std::abs(d) < 1e-14) throw DomainError(fmt::format("kernel symbol evaluated on the cone: v.x - t = {}", d));
  return d;
}

}  // namespace

Vec3 symbol_p(double t, const Vec3& x, const Vec3& xi) {
  const Vec3 v = relativistic_velocity(xi);
  return (v * t - x) / cone_denominator(t, x, v);
}

Vec3 symbol_q(double t, const Vec3& x, const Vec3& xi) {
  const Vec3 v = relativistic_velocity(xi);
  const double d = cone_denominator(t, x, v);
  return (v * t - x) / ((1.0 + xi.squaredNorm()) * d * d);
}

Mat3 symbol_p_dxi(double t, const Vec3& x, const Vec3& xi) {
  const double g = bracket(xi);
  const Vec3 v = xi / g;
  const double d = cone_denominator(t, x, v);
  const Mat3 Dv = (Mat3::Identity() - v * v.transpose()) / g;
  const Vec3 num = v * t - x;
  return t * Dv / d - num * (Dv * x).transpose() / (d * d);
}

double symbol_bound_p(double R) { return 2.0 * (1.0 + R * R + R * std::sqrt(1.0 + R * R)); }

double symbol_bound_q(double R) {
  const double a = 1.0 + R * R + R * std::sqrt(1.0 + R * R);
  return 2.0 * a * a;
}

double symbol_p_sup_exact(double R) { return std::sqrt(1.0 + R * R); }

double symbol_q_sup_exact(double R) {
  const double g = std::sqrt(1.0 + R * R);
  const double s = R / g;
  return s >= 0.5 ? 3.0 * std::sqrt(3.0) / 4.0 * g : 1.0 + s;
}

double sup_on_sphere(const std::function<double(const Vec3&)>& f, int n_polar) {
  auto at = [&](double th, double ph) {
    return f(Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)));
  };
  struct Cand {
    double val, th, ph;
  };
  std::vector<Cand> cands;
  const int n_az = 2 * n_polar;
  for (int i = 0; i <= n_polar; ++i)
    for (int j = 0; j < n_az; ++j) {
      const double th = pi * i / n_polar;
      const double ph = 2.0 * pi * j / n_az;
      cands.push_back({at(th, ph), th, ph});
    }
  const std::size_t keep = std::min<std::size_t>(4, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<long>(keep), cands.end(),
                    [](const Cand& a, const Cand& b) { return a.val > b.val; });
  double best = cands.front().val;
  for (std::size_t c = 0; c < keep; ++c) {
    Cand cur = cands[c];
    double step = pi / n_polar;
    while (step > 1e-9) {
      bool moved = false;
      for (const auto& d : {std::pair{1.0, 0.0}, std::pair{-1.0, 0.0}, std::pair{0.0, 1.0}, std::pair{0.0, -1.0}}) {
        const double th = cur.th + d.first * step;
        const double ph = cur.ph + d.second * step;
        const double v = at(th, ph);
        if (v > cur.val) {
          cur = {v, th, ph};
          moved = true;
        }
      }
      if (!moved) step *= 0.5;
    }
    best = std::max(best, cur.val);
  }
  return best;
}

SpatialField current_density(const PhaseFunction& f_in, const CylindricalGrid& grid) {
  auto nodes = std::make_shared<const std::vector<CylindricalGrid::Node>>(grid.nodes());
  return [f_in, nodes](const Vec3& y) {
    Vec3 acc = Vec3::Zero();
    for (const auto& n : *nodes) {
      const Vec3 xi = n.xi();
      acc += n.weight * f_in(y, xi) * relativistic_velocity(xi);
    }
    return acc;
  };
}

namespace {

// D(i, j) = ∂u_i/∂x_j
Mat3 fd_jacobian(const SpatialField& u, const Vec3& x, double h) {
  Mat3 D;
  for (int j = 0; j < 3; ++j) {
    const Vec3 e = Vec3::Unit(j) * h;
    D.col(j) = (-u(x + 2 * e) + 8.0 * u(x + e) - 8.0 * u(x - e) + u(x - 2 * e)) / (12.0 * h);
  }
  return D;
}

Vec3 curl_of(const Mat3& D) { return {D(2, 1) - D(1, 2), D(0, 2) - D(2, 0), D(1, 0) - D(0, 1)}; }

}  // namespace

KirchhoffTerms kirchhoff_terms(const SpatialField& E_in, const SpatialField& B_in, const SpatialField& J_in, double t,
                               const Vec3& x, const SphericalQuadrature& quad, double h) {
  KirchhoffTerms k;
  for (std::size_t j = 0; j < quad.size(); ++j) {
    const Vec3& w = quad.nodes[j];
    const Vec3 y = x + t * w;
    const Mat3 DE = fd_jacobian(E_in, y, h);
    const Mat3 DB = fd_jacobian(B_in, y, h);
    const Vec3 dtE = J_in(y) + curl_of(DB);
    const Vec3 dtB = -curl_of(DE);
    const double wt = quad.weights[j] / (4.0 * pi);
    k.K1 += wt * (t * dtE + E_in(y) + t * DE * w);
    k.K2 += wt * (t * dtB + B_in(y) + t * DB * w);
  }
  return k;
}

double time_derivative_identity_residual(const SpaceTimeFn& f, const SpaceTimeFn& df_dt, double t, const Vec3& x,
                                         const SphericalQuadrature& quad, int time_nodes) {
  const auto one = [](const Vec3&) { return 1.0; };
  const double d = 1e-3 * std::max(t, 1.0);
  if (!(t > 2.0 * d)) throw DomainError("time_derivative_identity_residual: t too small for the time difference");
  auto S = [&](double tau) { return shell_convolution(one, 0, f, tau, x, quad, time_nodes); };
  const double lhs = (-S(t + 2 * d) + 8.0 * S(t + d) - 8.0 * S(t - d) + S(t - 2 * d)) / (12.0 * d);
  SpaceTimeFn dt = df_dt;
  if (!dt) {
    dt = [&f](double tau, const Vec3& y) {
      const double e = 1e-4;
      return (-f(tau + 2 * e, y) + 8.0 * f(tau + e, y) - 8.0 * f(tau - e, y) + f(tau - 2 * e, y)) / (12.0 * e);
    };
  }
  double boundary = 0.0;
  for (std::size_t j = 0; j < quad.size(); ++j) boundary += quad.weights[j] * f(0.0, Vec3(x - t * quad.nodes[j]));
  const double rhs = shell_convolution(one, 0, dt, t, x, quad, time_nodes) + t / (4.0 * pi) * boundary;
  return std::abs(lhs - rhs);
}

TransferResult transfer_identity_residual(const MagneticFieldModel& model, const TestDensity& density, double t,
                                          const Vec3& x, const TransferQuadrature& quad) {
  const Rule1D srule = gauss_legendre(quad.time_nodes, 0.0, t);
  const SphericalQuadrature sphere = SphericalQuadrature::product(quad.sphere_polar, quad.sphere_azimuth);
  // Tilted frame for the left side's momentum ball.
  const Mat3 tilt = Eigen::AngleAxisd(0.7, Vec3(1.0, 1.0, 0.0).normalized()).toRotationMatrix();
  BallGrid lhs_ball{density.xi_radius, quad.radial, quad.ball_polar, quad.ball_azimuth, tilt};
  BallGrid rhs_ball{density.xi_radius, quad.radial + 2, quad.ball_polar, quad.ball_azimuth, Mat3::Identity()};
  const auto lnodes = lhs_ball.nodes();
  const auto rnodes = rhs_ball.nodes();

  TransferResult res;
  for (int i = 0; i < quad.time_nodes; ++i) {
    const double s = srule.nodes[i];
    const double tau = t - s;
    for (std::size_t j = 0; j < sphere.size(); ++j) {
      const Vec3& w = sphere.nodes[j];
      const double weight = srule.weights[i] * sphere.weights[j] * s / (4.0 * pi);
      const Vec3 y = x - s * w;
      const Vec3 B = model.B(y);
      Vec3 lsum = Vec3::Zero();
      for (const auto& n : lnodes) {
        const Vec3 v = relativistic_velocity(n.xi);
        lsum += n.weight * v.cross(B).dot(density.grad_xi(tau, y, n.xi)) * symbol_p(1.0, w, n.xi);
      }
      const Mat3 O = rotation_at(model, y).transpose();
      const double b = B.norm();
      Vec3 rsum = Vec3::Zero();
      for (const auto& n : rnodes) {
        const Vec3 xi = O * n.xi;
        const Vec3 dtheta = symbol_p_dxi(1.0, w, xi) * (O * perp(n.xi));
        rsum += n.weight * (b / bracket(n.xi)) * density.value(tau, y, xi) * dtheta;
      }
      res.lhs += weight * lsum;
      res.rhs -= weight * rsum;
    }
  }
  res.abs_diff = (res.lhs - res.rhs).norm();
  const double scale = std::max(res.lhs.norm(), res.rhs.norm());
  res.rel_diff = scale > 0.0 ? res.abs_diff / scale : 0.0;
  return res;
}

}  // namespace gyrokit
