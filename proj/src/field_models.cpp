#include "gyrokit/field_models.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>

namespace gyrokit {

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::constant:
      return "constant";
    case FieldKind::fixed_direction:
      return "fixed-direction";
    case FieldKind::general_direction:
      return "general-direction";
  }
  return "unknown";
}

MagneticFieldModel::MagneticFieldModel(Box region, double c_lower) : region_(region), c_lower_(c_lower) {}

Vec3 MagneticFieldModel::grad_b(const Vec3& x) const {
  const Vec3 B0 = B(x);
  const double b0 = B0.norm();
  if (!(b0 > 0.0)) throw DomainError(fmt::format("grad_b: field vanishes at ({}, {}, {})", x[0], x[1], x[2]));
  return jacobian(x).transpose() * B0 / b0;
}

Mat3 MagneticFieldModel::hess_b(const Vec3& x) const {
  const Vec3 B0 = B(x);
  const double b0 = B0.norm();
  if (!(b0 > 0.0)) throw DomainError(fmt::format("hess_b: field vanishes at ({}, {}, {})", x[0], x[1], x[2]));
  const Mat3 J = jacobian(x);
  const auto H = hessian(x);
  const Vec3 g = J.transpose() * B0 / b0;
  Mat3 out = J.transpose() * J / b0 - g * g.transpose() / b0;
  for (int i = 0; i < 3; ++i) out += B0[i] * H[i] / b0;
  return out;
}

ConstantField::ConstantField(Vec3 B0, Box region, double c_lower)
    : MagneticFieldModel(region, c_lower > 0.0 ? c_lower : std::min(B0.norm(), 1.0 / B0.norm())), B0_(B0) {}

std::array<Mat3, 3> ConstantField::hessian(const Vec3&) const { return {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()}; }

namespace {

double fixed_c_lower(const FixedDirectionField::Params& p) {
  const double lo = p.b0 - std::abs(p.a) - std::abs(p.c);
  const double hi = p.b0 + std::abs(p.a) + std::abs(p.c);
  return lo > 0.0 ? std::min(lo, 1.0 / hi) : 0.5 * std::min(p.b0, 1.0 / p.b0);
}

}  // namespace

FixedDirectionField::FixedDirectionField(Params p, Box region)
    : MagneticFieldModel(region, fixed_c_lower(p)), p_(p) {}

Vec3 FixedDirectionField::B(const Vec3& x) const {
  return {0.0, 0.0, p_.b0 + p_.a * std::sin(p_.k1 * x[0]) + p_.c * std::cos(p_.k2 * x[1])};
}

Mat3 FixedDirectionField::jacobian(const Vec3& x) const {
  Mat3 J = Mat3::Zero();
  J(2, 0) = p_.a * p_.k1 * std::cos(p_.k1 * x[0]);
  J(2, 1) = -p_.c * p_.k2 * std::sin(p_.k2 * x[1]);
  return J;
}

std::array<Mat3, 3> FixedDirectionField::hessian(const Vec3& x) const {
  std::array<Mat3, 3> H{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  H[2](0, 0) = -p_.a * p_.k1 * p_.k1 * std::sin(p_.k1 * x[0]);
  H[2](1, 1) = -p_.c * p_.k2 * p_.k2 * std::cos(p_.k2 * x[1]);
  return H;
}

namespace {

// Lower bound of |B| on the box for the affine harmonic field, from B₃ alone.
double harmonic_c_lower(const HarmonicField::Params& p, const Box& region) {
  const double b3 = 1.0 + std::min(p.beta * region.lo[0], p.beta * region.hi[0]);
  Vec3 far;
  for (int i = 0; i < 3; ++i) far[i] = std::max(std::abs(region.lo[i]), std::abs(region.hi[i]));
  const double bmax = Vec3(2 * std::abs(p.alpha) * far[0] + std::abs(p.beta) * far[2], 2 * std::abs(p.alpha) * far[1],
                           1.0 + std::abs(p.beta) * far[0])
                          .norm();
  return std::min(0.9 * b3, 1.0 / (1.1 * bmax));
}

}  // namespace

HarmonicField::HarmonicField(Params p, Box region) : MagneticFieldModel(region, harmonic_c_lower(p, region)), p_(p) {}

Vec3 HarmonicField::B(const Vec3& x) const {
  return {2.0 * p_.alpha * x[0] + p_.beta * x[2], -2.0 * p_.alpha * x[1], 1.0 + p_.beta * x[0]};
}

Mat3 HarmonicField::jacobian(const Vec3&) const {
  Mat3 J;
  J << 2.0 * p_.alpha, 0.0, p_.beta, 0.0, -2.0 * p_.alpha, 0.0, p_.beta, 0.0, 0.0;
  return J;
}

std::array<Mat3, 3> HarmonicField::hessian(const Vec3&) const { return {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()}; }

FunctionField::FunctionField(FieldKind kind, std::function<Vec3(const Vec3&)> fn, Box region, double c_lower,
                             std::string name)
    : MagneticFieldModel(region, c_lower), kind_(kind), fn_(std::move(fn)), name_(std::move(name)),
      h_(1e-4 * region.diameter()) {}

Mat3 FunctionField::jacobian(const Vec3& x) const {
  Mat3 J;
  for (int j = 0; j < 3; ++j) {
    const Vec3 e = Vec3::Unit(j) * h_;
    J.col(j) = (-fn_(x + 2 * e) + 8.0 * fn_(x + e) - 8.0 * fn_(x - e) + fn_(x - 2 * e)) / (12.0 * h_);
  }
  return J;
}

std::array<Mat3, 3> FunctionField::hessian(const Vec3& x) const {
  std::array<Mat3, 3> H;
  std::array<Mat3, 3> dJ;  // dJ[k] = ∂_k J
  for (int k = 0; k < 3; ++k) {
    const Vec3 e = Vec3::Unit(k) * h_;
    dJ[k] = (-jacobian(x + 2 * e) + 8.0 * jacobian(x + e) - 8.0 * jacobian(x - e) + jacobian(x - 2 * e)) / (12.0 * h_);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) H[i](j, k) = dJ[k](i, j);
  return H;
}

Vec3 relativistic_velocity(const Vec3& xi) { return xi / bracket(xi); }

Jet6 field_b(const MagneticFieldModel& m, const V3<Jet6>& x) {
  const Vec3 xv = value_of(x);
  const Vec3 g = m.grad_b(xv);
  Jet6 out(m.b(xv), Vec6::Zero());
  for (int j = 0; j < 3; ++j) out.derivatives() += g[j] * x[j].derivatives();
  return out;
}

V3<Jet6> field_B(const MagneticFieldModel& m, const V3<Jet6>& x) {
  const Vec3 xv = value_of(x);
  const Vec3 B0 = m.B(xv);
  const Mat3 J = m.jacobian(xv);
  V3<Jet6> out;
  for (int i = 0; i < 3; ++i) {
    out[i] = Jet6(B0[i], Vec6::Zero());
    for (int j = 0; j < 3; ++j) out[i].derivatives() += J(i, j) * x[j].derivatives();
  }
  return out;
}

namespace {

Mat3 fd_jacobian(const MagneticFieldModel& m, const Vec3& x, double h) {
  Mat3 J;
  for (int j = 0; j < 3; ++j) {
    const Vec3 e = Vec3::Unit(j) * h;
    J.col(j) = (m.B(x + e) - m.B(x - e)) / (2.0 * h);
  }
  return J;
}

}  // namespace

ValidationReport validate_field(const MagneticFieldModel& model, const GridSpec& grid) {
  if (grid.n < 2) throw DomainError("validate_field: need at least 2 nodes per axis");
  const Box& K = model.region();
  const Vec3 step = (K.hi - K.lo) / (grid.n - 1);
  ValidationReport rep;
  rep.grid_step = step.maxCoeff();
  rep.min_b = std::numeric_limits<double>::infinity();
  rep.max_b = 0.0;
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j)
      for (int k = 0; k < grid.n; ++k) {
        const Vec3 x = K.lo + Vec3(i * step[0], j * step[1], k * step[2]);
        const Vec3 B0 = model.B(x);
        if (!B0.allFinite())
          throw EvaluationError(fmt::format("validate_field: non-finite field at ({}, {}, {})", x[0], x[1], x[2]));
        const Mat3 J = grid.finite_differences ? fd_jacobian(model, x, rep.grid_step) : model.jacobian(x);
        const double b0 = B0.norm();
        rep.min_b = std::min(rep.min_b, b0);
        rep.max_b = std::max(rep.max_b, b0);
        rep.max_div = std::max(rep.max_div, std::abs(J.trace()));
        const Vec3 curl(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
        rep.max_curl = std::max(rep.max_curl, curl.norm());
        if (model.kind() == FieldKind::fixed_direction && b0 > 0.0)
          rep.max_vertical_grad_b = std::max(rep.max_vertical_grad_b, std::abs((J.transpose() * B0 / b0)[2]));
      }
  const double c = model.c_lower();
  if (rep.min_b < c) {
    rep.lower_bound_violated = true;
    rep.errors.push_back(fmt::format("min b_e = {} below c_lower = {}", rep.min_b, c));
  }
  if (c > 0.0 && rep.max_b > 1.0 / c) {
    rep.upper_bound_violated = true;
    rep.errors.push_back(fmt::format("max b_e = {} above 1/c_lower = {}", rep.max_b, 1.0 / c));
  }
  const double fd_tol = grid.finite_differences ? 1e-2 * rep.grid_step * rep.grid_step : 1e-12;
  if (rep.max_div > fd_tol * std::max(1.0, rep.max_b))
    rep.errors.push_back(fmt::format("max |div B_e| = {}", rep.max_div));
  if (rep.max_curl > fd_tol * std::max(1.0, rep.max_b)) {
    // A varying b_e e₃ cannot be curl free; only general fields must be.
    const auto msg = fmt::format("max |curl B_e| = {}", rep.max_curl);
    if (model.kind() == FieldKind::general_direction)
      rep.errors.push_back(msg);
    else
      rep.warnings.push_back(msg);
  }
  if (model.kind() == FieldKind::fixed_direction && rep.max_vertical_grad_b > fd_tol)
    rep.errors.push_back(fmt::format("b_e depends on x3: max |d3 b_e| = {}", rep.max_vertical_grad_b));
  return rep;
}

EquilibriumProfile EquilibriumProfile::compact_polynomial(double amplitude, double radius) {
  EquilibriumProfile p;
  p.R_M = radius;
  p.M = [amplitude, radius](double r) {
    const double u = 1.0 - (r * r) / (radius * radius);
    return u > 0.0 ? amplitude * u * u * u : 0.0;
  };
  p.M_prime = [amplitude, radius](double r) {
    const double u = 1.0 - (r * r) / (radius * radius);
    return u > 0.0 ? -6.0 * amplitude * r / (radius * radius) * u * u : 0.0;
  };
  return p;
}

EquilibriumProfile EquilibriumProfile::zero() {
  EquilibriumProfile p;
  p.R_M = 0.0;
  p.M = [](double) { return 0.0; };
  p.M_prime = [](double) { return 0.0; };
  return p;
}

std::vector<std::string> check_profile(const EquilibriumProfile& profile) {
  std::vector<std::string> issues;
  for (int i = 0; i <= 100; ++i) {
    const double r = profile.R_M * (1.0 + 0.05 * i);
    if (profile.M(r) != 0.0) issues.push_back(fmt::format("M({}) = {} beyond R_M", r, profile.M(r)));
  }
  if (std::abs(profile.M_prime(0.0)) > 0.0) issues.push_back(fmt::format("M'(0) = {}", profile.M_prime(0.0)));
  double ratio_max = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double r = 1e-3 * i / 1000.0;
    ratio_max = std::max(ratio_max, std::abs(profile.M_prime(r) / r));
  }
  if (!std::isfinite(ratio_max) || ratio_max > 1e8) issues.push_back(fmt::format("M'(r)/r unbounded near 0: {}", ratio_max));
  return issues;
}

double neutrality_check(const PhaseFunction& f_in, const CylindricalGrid& grid, const std::vector<Vec3>& x_samples) {
  const auto nodes = grid.nodes();
  double worst = 0.0;
  for (const Vec3& x : x_samples) {
    for (int k = 0; k < 64; ++k) {
      const double th = 2.0 * pi * k / 64.0;
      for (int j = 0; j <= 32; ++j) {
        const double z = -grid.z_max + 2.0 * grid.z_max * j / 32.0;
        const double r = grid.r_max * j / 32.0;
        const Vec3 side(grid.r_max * std::cos(th), grid.r_max * std::sin(th), z);
        const Vec3 top(r * std::cos(th), r * std::sin(th), grid.z_max);
        const Vec3 bottom(r * std::cos(th), r * std::sin(th), -grid.z_max);
        if (f_in(x, side) != 0.0 || f_in(x, top) != 0.0 || f_in(x, bottom) != 0.0)
          throw DomainError(fmt::format("neutrality_check: support of f_in exceeds the momentum box at x = ({}, {}, {})",
                                        x[0], x[1], x[2]));
      }
    }
    double sum = 0.0;
    for (const auto& n : nodes) sum += n.weight * f_in(x, n.xi());
    worst = std::max(worst, std::abs(sum));
  }
  return worst;
}

}  // namespace gyrokit
