#include "gyrokit/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <memory>

namespace gyrokit {

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw DomainError("gauss_legendre: need at least one node");
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
      gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n)), &gsl_integration_glfixed_table_free);
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i)
    gsl_integration_glfixed_point(a, b, static_cast<std::size_t>(i), &rule.nodes[i], &rule.weights[i], table.get());
  return rule;
}

Rule1D composite_gauss(int panels, int order, double a, double b) {
  if (panels < 1) throw DomainError("composite_gauss: need at least one panel");
  const Rule1D ref = gauss_legendre(order, 0.0, 1.0);
  const double width = (b - a) / panels;
  Rule1D rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * order);
  rule.weights.reserve(rule.nodes.capacity());
  for (int p = 0; p < panels; ++p) {
    const double left = a + p * width;
    for (int i = 0; i < order; ++i) {
      rule.nodes.push_back(left + width * ref.nodes[i]);
      rule.weights.push_back(width * ref.weights[i]);
    }
  }
  return rule;
}

SphericalQuadrature SphericalQuadrature::product(int n_polar, int n_azimuth, const Mat3& frame) {
  const Rule1D mu = gauss_legendre(n_polar, -1.0, 1.0);
  SphericalQuadrature q;
  q.nodes.reserve(static_cast<std::size_t>(n_polar) * n_azimuth);
  q.weights.reserve(q.nodes.capacity());
  const double dphi = 2.0 * pi / n_azimuth;
  for (int i = 0; i < n_polar; ++i) {
    const double c = mu.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < n_azimuth; ++j) {
      const double phi = (j + 0.5) * dphi;
      q.nodes.push_back(frame * Vec3(s * std::cos(phi), s * std::sin(phi), c));
      q.weights.push_back(mu.weights[i] * dphi);
    }
  }
  return q;
}

std::vector<CylindricalGrid::Node> CylindricalGrid::nodes() const {
  const Rule1D rr = composite_gauss(panels, n_r, 0.0, r_max);
  const Rule1D zz = composite_gauss(panels, n_z, -z_max, z_max);
  const double dth = 2.0 * pi / n_theta;
  std::vector<Node> out;
  out.reserve(rr.nodes.size() * zz.nodes.size() * n_theta);
  for (std::size_t i = 0; i < rr.nodes.size(); ++i)
    for (int k = 0; k < n_theta; ++k)
      for (std::size_t j = 0; j < zz.nodes.size(); ++j)
        out.push_back({rr.nodes[i], k * dth, zz.nodes[j], rr.weights[i] * zz.weights[j] * dth * rr.nodes[i]});
  return out;
}

std::vector<BallGrid::Node> BallGrid::nodes() const {
  const Rule1D rad = gauss_legendre(n_radial, 0.0, radius);
  const SphericalQuadrature sph = SphericalQuadrature::product(n_polar, n_azimuth, frame);
  std::vector<Node> out;
  out.reserve(rad.nodes.size() * sph.size());
  for (std::size_t i = 0; i < rad.nodes.size(); ++i) {
    const double rho = rad.nodes[i];
    for (std::size_t j = 0; j < sph.size(); ++j)
      out.push_back({rho * sph.nodes[j], rad.weights[i] * rho * rho * sph.weights[j]});
  }
  return out;
}

}  // namespace gyrokit
