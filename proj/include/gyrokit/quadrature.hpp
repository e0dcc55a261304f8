#pragma once

#include "gyrokit/core.hpp"

#include <vector>

namespace gyrokit {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss–Legendre rule on [a, b].
Rule1D gauss_legendre(int n, double a, double b);

// Composite Gauss–Legendre: `panels` equal panels with `order` nodes each.
Rule1D composite_gauss(int panels, int order, double a, double b);

// Product rule on S²: Gauss–Legendre in cos(polar angle) times uniform azimuth.
// The polar axis can be tilted, which gives an independent node set.
struct SphericalQuadrature {
  std::vector<Vec3> nodes;
  std::vector<double> weights;

  static SphericalQuadrature product(int n_polar, int n_azimuth, const Mat3& frame = Mat3::Identity());
  std::size_t size() const { return nodes.size(); }
};

// Momentum grid in cylindrical coordinates (r, θ, z) with θ uniform and
// Gauss nodes in r ∈ [0, r_max] and z ∈ [−z_max, z_max]. The weight includes
// the Jacobian r.
struct CylindricalGrid {
  double r_max = 1.0;
  double z_max = 1.0;
  int n_r = 16;
  int n_theta = 16;
  int n_z = 16;
  int panels = 1;

  struct Node {
    double r, theta, z, weight;
    Vec3 xi() const { return {r * std::cos(theta), r * std::sin(theta), z}; }
  };
  std::vector<Node> nodes() const;
};

// Momentum ball of radius R in spherical coordinates: Gauss in |ξ| times a
// spherical product rule.
struct BallGrid {
  double radius = 1.0;
  int n_radial = 12;
  int n_polar = 12;
  int n_azimuth = 24;
  Mat3 frame = Mat3::Identity();

  struct Node {
    Vec3 xi;
    double weight;
  };
  std::vector<Node> nodes() const;
};

}  // namespace gyrokit
