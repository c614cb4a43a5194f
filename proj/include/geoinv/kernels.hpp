#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "geoinv/grid.hpp"

namespace geoinv {

/// Sensors coinciding with cell centers make the point kernels singular;
/// geometry construction keeps them apart, so a hit is a hard error rather
/// than a regularized value.
inline constexpr double kCoincidenceTol = 1e-9;

struct CoincidentPointError : std::domain_error {
  explicit CoincidentPointError(double r)
      : std::domain_error("coincident source/sensor point (r = " + std::to_string(r) + ")") {}
};

/// Point-source gravity kernel 1/r.
inline double gravity_kernel(const Vec3& cell_center, const Vec3& sensor,
                             double r_tol = kCoincidenceTol) {
  const double dx = cell_center[0] - sensor[0];
  const double dy = cell_center[1] - sensor[1];
  const double dz = cell_center[2] - sensor[2];
  const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (r <= r_tol) throw CoincidentPointError(r);
  return 1.0 / r;
}

using Mat3 = std::array<double, 9>;  // row-major

/// Point-dipole kernel (3*d_a*d_b - delta_ab*r^2) / r^5 with
/// d = cell_center - sensor. Symmetric, trace-free.
inline Mat3 magnetic_kernel(const Vec3& cell_center, const Vec3& sensor,
                            double r_tol = kCoincidenceTol) {
  const double dx = cell_center[0] - sensor[0];
  const double dy = cell_center[1] - sensor[1];
  const double dz = cell_center[2] - sensor[2];
  const double r2 = dx * dx + dy * dy + dz * dz;
  const double r = std::sqrt(r2);
  if (r <= r_tol) throw CoincidentPointError(r);
  const double inv_r5 = 1.0 / (r2 * r2 * r);
  const double xy = 3.0 * dx * dy * inv_r5;
  const double xz = 3.0 * dx * dz * inv_r5;
  const double yz = 3.0 * dy * dz * inv_r5;
  return {(3.0 * dx * dx - r2) * inv_r5, xy, xz,
          xy, (3.0 * dy * dy - r2) * inv_r5, yz,
          xz, yz, (3.0 * dz * dz - r2) * inv_r5};
}

/// z-component of the dipole kernel applied to a unit magnetization
/// direction: the only magnetic observable used here.
inline double magnetic_kernel_z(const Vec3& cell_center, const Vec3& sensor,
                                const Vec3& mag_dir, double r_tol = kCoincidenceTol) {
  const double dx = cell_center[0] - sensor[0];
  const double dy = cell_center[1] - sensor[1];
  const double dz = cell_center[2] - sensor[2];
  const double r2 = dx * dx + dy * dy + dz * dz;
  const double r = std::sqrt(r2);
  if (r <= r_tol) throw CoincidentPointError(r);
  const double inv_r5 = 1.0 / (r2 * r2 * r);
  return (3.0 * dz * dx * mag_dir[0] + 3.0 * dz * dy * mag_dir[1] +
          (3.0 * dz * dz - r2) * mag_dir[2]) * inv_r5;
}

}  // namespace geoinv
