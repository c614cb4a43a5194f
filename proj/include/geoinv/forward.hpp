#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "geoinv/grid.hpp"

namespace geoinv {

/// Scalar field sampled on a sensor plane (gravitational potential or the
/// z-component of magnetic induction), stored row-major in x with y fastest,
/// matching sensor_positions.
struct FieldMap {
  SensorPlane plane;
  std::vector<double> values;

  static FieldMap zeros(const SensorPlane& plane);

  long size() const { return plane.sensor_count(); }
  double& at(int ix, int iy) { return values[static_cast<long>(ix) * plane.my + iy]; }
  double at(int ix, int iy) const { return values[static_cast<long>(ix) * plane.my + iy]; }
  double max_abs() const;
  double rms() const;
  /// Throws if any value is non-finite or the buffer does not match the plane.
  void validate() const;
};

enum class FieldKind { Gravity, MagneticZ };

enum class MatrixStorage { Dense64, Dense32, MatrixFree };

/// Discretized forward operator: S x N map from voxel occupancy to the field
/// at the sensors, with unit amplitude folded in (gravity rows carry
/// G*dv/r, magnetic rows mu0/4pi * (K n)_z * dv). Dense storage is the
/// default; float32 and matrix-free modes trade memory for recomputation.
class ForwardMatrix {
 public:
  static ForwardMatrix assemble(const VoxelDomain& domain, const SensorPlane& plane,
                                FieldKind kind, const PhysicalConstants& constants,
                                std::optional<MagnetizationDirection> mag_dir = {},
                                MatrixStorage storage = MatrixStorage::Dense64,
                                int threads = 0);

  /// field = amplitude * (A * occupancy). Sensor rows are independent, so the
  /// result is bit-identical for any worker count.
  FieldMap apply(std::span<const double> occupancy, double amplitude,
                 int threads = 0) const;

  FieldKind kind() const { return kind_; }
  MatrixStorage storage() const { return storage_; }
  long rows() const { return plane_.sensor_count(); }
  long cols() const { return domain_.cell_count(); }
  double entry(long row, long col) const;
  const VoxelDomain& domain() const { return domain_; }
  const SensorPlane& plane() const { return plane_; }
  const PhysicalConstants& constants() const { return constants_; }
  const Vec3& mag_dir() const { return mag_dir_; }

 private:
  ForwardMatrix() = default;
  double entry_direct(long row, long col) const;

  FieldKind kind_ = FieldKind::Gravity;
  MatrixStorage storage_ = MatrixStorage::Dense64;
  VoxelDomain domain_;
  SensorPlane plane_;
  PhysicalConstants constants_;
  Vec3 mag_dir_{0.0, 0.0, 1.0};
  std::vector<Vec3> centers_;
  std::vector<Vec3> sensors_;
  std::vector<double> dense64_;
  std::vector<float> dense32_;
};

/// phi = rho * (A_g * occupancy); linear in both factors.
FieldMap forward_gravity(const OccupancyField& occupancy, double rho,
                         const ForwardMatrix& matrix, int threads = 0);

/// b = m * (A_m * occupancy).
FieldMap forward_magnetic_z(const OccupancyField& occupancy, double m,
                            const ForwardMatrix& matrix, int threads = 0);

/// Vertical gravity gradient map g_z = d(phi)/dz along the upward direction
/// (z points down, so upward is -z). Feeds the g_z -> potential conversion
/// checks and the real-data ingestion path.
FieldMap forward_gravity_gz(const OccupancyField& occupancy, double rho,
                            const VoxelDomain& domain, const SensorPlane& plane,
                            const PhysicalConstants& constants, int threads = 0);

/// Exact integral of 1/sqrt((x_s-x')^2 + (y_s-y')^2) over the rectangle
/// [x0,x1] x [y0,y1]. Finite even when the sensor lies inside (integrable
/// singularity).
double cell_inverse_r_integral(double sensor_x, double sensor_y, double x0, double x1,
                               double y0, double y1);

/// phi(r_s) = -(1/2pi) * sum_k C_k(x_s, y_s) * g_z(x_k, y_k) over the plane's
/// own cell partition.
FieldMap gz_to_potential(const FieldMap& gz, const SensorPlane& plane, int threads = 0);

/// Two distinct radial density profiles on a ball of radius `a` whose
/// (r^2-weighted) difference integrates to zero, voxelized and forward
/// modeled to show that the external potentials coincide up to
/// discretization error.
struct RadialNullspaceResult {
  std::vector<double> radii;
  std::vector<double> profile_a;       // baseline density
  std::vector<double> profile_b;       // baseline + zero-moment perturbation
  double max_abs_potential_diff = 0.0; // over sensors at >= 3a
  double max_abs_potential = 0.0;      // of the baseline body, same sensors
};

RadialNullspaceResult radial_nullspace_demo(double a, int n_profile_points = 101,
                                            int voxels_per_axis = 40, int threads = 0);

/// Literal transcription of the discretized field sums, one sensor at a
/// time with index-ascending accumulation. Serial by construction; kept as
/// the reference the matrix path is tested and benchmarked against.
namespace reference {

FieldMap gravity_potential(const VoxelDomain& domain, const SensorPlane& plane,
                           std::span<const double> density, double G);

FieldMap magnetic_z(const VoxelDomain& domain, const SensorPlane& plane,
                    std::span<const double> magnetization, const Vec3& mag_dir,
                    double mu0);

}  // namespace reference

}  // namespace geoinv
