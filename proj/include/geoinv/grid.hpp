#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace geoinv {

using Vec3 = std::array<double, 3>;

/// Axis-aligned voxelized source domain. The z axis points down into the
/// ground: z_min is the top face, z_max the bottom. Immutable after make().
struct VoxelDomain {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  double z_min = 0.0, z_max = 0.0;
  int nx = 0, ny = 0, nz = 0;

  static VoxelDomain make(double x_min, double x_max, double y_min, double y_max,
                          double z_min, double z_max, int nx, int ny, int nz);

  double cell_dx() const { return (x_max - x_min) / nx; }
  double cell_dy() const { return (y_max - y_min) / ny; }
  double cell_dz() const { return (z_max - z_min) / nz; }
  double cell_volume() const { return cell_dx() * cell_dy() * cell_dz(); }
  long cell_count() const { return static_cast<long>(nx) * ny * nz; }
  bool cubic(double rel_tol = 1e-12) const;
};

/// Horizontal sensor rectangle at height z_s. Construction requires the
/// domain it observes: a plane whose z_s falls inside [z_min, z_max] is
/// rejected, never silently accepted.
struct SensorPlane {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  int mx = 0, my = 0;
  double z_s = 0.0;

  static SensorPlane make(double x_min, double x_max, double y_min, double y_max,
                          int mx, int my, double z_s, const VoxelDomain& domain);

  long sensor_count() const { return static_cast<long>(mx) * my; }
  double cell_dx() const { return (x_max - x_min) / mx; }
  double cell_dy() const { return (y_max - y_min) / my; }
};

enum class UnitMode { SI, Dimensionless };

struct PhysicalConstants {
  double G = 1.0;
  double mu0 = 0.0;
  UnitMode unit_mode = UnitMode::Dimensionless;

  static PhysicalConstants si();
  /// G = mu0/(4*pi) = 1.
  static PhysicalConstants dimensionless();
};

/// Unit vector of induced magnetization. Normalized on construction.
struct MagnetizationDirection {
  Vec3 n{0.0, 0.0, 1.0};

  static MagnetizationDirection make(const Vec3& v);
};

/// Cell-center positions, depth-major: index (k_z, k_x, k_y) with k_y fastest,
/// so a fixed k_z selects one constant-depth slice.
std::vector<Vec3> cell_centers(const VoxelDomain& domain);

/// Sensor positions at the centers of the plane's cells, row-major in x with
/// y fastest. All positions share z = z_s.
std::vector<Vec3> sensor_positions(const SensorPlane& plane);

/// Flat index of cell (k_z, k_x, k_y); inverse of voxel_coords.
long voxel_index(int k_z, int k_x, int k_y, const VoxelDomain& domain);
std::array<int, 3> voxel_coords(long flat, const VoxelDomain& domain);

/// Voxel values on a domain, same ordering as cell_centers. Ground-truth
/// bodies are binary {0,1}; network outputs are continuous in [0,1].
struct OccupancyField {
  int nz = 0, nx = 0, ny = 0;
  std::vector<double> values;
  bool binary = false;

  static OccupancyField zeros(const VoxelDomain& domain, bool binary = false);
  static OccupancyField zeros(int nz, int nx, int ny, bool binary = false);

  long size() const { return static_cast<long>(nz) * nx * ny; }
  double& at(int k_z, int k_x, int k_y) {
    return values[(static_cast<long>(k_z) * nx + k_x) * ny + k_y];
  }
  double at(int k_z, int k_x, int k_y) const {
    return values[(static_cast<long>(k_z) * nx + k_x) * ny + k_y];
  }
  bool matches(const VoxelDomain& domain) const {
    return nz == domain.nz && nx == domain.nx && ny == domain.ny;
  }
  long occupied_count(double tau = 0.5) const;
  /// Throws if any value is outside [0,1] (or not in {0,1} when binary).
  void validate() const;
};

/// Paper-scale defaults: 1600 m x 1600 m footprint, 50 m cubic cells,
/// 32x32x16 domain, 32x32 sensors 0.1 m above the top face.
VoxelDomain default_domain();
SensorPlane default_plane(const VoxelDomain& domain);

}  // namespace geoinv
