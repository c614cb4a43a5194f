#include "geoinv/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace geoinv {

VoxelDomain VoxelDomain::make(double x_min, double x_max, double y_min, double y_max,
                              double z_min, double z_max, int nx, int ny, int nz) {
  if (nx <= 0 || ny <= 0 || nz <= 0) {
    throw std::invalid_argument("VoxelDomain: cell counts must be positive");
  }
  if (!(x_max > x_min) || !(y_max > y_min) || !(z_max > z_min)) {
    throw std::invalid_argument("VoxelDomain: extents must be strictly positive");
  }
  VoxelDomain d;
  d.x_min = x_min; d.x_max = x_max;
  d.y_min = y_min; d.y_max = y_max;
  d.z_min = z_min; d.z_max = z_max;
  d.nx = nx; d.ny = ny; d.nz = nz;
  return d;
}

bool VoxelDomain::cubic(double rel_tol) const {
  const double dx = cell_dx(), dy = cell_dy(), dz = cell_dz();
  const double scale = std::max({dx, dy, dz});
  return std::abs(dx - dy) <= rel_tol * scale && std::abs(dx - dz) <= rel_tol * scale;
}

SensorPlane SensorPlane::make(double x_min, double x_max, double y_min, double y_max,
                              int mx, int my, double z_s, const VoxelDomain& domain) {
  if (mx <= 0 || my <= 0) {
    throw std::invalid_argument("SensorPlane: sensor counts must be positive");
  }
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw std::invalid_argument("SensorPlane: extents must be strictly positive");
  }
  if (z_s >= domain.z_min && z_s <= domain.z_max) {
    throw std::invalid_argument("SensorPlane: z_s = " + std::to_string(z_s) +
                                " lies inside the domain z interval [" +
                                std::to_string(domain.z_min) + ", " +
                                std::to_string(domain.z_max) + "]");
  }
  SensorPlane p;
  p.x_min = x_min; p.x_max = x_max;
  p.y_min = y_min; p.y_max = y_max;
  p.mx = mx; p.my = my;
  p.z_s = z_s;
  return p;
}

PhysicalConstants PhysicalConstants::si() {
  PhysicalConstants c;
  c.G = 6.67430e-11;
  c.mu0 = 4.0 * std::numbers::pi * 1e-7;
  c.unit_mode = UnitMode::SI;
  return c;
}

PhysicalConstants PhysicalConstants::dimensionless() {
  PhysicalConstants c;
  c.G = 1.0;
  c.mu0 = 4.0 * std::numbers::pi;
  c.unit_mode = UnitMode::Dimensionless;
  return c;
}

MagnetizationDirection MagnetizationDirection::make(const Vec3& v) {
  const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (!(len > 0.0) || !std::isfinite(len)) {
    throw std::invalid_argument("MagnetizationDirection: zero or non-finite vector");
  }
  MagnetizationDirection d;
  d.n = {v[0] / len, v[1] / len, v[2] / len};
  return d;
}

std::vector<Vec3> cell_centers(const VoxelDomain& domain) {
  std::vector<Vec3> centers;
  centers.reserve(domain.cell_count());
  const double dx = domain.cell_dx(), dy = domain.cell_dy(), dz = domain.cell_dz();
  for (int kz = 0; kz < domain.nz; ++kz) {
    const double z = domain.z_min + (kz + 0.5) * dz;
    for (int kx = 0; kx < domain.nx; ++kx) {
      const double x = domain.x_min + (kx + 0.5) * dx;
      for (int ky = 0; ky < domain.ny; ++ky) {
        centers.push_back({x, domain.y_min + (ky + 0.5) * dy, z});
      }
    }
  }
  return centers;
}

std::vector<Vec3> sensor_positions(const SensorPlane& plane) {
  std::vector<Vec3> positions;
  positions.reserve(plane.sensor_count());
  const double dx = plane.cell_dx(), dy = plane.cell_dy();
  for (int ix = 0; ix < plane.mx; ++ix) {
    const double x = plane.x_min + (ix + 0.5) * dx;
    for (int iy = 0; iy < plane.my; ++iy) {
      positions.push_back({x, plane.y_min + (iy + 0.5) * dy, plane.z_s});
    }
  }
  return positions;
}

long voxel_index(int k_z, int k_x, int k_y, const VoxelDomain& domain) {
  if (k_z < 0 || k_z >= domain.nz || k_x < 0 || k_x >= domain.nx || k_y < 0 ||
      k_y >= domain.ny) {
    throw std::out_of_range("voxel_index: cell index out of range");
  }
  return (static_cast<long>(k_z) * domain.nx + k_x) * domain.ny + k_y;
}

std::array<int, 3> voxel_coords(long flat, const VoxelDomain& domain) {
  if (flat < 0 || flat >= domain.cell_count()) {
    throw std::out_of_range("voxel_coords: flat index out of range");
  }
  const int k_y = static_cast<int>(flat % domain.ny);
  const long rest = flat / domain.ny;
  const int k_x = static_cast<int>(rest % domain.nx);
  const int k_z = static_cast<int>(rest / domain.nx);
  return {k_z, k_x, k_y};
}

OccupancyField OccupancyField::zeros(const VoxelDomain& domain, bool binary) {
  return zeros(domain.nz, domain.nx, domain.ny, binary);
}

OccupancyField OccupancyField::zeros(int nz, int nx, int ny, bool binary) {
  OccupancyField f;
  f.nz = nz; f.nx = nx; f.ny = ny;
  f.binary = binary;
  f.values.assign(static_cast<std::size_t>(nz) * nx * ny, 0.0);
  return f;
}

long OccupancyField::occupied_count(double tau) const {
  long n = 0;
  for (double v : values) {
    if (v >= tau) ++n;
  }
  return n;
}

void OccupancyField::validate() const {
  if (values.size() != static_cast<std::size_t>(size())) {
    throw std::invalid_argument("OccupancyField: value buffer does not match shape");
  }
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("OccupancyField: value outside [0,1]");
    }
    if (binary && v != 0.0 && v != 1.0) {
      throw std::invalid_argument("OccupancyField: non-binary value in binary field");
    }
  }
}

VoxelDomain default_domain() {
  // 16 cells of 50 m in depth: [0, 800] keeps the cells cubic. The larger
  // depth extent quoted elsewhere is available through configuration.
  return VoxelDomain::make(0.0, 1600.0, 0.0, 1600.0, 0.0, 800.0, 32, 32, 16);
}

SensorPlane default_plane(const VoxelDomain& domain) {
  // 0.1 m above the top face; z points down, so "above" is below z_min.
  return SensorPlane::make(domain.x_min, domain.x_max, domain.y_min, domain.y_max,
                           32, 32, domain.z_min - 0.1, domain);
}

}  // namespace geoinv
