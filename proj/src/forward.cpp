#include "geoinv/forward.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "geoinv/kernels.hpp"
#include "geoinv/parallel.hpp"

namespace geoinv {

FieldMap FieldMap::zeros(const SensorPlane& plane) {
  FieldMap f;
  f.plane = plane;
  f.values.assign(static_cast<std::size_t>(plane.sensor_count()), 0.0);
  return f;
}

double FieldMap::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double FieldMap::rms() const {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s / static_cast<double>(values.size()));
}

void FieldMap::validate() const {
  if (values.size() != static_cast<std::size_t>(plane.sensor_count())) {
    throw std::invalid_argument("FieldMap: value buffer does not match plane");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("FieldMap: non-finite value");
  }
}

ForwardMatrix ForwardMatrix::assemble(const VoxelDomain& domain, const SensorPlane& plane,
                                      FieldKind kind, const PhysicalConstants& constants,
                                      std::optional<MagnetizationDirection> mag_dir,
                                      MatrixStorage storage, int threads) {
  if (kind == FieldKind::MagneticZ && !mag_dir) {
    throw std::invalid_argument("ForwardMatrix: magnetic kind requires a magnetization direction");
  }
  ForwardMatrix fm;
  fm.kind_ = kind;
  fm.storage_ = storage;
  fm.domain_ = domain;
  fm.plane_ = plane;
  fm.constants_ = constants;
  if (mag_dir) fm.mag_dir_ = mag_dir->n;
  fm.centers_ = cell_centers(domain);
  fm.sensors_ = sensor_positions(plane);

  if (storage == MatrixStorage::MatrixFree) return fm;

  const long rows = fm.rows(), cols = fm.cols();
  const int nthreads = effective_threads(threads, false);
  if (storage == MatrixStorage::Dense64) {
    fm.dense64_.resize(static_cast<std::size_t>(rows) * cols);
  } else {
    fm.dense32_.resize(static_cast<std::size_t>(rows) * cols);
  }
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (long j = 0; j < rows; ++j) {
    for (long i = 0; i < cols; ++i) {
      const double e = fm.entry_direct(j, i);
      if (storage == MatrixStorage::Dense64) {
        fm.dense64_[static_cast<std::size_t>(j) * cols + i] = e;
      } else {
        fm.dense32_[static_cast<std::size_t>(j) * cols + i] = static_cast<float>(e);
      }
    }
  }
  return fm;
}

double ForwardMatrix::entry_direct(long row, long col) const {
  const double dv = domain_.cell_volume();
  if (kind_ == FieldKind::Gravity) {
    return constants_.G * gravity_kernel(centers_[col], sensors_[row]) * dv;
  }
  const double scale = constants_.mu0 / (4.0 * std::numbers::pi);
  return scale * magnetic_kernel_z(centers_[col], sensors_[row], mag_dir_) * dv;
}

double ForwardMatrix::entry(long row, long col) const {
  if (row < 0 || row >= rows() || col < 0 || col >= cols()) {
    throw std::out_of_range("ForwardMatrix::entry: index out of range");
  }
  switch (storage_) {
    case MatrixStorage::Dense64:
      return dense64_[static_cast<std::size_t>(row) * cols() + col];
    case MatrixStorage::Dense32:
      return dense32_[static_cast<std::size_t>(row) * cols() + col];
    case MatrixStorage::MatrixFree:
      return entry_direct(row, col);
  }
  return 0.0;
}

FieldMap ForwardMatrix::apply(std::span<const double> occupancy, double amplitude,
                              int threads) const {
  if (static_cast<long>(occupancy.size()) != cols()) {
    throw std::invalid_argument("ForwardMatrix::apply: occupancy size does not match domain");
  }
  FieldMap out = FieldMap::zeros(plane_);
  const long rows_n = rows(), cols_n = cols();
  const int nthreads = effective_threads(threads, false);
  // Each row is one independent dot product accumulated in ascending cell
  // index, so the values do not depend on the worker count.
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (long j = 0; j < rows_n; ++j) {
    double acc = 0.0;
    if (storage_ == MatrixStorage::Dense64) {
      const double* row = dense64_.data() + static_cast<std::size_t>(j) * cols_n;
      for (long i = 0; i < cols_n; ++i) acc += row[i] * occupancy[i];
    } else if (storage_ == MatrixStorage::Dense32) {
      const float* row = dense32_.data() + static_cast<std::size_t>(j) * cols_n;
      for (long i = 0; i < cols_n; ++i) acc += static_cast<double>(row[i]) * occupancy[i];
    } else {
      for (long i = 0; i < cols_n; ++i) {
        if (occupancy[i] == 0.0) continue;
        acc += entry_direct(j, i) * occupancy[i];
      }
    }
    out.values[j] = amplitude * acc;
  }
  return out;
}

FieldMap forward_gravity(const OccupancyField& occupancy, double rho,
                         const ForwardMatrix& matrix, int threads) {
  if (matrix.kind() != FieldKind::Gravity) {
    throw std::invalid_argument("forward_gravity: matrix kind is not gravity");
  }
  if (!occupancy.matches(matrix.domain())) {
    throw std::invalid_argument("forward_gravity: occupancy shape does not match domain");
  }
  if (!std::isfinite(rho)) throw std::invalid_argument("forward_gravity: rho is not finite");
  return matrix.apply(occupancy.values, rho, threads);
}

FieldMap forward_magnetic_z(const OccupancyField& occupancy, double m,
                            const ForwardMatrix& matrix, int threads) {
  if (matrix.kind() != FieldKind::MagneticZ) {
    throw std::invalid_argument("forward_magnetic_z: matrix kind is not magnetic_z");
  }
  if (!occupancy.matches(matrix.domain())) {
    throw std::invalid_argument("forward_magnetic_z: occupancy shape does not match domain");
  }
  if (!std::isfinite(m)) throw std::invalid_argument("forward_magnetic_z: m is not finite");
  return matrix.apply(occupancy.values, m, threads);
}

FieldMap forward_gravity_gz(const OccupancyField& occupancy, double rho,
                            const VoxelDomain& domain, const SensorPlane& plane,
                            const PhysicalConstants& constants, int threads) {
  if (!occupancy.matches(domain)) {
    throw std::invalid_argument("forward_gravity_gz: occupancy shape does not match domain");
  }
  const auto centers = cell_centers(domain);
  const auto sensors = sensor_positions(plane);
  const double dv = domain.cell_volume();
  FieldMap out = FieldMap::zeros(plane);
  const long rows = plane.sensor_count();
  const long cols = domain.cell_count();
  const int nthreads = effective_threads(threads, false);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (long j = 0; j < rows; ++j) {
    double acc = 0.0;
    for (long i = 0; i < cols; ++i) {
      if (occupancy.values[i] == 0.0) continue;
      const double dx = centers[i][0] - sensors[j][0];
      const double dy = centers[i][1] - sensors[j][1];
      const double dz = centers[i][2] - sensors[j][2];
      const double r2 = dx * dx + dy * dy + dz * dz;
      const double r = std::sqrt(r2);
      if (r <= kCoincidenceTol) throw CoincidentPointError(r);
      // d/dz_s of 1/r is dz/r^3; upward is -z.
      acc += occupancy.values[i] * (-dz / (r2 * r));
    }
    out.values[j] = constants.G * rho * dv * acc;
  }
  return out;
}

namespace {

// One term of the antiderivative x*asinh(y/|x|), continued by 0 on x = 0.
double asinh_term(double x, double y) {
  if (x == 0.0) return 0.0;
  return x * std::asinh(y / std::abs(x));
}

}  // namespace

double cell_inverse_r_integral(double sensor_x, double sensor_y, double x0, double x1,
                               double y0, double y1) {
  if (!(x1 > x0) || !(y1 > y0)) {
    throw std::invalid_argument("cell_inverse_r_integral: degenerate rectangle");
  }
  // Corner evaluation of F(x,y) = x*asinh(y/|x|) + y*asinh(x/|y|) with the
  // sensor at the origin; F is odd in each argument, which keeps the signed
  // corner sum finite across the singularity.
  const double a0 = x0 - sensor_x, a1 = x1 - sensor_x;
  const double b0 = y0 - sensor_y, b1 = y1 - sensor_y;
  const auto F = [](double x, double y) { return asinh_term(x, y) + asinh_term(y, x); };
  return F(a1, b1) - F(a0, b1) - F(a1, b0) + F(a0, b0);
}

FieldMap gz_to_potential(const FieldMap& gz, const SensorPlane& plane, int threads) {
  if (gz.plane.mx != plane.mx || gz.plane.my != plane.my ||
      static_cast<long>(gz.values.size()) != plane.sensor_count()) {
    throw std::invalid_argument("gz_to_potential: grid shape does not match plane");
  }
  const auto sensors = sensor_positions(plane);
  const double dx = plane.cell_dx(), dy = plane.cell_dy();
  FieldMap out = FieldMap::zeros(plane);
  const long n = plane.sensor_count();
  const int nthreads = effective_threads(threads, false);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (long j = 0; j < n; ++j) {
    const double sx = sensors[j][0], sy = sensors[j][1];
    double acc = 0.0;
    long k = 0;
    for (int ix = 0; ix < plane.mx; ++ix) {
      const double cx0 = plane.x_min + ix * dx;
      for (int iy = 0; iy < plane.my; ++iy, ++k) {
        const double cy0 = plane.y_min + iy * dy;
        acc += cell_inverse_r_integral(sx, sy, cx0, cx0 + dx, cy0, cy0 + dy) * gz.values[k];
      }
    }
    out.values[j] = -acc / (2.0 * std::numbers::pi);
  }
  return out;
}

RadialNullspaceResult radial_nullspace_demo(double a, int n_profile_points,
                                            int voxels_per_axis, int threads) {
  if (!(a > 0.0)) throw std::invalid_argument("radial_nullspace_demo: radius must be positive");
  if (n_profile_points < 3) n_profile_points = 3;

  // Baseline rho(r) = 1 plus a linear perturbation c*(r - 3a/4), whose
  // r^2-weighted integral over [0,a] vanishes identically. c is small enough
  // to keep the sum strictly positive.
  const double pivot = 0.75 * a;
  const double c = 2.0 / (3.0 * a);
  RadialNullspaceResult res;
  res.radii.resize(n_profile_points);
  res.profile_a.resize(n_profile_points);
  res.profile_b.resize(n_profile_points);
  for (int i = 0; i < n_profile_points; ++i) {
    const double r = a * static_cast<double>(i) / (n_profile_points - 1);
    res.radii[i] = r;
    res.profile_a[i] = 1.0;
    res.profile_b[i] = 1.0 + c * (r - pivot);
  }

  // Voxelize both profiles on a ball-covering domain and compare external
  // potentials on a small sensor grid 3a above the center.
  const int n = voxels_per_axis;
  const auto domain = VoxelDomain::make(-a, a, -a, a, -a, a, n, n, n);
  const auto plane = SensorPlane::make(-a, a, -a, a, 5, 5, -3.0 * a, domain);
  const auto centers = cell_centers(domain);
  const double profile_peak = 1.0 + c * a / 4.0;

  std::vector<double> density_a(centers.size(), 0.0), density_b(centers.size(), 0.0);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double r = std::sqrt(centers[i][0] * centers[i][0] +
                               centers[i][1] * centers[i][1] +
                               centers[i][2] * centers[i][2]);
    if (r <= a) {
      density_a[i] = 1.0 / profile_peak;
      density_b[i] = (1.0 + c * (r - pivot)) / profile_peak;
    }
  }

  const auto constants = PhysicalConstants::dimensionless();
  auto matrix = ForwardMatrix::assemble(domain, plane, FieldKind::Gravity, constants, {},
                                        MatrixStorage::Dense64, threads);
  const FieldMap phi_a = matrix.apply(density_a, 1.0, threads);
  const FieldMap phi_b = matrix.apply(density_b, 1.0, threads);
  for (long j = 0; j < phi_a.size(); ++j) {
    res.max_abs_potential_diff =
        std::max(res.max_abs_potential_diff, std::abs(phi_a.values[j] - phi_b.values[j]));
    res.max_abs_potential = std::max(res.max_abs_potential, std::abs(phi_a.values[j]));
  }
  return res;
}

namespace reference {

FieldMap gravity_potential(const VoxelDomain& domain, const SensorPlane& plane,
                           std::span<const double> density, double G) {
  if (static_cast<long>(density.size()) != domain.cell_count()) {
    throw std::invalid_argument("reference::gravity_potential: density size mismatch");
  }
  const auto centers = cell_centers(domain);
  const auto sensors = sensor_positions(plane);
  const double dv = domain.cell_volume();
  FieldMap out = FieldMap::zeros(plane);
  for (long j = 0; j < plane.sensor_count(); ++j) {
    double phi = 0.0;
    for (long i = 0; i < domain.cell_count(); ++i) {
      const double dx = centers[i][0] - sensors[j][0];
      const double dy = centers[i][1] - sensors[j][1];
      const double dz = centers[i][2] - sensors[j][2];
      const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
      phi += density[i] / r * dv;
    }
    out.values[j] = G * phi;
  }
  return out;
}

FieldMap magnetic_z(const VoxelDomain& domain, const SensorPlane& plane,
                    std::span<const double> magnetization, const Vec3& mag_dir,
                    double mu0) {
  if (static_cast<long>(magnetization.size()) != domain.cell_count()) {
    throw std::invalid_argument("reference::magnetic_z: magnetization size mismatch");
  }
  const auto centers = cell_centers(domain);
  const auto sensors = sensor_positions(plane);
  const double dv = domain.cell_volume();
  FieldMap out = FieldMap::zeros(plane);
  for (long j = 0; j < plane.sensor_count(); ++j) {
    double bz = 0.0;
    for (long i = 0; i < domain.cell_count(); ++i) {
      const double dx = centers[i][0] - sensors[j][0];
      const double dy = centers[i][1] - sensors[j][1];
      const double dz = centers[i][2] - sensors[j][2];
      const double r2 = dx * dx + dy * dy + dz * dz;
      const double r5 = r2 * r2 * std::sqrt(r2);
      const double kz = (3.0 * dz * dx * mag_dir[0] + 3.0 * dz * dy * mag_dir[1] +
                         (3.0 * dz * dz - r2) * mag_dir[2]) / r5;
      bz += kz * magnetization[i] * dv;
    }
    out.values[j] = mu0 / (4.0 * std::numbers::pi) * bz;
  }
  return out;
}

}  // namespace reference

}  // namespace geoinv
