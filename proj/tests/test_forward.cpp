#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "geoinv/forward.hpp"
#include "geoinv/kernels.hpp"
#include "geoinv/rng.hpp"
#include "oracles.hpp"

using namespace geoinv;

namespace {

// small custom geometry helpers
VoxelDomain tiny_domain(int nx, int ny, int nz, double cell = 1.0) {
  return VoxelDomain::make(0, cell * nx, 0, cell * ny, 0, cell * nz, nx, ny, nz);
}

}  // namespace

TEST_CASE("gravity kernel: 1/r and the coincident-point error") {
  CHECK(gravity_kernel({0, 0, 0}, {0, 0, 2}) == doctest::Approx(0.5));
  CHECK(gravity_kernel({3, 4, 0}, {0, 0, 0}) == doctest::Approx(0.2));
  CHECK_THROWS_AS(gravity_kernel({1, 1, 1}, {1, 1, 1}), CoincidentPointError);
}

TEST_CASE("magnetic kernel: axis geometry, symmetry, zero trace") {
  SUBCASE("on-axis: diag(-1,-1,2)") {
    const Mat3 k = magnetic_kernel({0, 0, 1}, {0, 0, 0});
    CHECK(k[0] == doctest::Approx(-1.0));
    CHECK(k[4] == doctest::Approx(-1.0));
    CHECK(k[8] == doctest::Approx(2.0));
    CHECK(k[1] == doctest::Approx(0.0));
  }
  SUBCASE("x-axis: (x,x)=2, (y,y)=(z,z)=-1") {
    const Mat3 k = magnetic_kernel({1, 0, 0}, {0, 0, 0});
    CHECK(k[0] == doctest::Approx(2.0));
    CHECK(k[4] == doctest::Approx(-1.0));
    CHECK(k[8] == doctest::Approx(-1.0));
  }
  SUBCASE("random points: symmetric, trace-free") {
    CounterRng rng(7);
    for (int t = 0; t < 50; ++t) {
      const Vec3 c = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
      const Vec3 s = {rng.uniform(6, 9), rng.uniform(6, 9), rng.uniform(6, 9)};
      const Mat3 k = magnetic_kernel(c, s);
      CHECK(std::abs(k[0] + k[4] + k[8]) <= 1e-12 * (std::abs(k[0]) + std::abs(k[4]) + std::abs(k[8])));
      CHECK(k[1] == k[3]);
      CHECK(k[2] == k[6]);
      CHECK(k[5] == k[7]);
    }
  }
}

TEST_CASE("assemble: single cell over single sensor") {
  const auto d = tiny_domain(1, 1, 1);
  // sensor straight above the cell center at distance 2: plane z = -1.5
  const auto p = SensorPlane::make(0, 1, 0, 1, 1, 1, -1.5, d);
  const auto constants = PhysicalConstants::dimensionless();

  const auto ag = ForwardMatrix::assemble(d, p, FieldKind::Gravity, constants);
  REQUIRE(ag.rows() == 1);
  REQUIRE(ag.cols() == 1);
  CHECK(ag.entry(0, 0) == doctest::Approx(1.0 / 2.0));  // G * dv/r with dv = 1

  const auto am = ForwardMatrix::assemble(d, p, FieldKind::MagneticZ, constants,
                                          MagnetizationDirection::make({0, 0, 1}));
  CHECK(am.entry(0, 0) == doctest::Approx(2.0 / 8.0));  // (mu0/4pi) * 2/d^3 * dv
}

TEST_CASE("assemble: default geometry has a 1024x16384 operator") {
  const auto d = default_domain();
  const auto p = default_plane(d);
  const auto m = ForwardMatrix::assemble(d, p, FieldKind::Gravity,
                                         PhysicalConstants::dimensionless(), {},
                                         MatrixStorage::MatrixFree);
  CHECK(m.rows() == 1024);
  CHECK(m.cols() == 16384);
}

TEST_CASE("forward products: zero body, linearity, superposition") {
  const auto d = tiny_domain(3, 3, 2);
  const auto p = SensorPlane::make(0, 3, 0, 3, 2, 2, -0.5, d);
  const auto constants = PhysicalConstants::dimensionless();
  const auto ag = ForwardMatrix::assemble(d, p, FieldKind::Gravity, constants);
  const auto am = ForwardMatrix::assemble(d, p, FieldKind::MagneticZ, constants,
                                          MagnetizationDirection::make({0, 0, 1}));

  OccupancyField zero = OccupancyField::zeros(d);
  for (double v : forward_gravity(zero, 1.0, ag).values) CHECK(v == 0.0);
  for (double v : forward_magnetic_z(zero, 1.0, am).values) CHECK(v == 0.0);

  OccupancyField one = OccupancyField::zeros(d);
  one.at(1, 1, 1) = 1.0;
  const auto phi1 = forward_gravity(one, 1.0, ag);
  const auto phi2 = forward_gravity(one, 2.0, ag);
  for (long i = 0; i < phi1.size(); ++i) {
    CHECK(phi2.values[i] == doctest::Approx(2.0 * phi1.values[i]).epsilon(1e-12));
  }

  OccupancyField a = OccupancyField::zeros(d), b = OccupancyField::zeros(d),
                 ab = OccupancyField::zeros(d);
  a.at(0, 0, 0) = 1.0;
  b.at(1, 2, 2) = 1.0;
  ab.at(0, 0, 0) = 1.0;
  ab.at(1, 2, 2) = 1.0;
  const auto ba = forward_magnetic_z(a, 1.0, am);
  const auto bb = forward_magnetic_z(b, 1.0, am);
  const auto bab = forward_magnetic_z(ab, 1.0, am);
  for (long i = 0; i < ba.size(); ++i) {
    CHECK(bab.values[i] == doctest::Approx(ba.values[i] + bb.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("linearity over continuous occupancy mixtures") {
  const auto d = tiny_domain(3, 2, 2);
  const auto p = SensorPlane::make(0, 3, 0, 2, 3, 2, -0.7, d);
  const auto ag =
      ForwardMatrix::assemble(d, p, FieldKind::Gravity, PhysicalConstants::dimensionless());
  CounterRng rng(11);
  OccupancyField f1 = OccupancyField::zeros(d), f2 = OccupancyField::zeros(d),
                 mix = OccupancyField::zeros(d);
  const double al = 0.3, be = 0.6;
  for (long i = 0; i < f1.size(); ++i) {
    f1.values[i] = rng.next_double();
    f2.values[i] = rng.next_double();
    mix.values[i] = al * f1.values[i] + be * f2.values[i];
  }
  const auto y1 = forward_gravity(f1, 1.0, ag);
  const auto y2 = forward_gravity(f2, 1.0, ag);
  const auto ym = forward_gravity(mix, 1.0, ag);
  for (long i = 0; i < ym.size(); ++i) {
    const double expect = al * y1.values[i] + be * y2.values[i];
    CHECK(std::abs(ym.values[i] - expect) <= 1e-12 * std::abs(expect));
  }
}

TEST_CASE("matrix path agrees with the literal double-loop transcription") {
  CounterRng rng(123);
  for (int inst = 0; inst < 20; ++inst) {
    const int nx = static_cast<int>(rng.uniform_int(1, 4));
    const int ny = static_cast<int>(rng.uniform_int(1, 4));
    const int nz = static_cast<int>(rng.uniform_int(1, 4));
    const int mx = static_cast<int>(rng.uniform_int(1, 3));
    const int my = static_cast<int>(rng.uniform_int(1, 3));
    const auto d = tiny_domain(nx, ny, nz, 2.0);
    const auto p = SensorPlane::make(0, 2.0 * nx, 0, 2.0 * ny, mx, my,
                                     -rng.uniform(0.3, 2.0), d);
    const auto constants = PhysicalConstants::dimensionless();
    const Vec3 dir = MagnetizationDirection::make(
                         {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 1)})
                         .n;

    OccupancyField body = OccupancyField::zeros(d);
    for (long i = 0; i < body.size(); ++i) body.values[i] = rng.next_double() < 0.4 ? 1.0 : 0.0;
    const double rho = rng.uniform(0.5, 2.0);
    const double m = rng.uniform(0.5, 2.0);

    std::vector<double> density(body.values), magnet(body.values);
    for (auto& v : density) v *= rho;
    for (auto& v : magnet) v *= m;

    const auto ag = ForwardMatrix::assemble(d, p, FieldKind::Gravity, constants);
    const auto am = ForwardMatrix::assemble(d, p, FieldKind::MagneticZ, constants,
                                            MagnetizationDirection{dir});
    const auto phi = forward_gravity(body, rho, ag);
    const auto bz = forward_magnetic_z(body, m, am);
    const auto phi_ref = reference::gravity_potential(d, p, density, constants.G);
    const auto bz_ref = reference::magnetic_z(d, p, magnet, dir, constants.mu0);
    const double bz_scale = bz_ref.max_abs();
    for (long i = 0; i < phi.size(); ++i) {
      CHECK(std::abs(phi.values[i] - phi_ref.values[i]) <= 1e-10 * std::abs(phi_ref.values[i]));
      CHECK(std::abs(bz.values[i] - bz_ref.values[i]) <=
            1e-10 * std::max(std::abs(bz_ref.values[i]), 0.01 * bz_scale));
    }
  }
}

TEST_CASE("storage modes agree: dense64 vs dense32 vs matrix-free") {
  const auto d = tiny_domain(4, 4, 2);
  const auto p = SensorPlane::make(0, 4, 0, 4, 3, 3, -0.4, d);
  const auto constants = PhysicalConstants::dimensionless();
  OccupancyField body = OccupancyField::zeros(d);
  CounterRng rng(5);
  for (long i = 0; i < body.size(); ++i) body.values[i] = rng.next_double() < 0.5 ? 1.0 : 0.0;

  const auto a64 = ForwardMatrix::assemble(d, p, FieldKind::Gravity, constants, {},
                                           MatrixStorage::Dense64);
  const auto a32 = ForwardMatrix::assemble(d, p, FieldKind::Gravity, constants, {},
                                           MatrixStorage::Dense32);
  const auto afree = ForwardMatrix::assemble(d, p, FieldKind::Gravity, constants, {},
                                             MatrixStorage::MatrixFree);
  const auto y64 = a64.apply(body.values, 1.0);
  const auto y32 = a32.apply(body.values, 1.0);
  const auto yfree = afree.apply(body.values, 1.0);
  for (long i = 0; i < y64.size(); ++i) {
    CHECK(y64.values[i] == doctest::Approx(yfree.values[i]).epsilon(1e-12));
    CHECK(y64.values[i] == doctest::Approx(y32.values[i]).epsilon(1e-6));
  }
}

TEST_CASE("apply is bit-identical across worker counts") {
  const auto d = tiny_domain(6, 6, 4);
  const auto p = SensorPlane::make(0, 6, 0, 6, 5, 5, -0.4, d);
  const auto ag =
      ForwardMatrix::assemble(d, p, FieldKind::Gravity, PhysicalConstants::dimensionless());
  CounterRng rng(77);
  std::vector<double> occ(d.cell_count());
  for (auto& v : occ) v = rng.next_double();
  const auto y1 = ag.apply(occ, 1.3, 1);
  const auto y2 = ag.apply(occ, 1.3, 2);
  CHECK(y1.values == y2.values);  // rows are independent dot products
}

TEST_CASE("gravity entries positive; magnetic entries flip with the direction") {
  const auto d = tiny_domain(2, 2, 2);
  const auto p = SensorPlane::make(0, 2, 0, 2, 2, 2, -0.3, d);
  const auto constants = PhysicalConstants::dimensionless();
  const auto ag = ForwardMatrix::assemble(d, p, FieldKind::Gravity, constants);
  for (long j = 0; j < ag.rows(); ++j) {
    for (long i = 0; i < ag.cols(); ++i) CHECK(ag.entry(j, i) > 0.0);
  }
  const Vec3 dir = MagnetizationDirection::make({0.3, -0.5, 0.8}).n;
  const auto am_plus = ForwardMatrix::assemble(d, p, FieldKind::MagneticZ, constants,
                                               MagnetizationDirection{dir});
  const auto am_minus = ForwardMatrix::assemble(
      d, p, FieldKind::MagneticZ, constants,
      MagnetizationDirection{Vec3{-dir[0], -dir[1], -dir[2]}});
  for (long j = 0; j < am_plus.rows(); ++j) {
    for (long i = 0; i < am_plus.cols(); ++i) {
      CHECK(am_plus.entry(j, i) == doctest::Approx(-am_minus.entry(j, i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("potential magnitude decays as the plane is raised") {
  const auto d = tiny_domain(4, 4, 4, 10.0);
  OccupancyField body = OccupancyField::zeros(d);
  body.at(1, 1, 1) = 1.0;
  body.at(2, 2, 2) = 1.0;
  const auto constants = PhysicalConstants::dimensionless();
  double prev = 1e300;
  for (double height : {1.0, 5.0, 20.0, 80.0, 300.0}) {
    const auto p = SensorPlane::make(0, 40, 0, 40, 3, 3, -height, d);
    const auto ag = ForwardMatrix::assemble(d, p, FieldKind::Gravity, constants);
    const double phi_center = forward_gravity(body, 1.0, ag).at(1, 1);
    CHECK(std::abs(phi_center) < prev);
    prev = std::abs(phi_center);
  }
}

TEST_CASE("single-voxel potential matches the Monte-Carlo volume integral within 1%") {
  const double cell = 50.0;
  const auto d = tiny_domain(1, 1, 1, cell);
  // distance 4 cell sides above the cell center
  const double z_s = 25.0 - 4.0 * cell;
  const auto p = SensorPlane::make(0, cell, 0, cell, 1, 1, z_s, d);
  const auto ag =
      ForwardMatrix::assemble(d, p, FieldKind::Gravity, PhysicalConstants::dimensionless());
  OccupancyField body = OccupancyField::zeros(d);
  body.values[0] = 1.0;
  const double phi = forward_gravity(body, 1.0, ag).values[0];
  const double mc = oracles::monte_carlo_cube_potential({0, 0, 0}, {cell, cell, cell},
                                                        {25.0, 25.0, z_s}, 1'000'000, 99);
  CHECK(std::abs(phi - mc) / std::abs(mc) < 0.01);
}

TEST_CASE("cell_inverse_r_integral: frozen value, far field, symmetry, quadrature oracle") {
  SUBCASE("unit square centered on the sensor") {
    const double v = cell_inverse_r_integral(0, 0, -0.5, 0.5, -0.5, 0.5);
    CHECK(v == doctest::Approx(4.0 * std::log(1.0 + std::numbers::sqrt2)).epsilon(1e-9));
    CHECK(v == doctest::Approx(3.52549435).epsilon(1e-6));
  }
  SUBCASE("far field tends to area/R") {
    const double R = 500.0;
    const double v = cell_inverse_r_integral(0, 0, R - 0.5, R + 0.5, -0.5, 0.5);
    CHECK(v == doctest::Approx(1.0 / R).epsilon(0.01));
  }
  SUBCASE("90-degree rotation invariance") {
    const double a = cell_inverse_r_integral(0, 0, 1.0, 3.0, -0.5, 2.0);
    const double b = cell_inverse_r_integral(0, 0, -2.0, 0.5, 1.0, 3.0);  // (x,y)->(-y,x)
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
  SUBCASE("independent quadrature route at varied sensor positions") {
    const struct { double sx, sy; } sensors[] = {{0.2, -0.1}, {2.5, 0.0}, {-3.0, 4.0}, {0.5, 0.5}};
    for (const auto& s : sensors) {
      const double lib = cell_inverse_r_integral(s.sx, s.sy, -1.0, 2.0, -0.5, 1.5);
      const double orc = oracles::rectangle_inverse_r_integral(s.sx, s.sy, -1.0, 2.0, -0.5, 1.5);
      CHECK(lib == doctest::Approx(orc).epsilon(1e-6));
    }
  }
  SUBCASE("degenerate rectangle rejected") {
    CHECK_THROWS_AS(cell_inverse_r_integral(0, 0, 1.0, 1.0, 0.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("gz conversion: zeros, constant-field shape") {
  const auto d = default_domain();
  const auto p = SensorPlane::make(0, 1600, 0, 1600, 8, 8, -0.1, d);
  SUBCASE("zero in, zero out") {
    const auto phi = gz_to_potential(FieldMap::zeros(p), p);
    for (double v : phi.values) CHECK(v == 0.0);
  }
  SUBCASE("constant positive gz: negative potential, strongest at the center") {
    FieldMap gz = FieldMap::zeros(p);
    for (double& v : gz.values) v = 1.0;
    const auto phi = gz_to_potential(gz, p);
    const double center = phi.at(4, 4);
    const double corner = phi.at(0, 0);
    CHECK(center < 0.0);
    CHECK(std::abs(center) > std::abs(corner));
  }
}

TEST_CASE("radial profiles with zero-moment difference: construction and external fields") {
  const double a = 1.0;
  const auto res = radial_nullspace_demo(a, 101, 40);

  SUBCASE("perturbation moment vanishes (Simpson is exact for the cubic integrand)") {
    double moment = 0.0, abs_moment = 0.0;
    const int n = static_cast<int>(res.radii.size());
    for (int i = 0; i < n - 2; i += 2) {
      const double h = res.radii[i + 1] - res.radii[i];
      auto f = [&](int k) {
        const double rho0 = res.profile_b[k] - res.profile_a[k];
        return rho0 * res.radii[k] * res.radii[k];
      };
      auto g = [&](int k) {
        const double rho0 = res.profile_b[k] - res.profile_a[k];
        return std::abs(rho0) * res.radii[k] * res.radii[k];
      };
      moment += h / 3.0 * (f(i) + 4.0 * f(i + 1) + f(i + 2));
      abs_moment += h / 3.0 * (g(i) + 4.0 * g(i + 1) + g(i + 2));
    }
    CHECK(std::abs(moment) <= 1e-10 * abs_moment);
  }
  SUBCASE("both profiles strictly positive") {
    for (std::size_t i = 0; i < res.radii.size(); ++i) {
      CHECK(res.profile_a[i] > 0.0);
      CHECK(res.profile_b[i] > 0.0);
    }
  }
  SUBCASE("external potentials differ by at most 2% at distance >= 3a") {
    CHECK(res.max_abs_potential > 0.0);
    CHECK(res.max_abs_potential_diff <= 0.02 * res.max_abs_potential);
  }
}
