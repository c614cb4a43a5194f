#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "geoinv/io.hpp"
#include "geoinv/rng.hpp"

using namespace geoinv;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("geoinv_io_" + std::to_string(CounterRng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

FieldMap random_map(const SensorPlane& p, std::uint64_t seed) {
  FieldMap f = FieldMap::zeros(p);
  CounterRng rng(seed);
  for (double& v : f.values) v = rng.uniform(-3, 3);
  return f;
}

}  // namespace

TEST_CASE("field map text round-trip is exact") {
  TempDir tmp;
  const auto d = default_domain();
  const auto p = SensorPlane::make(0, 1600, 0, 1600, 5, 7, -0.1, d);
  const auto f = random_map(p, 1);
  save_field_text(f, tmp.path / "f.txt");
  const auto g = load_field_text(tmp.path / "f.txt", p);
  REQUIRE(g.values.size() == f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(g.values[i] == f.values[i]);
}

TEST_CASE("field map binary round-trip, magic check, shape check") {
  TempDir tmp;
  const auto d = default_domain();
  const auto p = SensorPlane::make(0, 1600, 0, 1600, 4, 4, -0.1, d);
  const auto f = random_map(p, 2);
  save_field_binary(f, tmp.path / "f.bin");
  const auto g = load_field_binary(tmp.path / "f.bin", p);
  for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(g.values[i] == f.values[i]);

  {
    std::ofstream bad(tmp.path / "bad.bin", std::ios::binary);
    bad << "NOTMAGIC" << std::string(64, '\0');
  }
  CHECK_THROWS(load_field_binary(tmp.path / "bad.bin", p));

  const auto p2 = SensorPlane::make(0, 1600, 0, 1600, 5, 4, -0.1, d);
  CHECK_THROWS(load_field_binary(tmp.path / "f.bin", p2));

  // auto-sniff picks binary by magic, text otherwise
  const auto h = load_field_auto(tmp.path / "f.bin", p);
  CHECK(h.values == f.values);
  save_field_text(f, tmp.path / "f.txt");
  const auto t = load_field_auto(tmp.path / "f.txt", p);
  CHECK(t.values == f.values);
}

TEST_CASE("tensor file round-trip and error paths") {
  TempDir tmp;
  Tensor t;
  t.dims = {2, 3, 4};
  CounterRng rng(5);
  t.data.resize(24);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1, 1));
  save_tensor(t, tmp.path / "t.ginv");
  const Tensor u = load_tensor(tmp.path / "t.ginv");
  CHECK(u.dims == t.dims);
  CHECK(u.data == t.data);

  SUBCASE("corrupt magic") {
    std::ofstream bad(tmp.path / "bad.ginv", std::ios::binary);
    bad << "XXXX" << std::string(32, '\0');
    bad.close();
    CHECK_THROWS_WITH_AS(static_cast<void>(load_tensor(tmp.path / "bad.ginv")),
                         doctest::Contains("magic"), std::runtime_error);
  }
  SUBCASE("version bump is an explicit error") {
    // patch the version field (bytes 4..7)
    std::fstream patch(tmp.path / "t.ginv",
                       std::ios::binary | std::ios::in | std::ios::out);
    patch.seekp(4);
    const std::uint32_t bogus = 999;
    patch.write(reinterpret_cast<const char*>(&bogus), sizeof(bogus));
    patch.close();
    CHECK_THROWS_WITH_AS(static_cast<void>(load_tensor(tmp.path / "t.ginv")),
                         doctest::Contains("version"), std::runtime_error);
  }
  SUBCASE("truncated payload") {
    const auto size = fs::file_size(tmp.path / "t.ginv");
    fs::resize_file(tmp.path / "t.ginv", size - 8);
    CHECK_THROWS_WITH_AS(static_cast<void>(load_tensor(tmp.path / "t.ginv")),
                         doctest::Contains("truncated"), std::runtime_error);
  }
}

TEST_CASE("lat/lon triplets: regular grid recovery and bilinear resampling") {
  TempDir tmp;
  // 4x5 grid of v = 2*lat + lon
  {
    std::ofstream out(tmp.path / "grid.txt");
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 5; ++j) {
        const double lat = -16.2 + 0.1 * i;
        const double lon = -51.9 + 0.05 * j;
        out << lat << ' ' << lon << ' ' << 2.0 * lat + lon << '\n';
      }
    }
  }
  const GeoGrid grid = load_latlon_triplets(tmp.path / "grid.txt");
  REQUIRE(grid.lats.size() == 4);
  REQUIRE(grid.lons.size() == 5);

  const auto d = default_domain();
  const auto p = SensorPlane::make(0, 1600, 0, 1600, 6, 6, -0.1, d);
  const FieldMap f = resample_to_plane(grid, p);

  // bilinear interpolation of an affine function is exact; extrema ordering
  // is preserved
  double lo = 1e300, hi = -1e300;
  for (double v : grid.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : f.values) {
    CHECK(v >= lo - 1e-12);
    CHECK(v <= hi + 1e-12);
  }
  // corners map to the bounding box corners of the geographic grid
  CHECK(f.at(0, 0) < f.at(5, 5));

  SUBCASE("ragged triplets rejected") {
    std::ofstream out(tmp.path / "ragged.txt");
    out << "0 0 1\n0 1 2\n1 0 3\n";  // missing (1,1)
    out.close();
    CHECK_THROWS(load_latlon_triplets(tmp.path / "ragged.txt"));
  }
}
