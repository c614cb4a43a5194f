#include "geoinv/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace geoinv {

namespace {

constexpr char kFieldMagic[8] = {'G', 'I', 'N', 'V', 'F', 'M', 'A', 'P'};
constexpr char kTensorMagic[4] = {'G', 'I', 'N', 'V'};

void write_exact(std::ofstream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void read_exact(std::ifstream& in, void* data, std::size_t n, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw std::runtime_error(std::string("truncated file while reading ") + what);
  }
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return in;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void save_field_text(const FieldMap& map, const std::filesystem::path& path) {
  map.validate();
  auto out = open_out(path, std::ios::out);
  for (int ix = 0; ix < map.plane.mx; ++ix) {
    for (int iy = 0; iy < map.plane.my; ++iy) {
      if (iy) out << ' ';
      out << format_double(map.at(ix, iy));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

FieldMap load_field_text(const std::filesystem::path& path, const SensorPlane& plane) {
  auto in = open_in(path, std::ios::in);
  FieldMap map = FieldMap::zeros(plane);
  std::string line;
  int ix = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (ix >= plane.mx) throw std::runtime_error("field text has extra rows: " + path.string());
    std::istringstream row(line);
    for (int iy = 0; iy < plane.my; ++iy) {
      if (!(row >> map.at(ix, iy))) {
        throw std::runtime_error("field text row too short: " + path.string());
      }
    }
    ++ix;
  }
  if (ix != plane.mx) throw std::runtime_error("field text has missing rows: " + path.string());
  map.validate();
  return map;
}

void save_field_binary(const FieldMap& map, const std::filesystem::path& path) {
  map.validate();
  auto out = open_out(path, std::ios::binary);
  write_exact(out, kFieldMagic, sizeof(kFieldMagic));
  const std::uint32_t mx = static_cast<std::uint32_t>(map.plane.mx);
  const std::uint32_t my = static_cast<std::uint32_t>(map.plane.my);
  write_exact(out, &mx, sizeof(mx));
  write_exact(out, &my, sizeof(my));
  write_exact(out, map.values.data(), map.values.size() * sizeof(double));
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

FieldMap load_field_binary(const std::filesystem::path& path, const SensorPlane& plane) {
  auto in = open_in(path, std::ios::binary);
  char magic[8];
  read_exact(in, magic, sizeof(magic), "field map magic");
  if (std::memcmp(magic, kFieldMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("bad field map magic: " + path.string());
  }
  std::uint32_t mx = 0, my = 0;
  read_exact(in, &mx, sizeof(mx), "field map header");
  read_exact(in, &my, sizeof(my), "field map header");
  if (static_cast<int>(mx) != plane.mx || static_cast<int>(my) != plane.my) {
    throw std::runtime_error("field map shape does not match plane: " + path.string());
  }
  FieldMap map = FieldMap::zeros(plane);
  read_exact(in, map.values.data(), map.values.size() * sizeof(double), "field map values");
  map.validate();
  return map;
}

FieldMap load_field_auto(const std::filesystem::path& path, const SensorPlane& plane) {
  {
    auto in = open_in(path, std::ios::binary);
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (in.gcount() == sizeof(magic) && std::memcmp(magic, kFieldMagic, sizeof(magic)) == 0) {
      return load_field_binary(path, plane);
    }
  }
  return load_field_text(path, plane);
}

GeoGrid load_latlon_triplets(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  std::vector<double> lats, lons, values;
  double lat, lon, value;
  while (in >> lat >> lon >> value) {
    lats.push_back(lat);
    lons.push_back(lon);
    values.push_back(value);
  }
  if (values.empty()) throw std::runtime_error("no triplets in " + path.string());

  auto unique_sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  GeoGrid grid;
  grid.lats = unique_sorted(lats);
  grid.lons = unique_sorted(lons);
  const std::size_t n_lat = grid.lats.size(), n_lon = grid.lons.size();
  if (n_lat < 2 || n_lon < 2 || n_lat * n_lon != values.size()) {
    throw std::runtime_error("triplets do not form a regular grid: " + path.string());
  }
  grid.values.assign(n_lat * n_lon, std::nan(""));
  auto index_of = [](const std::vector<double>& axis, double v) {
    return static_cast<std::size_t>(
        std::lower_bound(axis.begin(), axis.end(), v) - axis.begin());
  };
  for (std::size_t k = 0; k < values.size(); ++k) {
    const std::size_t i = index_of(grid.lats, lats[k]);
    const std::size_t j = index_of(grid.lons, lons[k]);
    grid.values[i * n_lon + j] = values[k];
  }
  for (double v : grid.values) {
    if (std::isnan(v)) {
      throw std::runtime_error("triplets do not cover the grid: " + path.string());
    }
  }
  return grid;
}

FieldMap resample_to_plane(const GeoGrid& grid, const SensorPlane& plane) {
  const std::size_t n_lon = grid.lons.size();
  const double lat0 = grid.lats.front(), lat1 = grid.lats.back();
  const double lon0 = grid.lons.front(), lon1 = grid.lons.back();
  FieldMap out = FieldMap::zeros(plane);

  auto bracket = [](const std::vector<double>& axis, double v, std::size_t& i0, double& t) {
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    std::size_t hi = static_cast<std::size_t>(it - axis.begin());
    hi = std::clamp<std::size_t>(hi, 1, axis.size() - 1);
    i0 = hi - 1;
    t = (v - axis[i0]) / (axis[hi] - axis[i0]);
    t = std::clamp(t, 0.0, 1.0);
  };

  const auto sensors = sensor_positions(plane);
  for (long s = 0; s < plane.sensor_count(); ++s) {
    // Map the plane footprint linearly onto the geographic bounding box.
    const double fx = (sensors[s][0] - plane.x_min) / (plane.x_max - plane.x_min);
    const double fy = (sensors[s][1] - plane.y_min) / (plane.y_max - plane.y_min);
    const double lon = lon0 + fx * (lon1 - lon0);
    const double lat = lat0 + fy * (lat1 - lat0);
    std::size_t i0, j0;
    double ti, tj;
    bracket(grid.lats, lat, i0, ti);
    bracket(grid.lons, lon, j0, tj);
    const double v00 = grid.values[i0 * n_lon + j0];
    const double v01 = grid.values[i0 * n_lon + j0 + 1];
    const double v10 = grid.values[(i0 + 1) * n_lon + j0];
    const double v11 = grid.values[(i0 + 1) * n_lon + j0 + 1];
    out.values[s] = (1 - ti) * ((1 - tj) * v00 + tj * v01) + ti * ((1 - tj) * v10 + tj * v11);
  }
  return out;
}

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

void save_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  if (tensor.data.size() != tensor.element_count()) {
    throw std::invalid_argument("save_tensor: payload does not match dims");
  }
  auto out = open_out(path, std::ios::binary);
  write_exact(out, kTensorMagic, sizeof(kTensorMagic));
  const std::uint32_t version = kTensorVersion;
  const std::uint32_t rank = static_cast<std::uint32_t>(tensor.dims.size());
  write_exact(out, &version, sizeof(version));
  write_exact(out, &rank, sizeof(rank));
  write_exact(out, tensor.dims.data(), tensor.dims.size() * sizeof(std::uint32_t));
  write_exact(out, tensor.data.data(), tensor.data.size() * sizeof(float));
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[4];
  read_exact(in, magic, sizeof(magic), "tensor magic");
  if (std::memcmp(magic, kTensorMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("bad tensor magic: " + path.string());
  }
  std::uint32_t version = 0, rank = 0;
  read_exact(in, &version, sizeof(version), "tensor version");
  if (version != kTensorVersion) {
    throw std::runtime_error("unsupported tensor version " + std::to_string(version) +
                             " in " + path.string());
  }
  read_exact(in, &rank, sizeof(rank), "tensor rank");
  if (rank == 0 || rank > 8) throw std::runtime_error("implausible tensor rank: " + path.string());
  Tensor t;
  t.dims.resize(rank);
  read_exact(in, t.dims.data(), rank * sizeof(std::uint32_t), "tensor dims");
  t.data.resize(t.element_count());
  read_exact(in, t.data.data(), t.data.size() * sizeof(float), "tensor payload");
  return t;
}

Tensor tensor_from_occupancy(const OccupancyField& field) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(field.nz), static_cast<std::uint32_t>(field.nx),
            static_cast<std::uint32_t>(field.ny)};
  t.data.assign(field.values.begin(), field.values.end());
  return t;
}

OccupancyField occupancy_from_tensor(const Tensor& tensor, bool binary) {
  if (tensor.dims.size() != 3) {
    throw std::runtime_error("occupancy tensor must have rank 3");
  }
  OccupancyField f = OccupancyField::zeros(static_cast<int>(tensor.dims[0]),
                                           static_cast<int>(tensor.dims[1]),
                                           static_cast<int>(tensor.dims[2]), binary);
  std::copy(tensor.data.begin(), tensor.data.end(), f.values.begin());
  return f;
}

}  // namespace geoinv
