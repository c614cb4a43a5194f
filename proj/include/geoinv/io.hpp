#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geoinv/forward.hpp"
#include "geoinv/grid.hpp"

namespace geoinv {

/// Field map, plain text: mx lines, my space-separated values each,
/// round-trip-exact via shortest-representation formatting.
void save_field_text(const FieldMap& map, const std::filesystem::path& path);
FieldMap load_field_text(const std::filesystem::path& path, const SensorPlane& plane);

/// Field map, raw binary: 8-byte magic "GINVFMAP", u32 mx, u32 my, then
/// mx*my little-endian float64 values.
void save_field_binary(const FieldMap& map, const std::filesystem::path& path);
FieldMap load_field_binary(const std::filesystem::path& path, const SensorPlane& plane);

/// Sniffs the binary magic, otherwise reads text.
FieldMap load_field_auto(const std::filesystem::path& path, const SensorPlane& plane);

/// Regular geographic grid recovered from lat/lon/value triplets.
struct GeoGrid {
  std::vector<double> lats;    // ascending
  std::vector<double> lons;    // ascending
  std::vector<double> values;  // lat-major, lon fastest
};

GeoGrid load_latlon_triplets(const std::filesystem::path& path);

/// Bilinear resampling onto the sensor plane; x maps linearly onto the
/// longitude span and y onto the latitude span.
FieldMap resample_to_plane(const GeoGrid& grid, const SensorPlane& plane);

/// Raw tensor container: magic "GINV", u32 version, u32 rank, u32 dims[rank],
/// then little-endian float32 payload.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

inline constexpr std::uint32_t kTensorVersion = 1;

void save_tensor(const Tensor& tensor, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

Tensor tensor_from_occupancy(const OccupancyField& field);
OccupancyField occupancy_from_tensor(const Tensor& tensor, bool binary);

}  // namespace geoinv
