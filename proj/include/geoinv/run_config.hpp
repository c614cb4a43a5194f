#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "geoinv/dataset.hpp"
#include "geoinv/model.hpp"
#include "geoinv/refine.hpp"
#include "geoinv/train.hpp"

namespace geoinv {

/// Full run configuration; every command validates it before any work and
/// rejects unknown keys.
struct RunConfig {
  VoxelDomain domain = default_domain();
  SensorPlane plane = default_plane(default_domain());
  PhysicalConstants constants = PhysicalConstants::dimensionless();
  MatrixStorage storage = MatrixStorage::Dense64;

  DatasetSpec dataset;
  int n_train = 10000;
  int n_test = 1000;

  NetworkArchitecture arch;  // spatial/out dims derived from geometry
  TrainConfig train;
  bool warm_start = true;

  RefineConfig refine;

  std::uint64_t seed = 1;
  bool strict = false;
  int threads = 0;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig preset(const std::string& name);  // paper-toy | paper-brazil-pipeline | desk
  static RunConfig load(const std::filesystem::path& path);

  /// Consistency checks across sections (arch vs geometry, splits vs count).
  void validate() const;
  std::uint64_t config_hash() const;
};

/// Deep merge: values in `overlay` replace those in `base`; objects merge
/// recursively.
nlohmann::json merge_json(nlohmann::json base, const nlohmann::json& overlay);

}  // namespace geoinv
