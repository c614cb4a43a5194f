#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geoinv/forward.hpp"
#include "geoinv/grid.hpp"

namespace geoinv {

enum class BodyClass { Toy, Syn, Stoch, StochNs, Real };

std::string to_string(BodyClass c);
BodyClass body_class_from_string(const std::string& s);

struct RecordMeta {
  BodyClass cls = BodyClass::Toy;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  double rho0 = 1.0;
  double m0 = 1.0;
  Vec3 mag_dir{0.0, 0.0, 1.0};
  // Per-record max-abs scales of the stored maps; the network consumes
  // map/scale, so denormalization is exact.
  double phi_scale = 1.0;
  double b_scale = 1.0;
};

struct DatasetRecord {
  OccupancyField body;
  FieldMap phi;
  FieldMap b;
  RecordMeta meta;
};

struct SplitIndices {
  std::vector<int> train, test, valid;
};

struct SynSizeRange {
  int min_cells = 4;
  int max_cells = 12;
};

struct DatasetSpec;  // below

struct Dataset {
  VoxelDomain domain;
  SensorPlane plane;
  PhysicalConstants constants;
  std::vector<DatasetRecord> records;
  SplitIndices split;
  std::uint64_t master_seed = 0;
  // generation parameters (class mix, amplitudes, noise), kept for provenance
  BodyClass class_a = BodyClass::Toy;
  BodyClass class_b = BodyClass::Toy;
  double lambda = 1.0;
  double noise_fraction = 0.0;
  double noise_sigma = 0.0;
};

/// Random-walk blob: around each of 1-2 centers, four 2x2x2 cube clusters
/// take a 40-step walk with step 2, keeping the full trail. Requires at
/// least 8 cells per axis.
OccupancyField gen_toy(const VoxelDomain& domain, std::uint64_t seed);

/// 1-2 axis-aligned prisms, each optionally turned into a two-box step;
/// primitives are kept apart so every component stays a <=2-box union.
OccupancyField gen_syn(const VoxelDomain& domain, std::uint64_t seed,
                       SynSizeRange sizes = {});

/// 2-4 prism/step primitives with overlap allowed.
OccupancyField gen_stoch(const VoxelDomain& domain, std::uint64_t seed,
                         SynSizeRange sizes = {});

/// Adds i.i.d. zero-mean Gaussian noise with std sigma_rel * RMS(map);
/// sigma_rel = 0 returns the input unchanged.
FieldMap add_field_noise(const FieldMap& map, double sigma_rel, std::uint64_t seed);

struct DatasetSpec {
  int count = 11000;
  BodyClass class_a = BodyClass::Toy;
  BodyClass class_b = BodyClass::Toy;
  double lambda = 1.0;  // fraction of class A, exact: floor(lambda*count)
  double rho0 = 1.0;
  double m0 = 1.0;
  Vec3 mag_dir{0.0, 0.0, 1.0};
  double noise_fraction = 0.0;  // duplicated records with noised maps
  double noise_sigma = 0.02;
  SynSizeRange syn_sizes;
};

/// Precomputed forward operators shared across records.
struct ForwardContext {
  ForwardMatrix gravity;
  ForwardMatrix magnetic;

  static ForwardContext assemble(const VoxelDomain& domain, const SensorPlane& plane,
                                 const PhysicalConstants& constants, const Vec3& mag_dir,
                                 MatrixStorage storage = MatrixStorage::Dense64,
                                 int threads = 0);
};

/// Generates bodies and fields; record i is reproducible on its own from
/// hash(master_seed, i). Noise duplicates are appended after the base block
/// in ascending base-record order.
Dataset build_dataset(const DatasetSpec& spec, const ForwardContext& ctx,
                      std::uint64_t master_seed, int threads = 0);

/// Disjoint uniformly random train/test split; the remainder becomes the
/// validation set.
void split_dataset(Dataset& ds, int n_train, int n_test, std::uint64_t seed);

/// Directory layout: manifest.json plus one tensor file per record group
/// (bodies.ginv, phi.ginv, b.ginv). Round-trips bit-exactly.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace geoinv
