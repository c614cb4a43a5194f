#include "geoinv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "geoinv/io.hpp"
#include "geoinv/parallel.hpp"
#include "geoinv/rng.hpp"

namespace geoinv {

namespace {

constexpr std::uint64_t kSaltBody = 0x626f6479ULL;
constexpr std::uint64_t kSaltNoisePhi = 0x6e732d70ULL;
constexpr std::uint64_t kSaltNoiseB = 0x6e732d62ULL;
constexpr std::uint64_t kSaltNoisePick = 0x7069636bULL;
constexpr std::uint64_t kSaltSplit = 0x73706c69ULL;
constexpr int kToyCubes = 4;
constexpr int kToySteps = 40;
constexpr int kManifestVersion = 1;

struct Box {
  int z0, z1, x0, x1, y0, y1;  // inclusive

  bool intersects(const Box& o) const {
    return z0 <= o.z1 && o.z0 <= z1 && x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1;
  }
  Box expanded(int m) const { return {z0 - m, z1 + m, x0 - m, x1 + m, y0 - m, y1 + m}; }
};

void paint_box(OccupancyField& f, const Box& b) {
  for (int z = b.z0; z <= b.z1; ++z) {
    for (int x = b.x0; x <= b.x1; ++x) {
      for (int y = b.y0; y <= b.y1; ++y) f.at(z, x, y) = 1.0;
    }
  }
}

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(v, hi)); }

/// A prism or a two-box step, sized in cells and placed uniformly.
std::vector<Box> random_primitive(CounterRng& rng, const VoxelDomain& d, SynSizeRange sizes) {
  const int sz = std::min<int>(rng.uniform_int(sizes.min_cells, sizes.max_cells), d.nz);
  const int sx = std::min<int>(rng.uniform_int(sizes.min_cells, sizes.max_cells), d.nx);
  const int sy = std::min<int>(rng.uniform_int(sizes.min_cells, sizes.max_cells), d.ny);
  const int z0 = static_cast<int>(rng.uniform_int(0, d.nz - sz));
  const int x0 = static_cast<int>(rng.uniform_int(0, d.nx - sx));
  const int y0 = static_cast<int>(rng.uniform_int(0, d.ny - sy));
  const Box whole{z0, z0 + sz - 1, x0, x0 + sx - 1, y0, y0 + sy - 1};

  const bool step = rng.next_double() < 0.5;
  const int axis = static_cast<int>(rng.uniform_int(0, 2));  // 0=z 1=x 2=y
  const int extent = axis == 0 ? sz : (axis == 1 ? sx : sy);
  if (!step || extent < 2) return {whole};

  // Split the prism along the stacking axis and slide the upper half
  // laterally; the shared face keeps the two boxes one component.
  const int lower = extent / 2;
  Box a = whole, b = whole;
  auto set_axis = [axis](Box& box, int lo, int hi) {
    if (axis == 0) { box.z0 = lo; box.z1 = hi; }
    else if (axis == 1) { box.x0 = lo; box.x1 = hi; }
    else { box.y0 = lo; box.y1 = hi; }
  };
  const int base_lo = axis == 0 ? z0 : (axis == 1 ? x0 : y0);
  set_axis(a, base_lo, base_lo + lower - 1);
  set_axis(b, base_lo + lower, base_lo + extent - 1);

  for (int lat = 0; lat < 3; ++lat) {
    if (lat == axis) continue;
    const int span = (lat == 0 ? sz : (lat == 1 ? sx : sy));
    const int max_off = span / 2;  // overlap of at least ceil(span/2) cells
    const int off = static_cast<int>(rng.uniform_int(-max_off, max_off));
    const int n = (lat == 0 ? d.nz : (lat == 1 ? d.nx : d.ny));
    auto shift = [&](int lo, int hi) {
      int new_lo = clampi(lo + off, 0, n - (hi - lo + 1));
      return std::pair<int, int>{new_lo, new_lo + (hi - lo)};
    };
    if (lat == 0) { auto [lo, hi] = shift(b.z0, b.z1); b.z0 = lo; b.z1 = hi; }
    else if (lat == 1) { auto [lo, hi] = shift(b.x0, b.x1); b.x0 = lo; b.x1 = hi; }
    else { auto [lo, hi] = shift(b.y0, b.y1); b.y0 = lo; b.y1 = hi; }
  }
  return {a, b};
}

void require_generator_domain(const VoxelDomain& d, const char* what) {
  if (d.nz < 8 || d.nx < 8 || d.ny < 8) {
    throw std::invalid_argument(std::string(what) + ": domain needs at least 8 cells per axis");
  }
}

}  // namespace

std::string to_string(BodyClass c) {
  switch (c) {
    case BodyClass::Toy: return "TOY";
    case BodyClass::Syn: return "SYN";
    case BodyClass::Stoch: return "STOCH";
    case BodyClass::StochNs: return "STOCH_NS";
    case BodyClass::Real: return "REAL";
  }
  throw std::logic_error("unknown body class");
}

BodyClass body_class_from_string(const std::string& s) {
  if (s == "TOY") return BodyClass::Toy;
  if (s == "SYN") return BodyClass::Syn;
  if (s == "STOCH") return BodyClass::Stoch;
  if (s == "STOCH_NS") return BodyClass::StochNs;
  if (s == "REAL") return BodyClass::Real;
  throw std::invalid_argument("unknown body class: " + s);
}

OccupancyField gen_toy(const VoxelDomain& domain, std::uint64_t seed) {
  require_generator_domain(domain, "gen_toy");
  CounterRng rng(hash_seed(seed, kSaltBody));
  OccupancyField f = OccupancyField::zeros(domain, /*binary=*/true);

  const int n_centers = static_cast<int>(rng.uniform_int(1, 2));
  for (int c = 0; c < n_centers; ++c) {
    const int cz = static_cast<int>(rng.uniform_int(0, domain.nz - 1));
    const int cx = static_cast<int>(rng.uniform_int(0, domain.nx - 1));
    const int cy = static_cast<int>(rng.uniform_int(0, domain.ny - 1));
    // Four 2x2x2 cubes tiling a 2x4x4 slab around the center, so the seed
    // cluster is face-connected before the walks begin.
    const int z0 = clampi(cz - 1, 0, domain.nz - 2);
    const int x0 = clampi(cx - 2, 0, domain.nx - 4);
    const int y0 = clampi(cy - 2, 0, domain.ny - 4);
    const int cube_x[kToyCubes] = {x0, x0 + 2, x0, x0 + 2};
    const int cube_y[kToyCubes] = {y0, y0, y0 + 2, y0 + 2};
    for (int q = 0; q < kToyCubes; ++q) {
      int pz = z0, px = cube_x[q], py = cube_y[q];
      paint_box(f, {pz, pz + 1, px, px + 1, py, py + 1});
      for (int it = 0; it < kToySteps; ++it) {
        const int dir = static_cast<int>(rng.uniform_int(0, 5));
        const int step = (dir % 2 == 0) ? 2 : -2;
        if (dir / 2 == 0) pz = clampi(pz + step, 0, domain.nz - 2);
        else if (dir / 2 == 1) px = clampi(px + step, 0, domain.nx - 2);
        else py = clampi(py + step, 0, domain.ny - 2);
        paint_box(f, {pz, pz + 1, px, px + 1, py, py + 1});
      }
    }
  }
  return f;
}

OccupancyField gen_syn(const VoxelDomain& domain, std::uint64_t seed, SynSizeRange sizes) {
  require_generator_domain(domain, "gen_syn");
  CounterRng rng(hash_seed(seed, kSaltBody));
  OccupancyField f = OccupancyField::zeros(domain, /*binary=*/true);

  const int wanted = static_cast<int>(rng.uniform_int(1, 2));
  std::vector<Box> placed;
  for (int p = 0; p < wanted; ++p) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const auto boxes = random_primitive(rng, domain, sizes);
      bool clear = true;
      for (const auto& nb : boxes) {
        for (const auto& ob : placed) {
          if (nb.expanded(1).intersects(ob)) {
            clear = false;
            break;
          }
        }
        if (!clear) break;
      }
      if (clear) {
        for (const auto& b : boxes) {
          paint_box(f, b);
          placed.push_back(b);
        }
        break;
      }
      // overlap with an earlier primitive: redraw (a crowded domain may end
      // up with fewer primitives than drawn)
    }
  }
  return f;
}

OccupancyField gen_stoch(const VoxelDomain& domain, std::uint64_t seed, SynSizeRange sizes) {
  require_generator_domain(domain, "gen_stoch");
  CounterRng rng(hash_seed(seed, kSaltBody));
  OccupancyField f = OccupancyField::zeros(domain, /*binary=*/true);
  const int n = static_cast<int>(rng.uniform_int(2, 4));
  for (int p = 0; p < n; ++p) {
    for (const auto& b : random_primitive(rng, domain, sizes)) paint_box(f, b);
  }
  return f;
}

FieldMap add_field_noise(const FieldMap& map, double sigma_rel, std::uint64_t seed) {
  if (sigma_rel < 0.0) throw std::invalid_argument("add_field_noise: sigma_rel must be >= 0");
  if (sigma_rel == 0.0) return map;
  const double sigma = sigma_rel * map.rms();
  FieldMap out = map;
  CounterRng rng(seed);
  for (double& v : out.values) v += sigma * rng.normal();
  return out;
}

ForwardContext ForwardContext::assemble(const VoxelDomain& domain, const SensorPlane& plane,
                                        const PhysicalConstants& constants,
                                        const Vec3& mag_dir, MatrixStorage storage,
                                        int threads) {
  auto dir = MagnetizationDirection::make(mag_dir);
  return ForwardContext{
      ForwardMatrix::assemble(domain, plane, FieldKind::Gravity, constants, {}, storage,
                              threads),
      ForwardMatrix::assemble(domain, plane, FieldKind::MagneticZ, constants, dir, storage,
                              threads)};
}

namespace {

OccupancyField generate_body(BodyClass cls, const VoxelDomain& domain, std::uint64_t seed,
                             SynSizeRange sizes) {
  switch (cls) {
    case BodyClass::Toy: return gen_toy(domain, seed);
    case BodyClass::Syn: return gen_syn(domain, seed, sizes);
    case BodyClass::Stoch:
    case BodyClass::StochNs: return gen_stoch(domain, seed, sizes);
    case BodyClass::Real:
      throw std::invalid_argument("build_dataset: REAL records cannot be generated");
  }
  throw std::logic_error("unknown body class");
}

double safe_scale(double max_abs) { return max_abs > 0.0 ? max_abs : 1.0; }

}  // namespace

Dataset build_dataset(const DatasetSpec& spec, const ForwardContext& ctx,
                      std::uint64_t master_seed, int threads) {
  if (spec.count < 1) throw std::invalid_argument("build_dataset: count must be >= 1");
  if (!(spec.lambda >= 0.0 && spec.lambda <= 1.0)) {
    throw std::invalid_argument("build_dataset: lambda must lie in [0,1]");
  }
  if (!(spec.noise_fraction >= 0.0 && spec.noise_fraction <= 1.0)) {
    throw std::invalid_argument("build_dataset: noise fraction must lie in [0,1]");
  }
  const VoxelDomain& domain = ctx.gravity.domain();
  const SensorPlane& plane = ctx.gravity.plane();

  Dataset ds;
  ds.domain = domain;
  ds.plane = plane;
  ds.constants = ctx.gravity.constants();
  ds.master_seed = master_seed;
  ds.class_a = spec.class_a;
  ds.class_b = spec.class_b;
  ds.lambda = spec.lambda;
  ds.noise_fraction = spec.noise_fraction;
  ds.noise_sigma = spec.noise_sigma;

  const int count = spec.count;
  const int n_class_a = static_cast<int>(std::floor(spec.lambda * count + 1e-9));
  ds.records.resize(count);
  const Vec3 dir = MagnetizationDirection::make(spec.mag_dir).n;
  const int nthreads = effective_threads(threads, false);

  WorkerError err;
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
  for (int i = 0; i < count; ++i) {
    err.run([&, i] {
      const BodyClass cls = i < n_class_a ? spec.class_a : spec.class_b;
      const std::uint64_t rec_seed = hash_seed(master_seed, static_cast<std::uint64_t>(i));
      DatasetRecord rec;
      rec.body = generate_body(cls, domain, rec_seed, spec.syn_sizes);
      rec.phi = forward_gravity(rec.body, spec.rho0, ctx.gravity, 1);
      rec.b = forward_magnetic_z(rec.body, spec.m0, ctx.magnetic, 1);
      rec.meta.cls = cls;
      rec.meta.seed = rec_seed;
      rec.meta.rho0 = spec.rho0;
      rec.meta.m0 = spec.m0;
      rec.meta.mag_dir = dir;
      if (cls == BodyClass::StochNs) {
        rec.phi = add_field_noise(rec.phi, spec.noise_sigma,
                                  hash_seed(master_seed, i, kSaltNoisePhi));
        rec.b = add_field_noise(rec.b, spec.noise_sigma,
                                hash_seed(master_seed, i, kSaltNoiseB));
        rec.meta.noise_sigma = spec.noise_sigma;
      }
      rec.meta.phi_scale = safe_scale(rec.phi.max_abs());
      rec.meta.b_scale = safe_scale(rec.b.max_abs());
      ds.records[i] = std::move(rec);
    });
  }
  err.rethrow_if_any();

  const int n_dup = static_cast<int>(std::floor(spec.noise_fraction * count + 1e-9));
  if (n_dup > 0) {
    // Deterministic sample without replacement, emitted in ascending base
    // index so the output layout is stable.
    std::vector<int> pick(count);
    std::iota(pick.begin(), pick.end(), 0);
    CounterRng rng(hash_seed(master_seed, kSaltNoisePick));
    for (int i = 0; i < n_dup; ++i) {
      const int j = i + static_cast<int>(rng.uniform_int(0, count - 1 - i));
      std::swap(pick[i], pick[j]);
    }
    pick.resize(n_dup);
    std::sort(pick.begin(), pick.end());
    for (int idx : pick) {
      const DatasetRecord& base = ds.records[idx];
      DatasetRecord dup;
      dup.body = base.body;
      dup.phi = add_field_noise(base.phi, spec.noise_sigma,
                                hash_seed(master_seed, idx, kSaltNoisePhi));
      dup.b = add_field_noise(base.b, spec.noise_sigma,
                              hash_seed(master_seed, idx, kSaltNoiseB));
      dup.meta = base.meta;
      dup.meta.cls = base.meta.cls == BodyClass::Stoch ? BodyClass::StochNs : base.meta.cls;
      dup.meta.noise_sigma = spec.noise_sigma;
      dup.meta.phi_scale = safe_scale(dup.phi.max_abs());
      dup.meta.b_scale = safe_scale(dup.b.max_abs());
      ds.records.push_back(std::move(dup));
    }
  }
  return ds;
}

void split_dataset(Dataset& ds, int n_train, int n_test, std::uint64_t seed) {
  const int n = static_cast<int>(ds.records.size());
  if (n_train < 0 || n_test < 0 || n_train + n_test > n) {
    throw std::invalid_argument("split_dataset: split sizes exceed record count");
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(hash_seed(seed, kSaltSplit));
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(perm[i], perm[j]);
  }
  ds.split.train.assign(perm.begin(), perm.begin() + n_train);
  ds.split.test.assign(perm.begin() + n_train, perm.begin() + n_train + n_test);
  ds.split.valid.assign(perm.begin() + n_train + n_test, perm.end());
  std::sort(ds.split.train.begin(), ds.split.train.end());
  std::sort(ds.split.test.begin(), ds.split.test.end());
  std::sort(ds.split.valid.begin(), ds.split.valid.end());
}

namespace {

nlohmann::json domain_to_json(const VoxelDomain& d) {
  return {{"x_min", d.x_min}, {"x_max", d.x_max}, {"y_min", d.y_min}, {"y_max", d.y_max},
          {"z_min", d.z_min}, {"z_max", d.z_max}, {"nx", d.nx},       {"ny", d.ny},
          {"nz", d.nz}};
}

VoxelDomain domain_from_json(const nlohmann::json& j) {
  return VoxelDomain::make(j.at("x_min"), j.at("x_max"), j.at("y_min"), j.at("y_max"),
                           j.at("z_min"), j.at("z_max"), j.at("nx"), j.at("ny"), j.at("nz"));
}

nlohmann::json plane_to_json(const SensorPlane& p) {
  return {{"x_min", p.x_min}, {"x_max", p.x_max}, {"y_min", p.y_min},
          {"y_max", p.y_max}, {"mx", p.mx},       {"my", p.my},
          {"z_s", p.z_s}};
}

SensorPlane plane_from_json(const nlohmann::json& j, const VoxelDomain& d) {
  return SensorPlane::make(j.at("x_min"), j.at("x_max"), j.at("y_min"), j.at("y_max"),
                           j.at("mx"), j.at("my"), j.at("z_s"), d);
}

nlohmann::json constants_to_json(const PhysicalConstants& c) {
  return {{"G", c.G},
          {"mu0", c.mu0},
          {"unit_mode", c.unit_mode == UnitMode::SI ? "si" : "dimensionless"}};
}

PhysicalConstants constants_from_json(const nlohmann::json& j) {
  PhysicalConstants c;
  c.G = j.at("G");
  c.mu0 = j.at("mu0");
  const std::string mode = j.at("unit_mode");
  if (mode == "si") c.unit_mode = UnitMode::SI;
  else if (mode == "dimensionless") c.unit_mode = UnitMode::Dimensionless;
  else throw std::runtime_error("manifest: unknown unit_mode " + mode);
  return c;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const int k = static_cast<int>(ds.records.size());
  if (k == 0) throw std::invalid_argument("save_dataset: empty dataset");

  nlohmann::json manifest;
  manifest["format_version"] = kManifestVersion;
  manifest["geometry"] = {{"domain", domain_to_json(ds.domain)},
                          {"plane", plane_to_json(ds.plane)}};
  manifest["constants"] = constants_to_json(ds.constants);
  manifest["master_seed"] = ds.master_seed;
  manifest["mix"] = {{"class_a", to_string(ds.class_a)},
                     {"class_b", to_string(ds.class_b)},
                     {"lambda", ds.lambda},
                     {"noise_fraction", ds.noise_fraction},
                     {"noise_sigma", ds.noise_sigma}};
  manifest["split"] = {{"train", ds.split.train},
                       {"test", ds.split.test},
                       {"valid", ds.split.valid}};
  nlohmann::json records = nlohmann::json::array();
  for (const auto& rec : ds.records) {
    records.push_back({{"class", to_string(rec.meta.cls)},
                       {"seed", rec.meta.seed},
                       {"noise_sigma", rec.meta.noise_sigma},
                       {"rho0", rec.meta.rho0},
                       {"m0", rec.meta.m0},
                       {"mag_dir", rec.meta.mag_dir},
                       {"phi_scale", rec.meta.phi_scale},
                       {"b_scale", rec.meta.b_scale}});
  }
  manifest["records"] = std::move(records);
  {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
  }

  const auto& d = ds.domain;
  const auto& p = ds.plane;
  Tensor bodies, phi, b;
  bodies.dims = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(d.nz),
                 static_cast<std::uint32_t>(d.nx), static_cast<std::uint32_t>(d.ny)};
  phi.dims = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(p.mx),
              static_cast<std::uint32_t>(p.my)};
  b.dims = phi.dims;
  bodies.data.reserve(bodies.element_count());
  phi.data.reserve(phi.element_count());
  b.data.reserve(b.element_count());
  for (const auto& rec : ds.records) {
    bodies.data.insert(bodies.data.end(), rec.body.values.begin(), rec.body.values.end());
    phi.data.insert(phi.data.end(), rec.phi.values.begin(), rec.phi.values.end());
    b.data.insert(b.data.end(), rec.b.values.begin(), rec.b.values.end());
  }
  save_tensor(bodies, dir / "bodies.ginv");
  save_tensor(phi, dir / "phi.ginv");
  save_tensor(b, dir / "b.ginv");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing manifest in " + dir.string());
  nlohmann::json manifest;
  in >> manifest;
  const int version = manifest.at("format_version");
  if (version != kManifestVersion) {
    throw std::runtime_error("unsupported dataset format version " + std::to_string(version));
  }

  Dataset ds;
  ds.domain = domain_from_json(manifest.at("geometry").at("domain"));
  ds.plane = plane_from_json(manifest.at("geometry").at("plane"), ds.domain);
  ds.constants = constants_from_json(manifest.at("constants"));
  ds.master_seed = manifest.at("master_seed");
  const auto& mix = manifest.at("mix");
  ds.class_a = body_class_from_string(mix.at("class_a"));
  ds.class_b = body_class_from_string(mix.at("class_b"));
  ds.lambda = mix.at("lambda");
  ds.noise_fraction = mix.at("noise_fraction");
  ds.noise_sigma = mix.at("noise_sigma");
  ds.split.train = manifest.at("split").at("train").get<std::vector<int>>();
  ds.split.test = manifest.at("split").at("test").get<std::vector<int>>();
  ds.split.valid = manifest.at("split").at("valid").get<std::vector<int>>();

  const Tensor bodies = load_tensor(dir / "bodies.ginv");
  const Tensor phi = load_tensor(dir / "phi.ginv");
  const Tensor b = load_tensor(dir / "b.ginv");
  const auto& recs = manifest.at("records");
  const std::size_t k = recs.size();
  if (bodies.dims.size() != 4 || phi.dims.size() != 3 || b.dims.size() != 3 ||
      bodies.dims[0] != k || phi.dims[0] != k || b.dims[0] != k) {
    throw std::runtime_error("dataset tensors do not match manifest: " + dir.string());
  }
  const long body_n = ds.domain.cell_count();
  const long field_n = ds.plane.sensor_count();

  ds.records.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    auto& rec = ds.records[i];
    const auto& meta = recs[i];
    rec.meta.cls = body_class_from_string(meta.at("class"));
    rec.meta.seed = meta.at("seed");
    rec.meta.noise_sigma = meta.at("noise_sigma");
    rec.meta.rho0 = meta.at("rho0");
    rec.meta.m0 = meta.at("m0");
    const auto md = meta.at("mag_dir").get<std::vector<double>>();
    if (md.size() != 3) throw std::runtime_error("manifest: mag_dir must have 3 entries");
    rec.meta.mag_dir = {md[0], md[1], md[2]};
    rec.meta.phi_scale = meta.at("phi_scale");
    rec.meta.b_scale = meta.at("b_scale");

    rec.body = OccupancyField::zeros(ds.domain, /*binary=*/true);
    std::copy(bodies.data.begin() + static_cast<long>(i) * body_n,
              bodies.data.begin() + static_cast<long>(i + 1) * body_n,
              rec.body.values.begin());
    rec.phi = FieldMap::zeros(ds.plane);
    std::copy(phi.data.begin() + static_cast<long>(i) * field_n,
              phi.data.begin() + static_cast<long>(i + 1) * field_n,
              rec.phi.values.begin());
    rec.b = FieldMap::zeros(ds.plane);
    std::copy(b.data.begin() + static_cast<long>(i) * field_n,
              b.data.begin() + static_cast<long>(i + 1) * field_n, rec.b.values.begin());
  }
  return ds;
}

}  // namespace geoinv
