#include "geoinv/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace geoinv {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

MatrixStorage storage_from_string(const std::string& s) {
  if (s == "dense64") return MatrixStorage::Dense64;
  if (s == "dense32") return MatrixStorage::Dense32;
  if (s == "matrix_free") return MatrixStorage::MatrixFree;
  throw std::invalid_argument("config: unknown forward storage '" + s + "'");
}

std::string storage_to_string(MatrixStorage s) {
  switch (s) {
    case MatrixStorage::Dense64: return "dense64";
    case MatrixStorage::Dense32: return "dense32";
    case MatrixStorage::MatrixFree: return "matrix_free";
  }
  throw std::logic_error("unknown storage");
}

TrainMode mode_from_string(const std::string& s) {
  if (s == "separate_g") return TrainMode::SeparateG;
  if (s == "separate_m") return TrainMode::SeparateM;
  if (s == "joint") return TrainMode::Joint;
  throw std::invalid_argument("config: unknown train mode '" + s + "'");
}

std::string mode_to_string(TrainMode m) {
  switch (m) {
    case TrainMode::SeparateG: return "separate_g";
    case TrainMode::SeparateM: return "separate_m";
    case TrainMode::Joint: return "joint";
  }
  throw std::logic_error("unknown mode");
}

}  // namespace

json RunConfig::to_json() const {
  json j;
  j["geometry"]["domain"] = {{"x_min", domain.x_min}, {"x_max", domain.x_max},
                             {"y_min", domain.y_min}, {"y_max", domain.y_max},
                             {"z_min", domain.z_min}, {"z_max", domain.z_max},
                             {"nx", domain.nx},       {"ny", domain.ny},
                             {"nz", domain.nz}};
  j["geometry"]["plane"] = {{"x_min", plane.x_min}, {"x_max", plane.x_max},
                            {"y_min", plane.y_min}, {"y_max", plane.y_max},
                            {"mx", plane.mx},       {"my", plane.my},
                            {"z_s", plane.z_s}};
  j["constants"] = {{"unit_mode", constants.unit_mode == UnitMode::SI ? "si" : "dimensionless"},
                    {"G", constants.G},
                    {"mu0", constants.mu0}};
  j["forward"] = {{"storage", storage_to_string(storage)}};
  j["dataset"] = {{"count", dataset.count},
                  {"class_a", to_string(dataset.class_a)},
                  {"class_b", to_string(dataset.class_b)},
                  {"lambda", dataset.lambda},
                  {"rho0", dataset.rho0},
                  {"m0", dataset.m0},
                  {"mag_dir", dataset.mag_dir},
                  {"noise_fraction", dataset.noise_fraction},
                  {"noise_sigma", dataset.noise_sigma},
                  {"syn_size_min", dataset.syn_sizes.min_cells},
                  {"syn_size_max", dataset.syn_sizes.max_cells},
                  {"n_train", n_train},
                  {"n_test", n_test}};
  j["model"] = {{"depth", arch.depth},
                {"channels", arch.channels},
                {"kernel", arch.kernel},
                {"skip_connections", arch.skip_connections}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"max_epochs", train.max_epochs},
                {"epsilon", train.epsilon},
                {"alpha", train.alpha},
                {"weight_decay", train.weight_decay},
                {"beta1", train.beta1},
                {"beta2", train.beta2},
                {"mode", mode_to_string(train.mode)},
                {"mean_batch_loss", train.mean_batch_loss},
                {"warm_start", warm_start}};
  j["refine"] = {{"rho0", refine.rho0},
                 {"m0", refine.m0},
                 {"nu_min", refine.nu_grid.front()},
                 {"nu_max", refine.nu_grid.back()},
                 {"nu_points", static_cast<int>(refine.nu_grid.size())},
                 {"mu_min", refine.mu_grid.front()},
                 {"mu_max", refine.mu_grid.back()},
                 {"mu_points", static_cast<int>(refine.mu_grid.size())},
                 {"residual", refine.kind == ResidualKind::D1 ? "d1" : "d2"},
                 {"beta1", refine.beta1},
                 {"beta2", refine.beta2},
                 {"alpha", refine.alpha},
                 {"threshold", refine.threshold},
                 {"body_source", refine.body_source == BodySource::Fixed ? "fixed" : "per_record"}};
  j["seed"] = seed;
  j["strict"] = strict;
  j["threads"] = threads;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown(j, {"geometry", "constants", "forward", "dataset", "model", "train",
                     "refine", "seed", "strict", "threads"},
                 "top level");
  RunConfig cfg = preset("paper-toy");

  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    reject_unknown(g, {"domain", "plane"}, "geometry");
    double dx0 = cfg.domain.x_min, dx1 = cfg.domain.x_max, dy0 = cfg.domain.y_min,
           dy1 = cfg.domain.y_max, dz0 = cfg.domain.z_min, dz1 = cfg.domain.z_max;
    int nx = cfg.domain.nx, ny = cfg.domain.ny, nz = cfg.domain.nz;
    if (g.contains("domain")) {
      const auto& d = g.at("domain");
      reject_unknown(d, {"x_min", "x_max", "y_min", "y_max", "z_min", "z_max", "nx", "ny", "nz"},
                     "geometry.domain");
      read(d, "x_min", dx0); read(d, "x_max", dx1);
      read(d, "y_min", dy0); read(d, "y_max", dy1);
      read(d, "z_min", dz0); read(d, "z_max", dz1);
      read(d, "nx", nx); read(d, "ny", ny); read(d, "nz", nz);
    }
    cfg.domain = VoxelDomain::make(dx0, dx1, dy0, dy1, dz0, dz1, nx, ny, nz);
    double px0 = cfg.domain.x_min, px1 = cfg.domain.x_max, py0 = cfg.domain.y_min,
           py1 = cfg.domain.y_max, z_s = cfg.domain.z_min - 0.1;
    int mx = cfg.plane.mx, my = cfg.plane.my;
    if (g.contains("plane")) {
      const auto& p = g.at("plane");
      reject_unknown(p, {"x_min", "x_max", "y_min", "y_max", "mx", "my", "z_s"},
                     "geometry.plane");
      read(p, "x_min", px0); read(p, "x_max", px1);
      read(p, "y_min", py0); read(p, "y_max", py1);
      read(p, "mx", mx); read(p, "my", my);
      read(p, "z_s", z_s);
    }
    cfg.plane = SensorPlane::make(px0, px1, py0, py1, mx, my, z_s, cfg.domain);
  }

  if (j.contains("constants")) {
    const auto& c = j.at("constants");
    reject_unknown(c, {"unit_mode", "G", "mu0"}, "constants");
    std::string mode = "dimensionless";
    read(c, "unit_mode", mode);
    if (mode == "si") cfg.constants = PhysicalConstants::si();
    else if (mode == "dimensionless") cfg.constants = PhysicalConstants::dimensionless();
    else throw std::invalid_argument("config: unknown unit_mode '" + mode + "'");
    read(c, "G", cfg.constants.G);
    read(c, "mu0", cfg.constants.mu0);
    if (!(cfg.constants.G > 0.0) || !(cfg.constants.mu0 > 0.0)) {
      throw std::invalid_argument("config: constants must be positive");
    }
  }

  if (j.contains("forward")) {
    const auto& f = j.at("forward");
    reject_unknown(f, {"storage"}, "forward");
    std::string s = storage_to_string(cfg.storage);
    read(f, "storage", s);
    cfg.storage = storage_from_string(s);
  }

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    reject_unknown(d, {"count", "class_a", "class_b", "lambda", "rho0", "m0", "mag_dir",
                       "noise_fraction", "noise_sigma", "syn_size_min", "syn_size_max",
                       "n_train", "n_test"},
                   "dataset");
    read(d, "count", cfg.dataset.count);
    std::string ca = to_string(cfg.dataset.class_a), cb = to_string(cfg.dataset.class_b);
    read(d, "class_a", ca); read(d, "class_b", cb);
    cfg.dataset.class_a = body_class_from_string(ca);
    cfg.dataset.class_b = body_class_from_string(cb);
    read(d, "lambda", cfg.dataset.lambda);
    read(d, "rho0", cfg.dataset.rho0);
    read(d, "m0", cfg.dataset.m0);
    if (d.contains("mag_dir")) {
      const auto v = d.at("mag_dir").get<std::vector<double>>();
      if (v.size() != 3) throw std::invalid_argument("config: mag_dir needs 3 entries");
      cfg.dataset.mag_dir = {v[0], v[1], v[2]};
    }
    read(d, "noise_fraction", cfg.dataset.noise_fraction);
    read(d, "noise_sigma", cfg.dataset.noise_sigma);
    read(d, "syn_size_min", cfg.dataset.syn_sizes.min_cells);
    read(d, "syn_size_max", cfg.dataset.syn_sizes.max_cells);
    read(d, "n_train", cfg.n_train);
    read(d, "n_test", cfg.n_test);
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    reject_unknown(m, {"depth", "channels", "kernel", "skip_connections"}, "model");
    read(m, "depth", cfg.arch.depth);
    read(m, "channels", cfg.arch.channels);
    read(m, "kernel", cfg.arch.kernel);
    read(m, "skip_connections", cfg.arch.skip_connections);
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown(t, {"learning_rate", "batch_size", "max_epochs", "epsilon", "alpha",
                       "weight_decay", "beta1", "beta2", "mode", "mean_batch_loss",
                       "warm_start"},
                   "train");
    read(t, "learning_rate", cfg.train.learning_rate);
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "max_epochs", cfg.train.max_epochs);
    read(t, "epsilon", cfg.train.epsilon);
    read(t, "alpha", cfg.train.alpha);
    read(t, "weight_decay", cfg.train.weight_decay);
    read(t, "beta1", cfg.train.beta1);
    read(t, "beta2", cfg.train.beta2);
    std::string mode = mode_to_string(cfg.train.mode);
    read(t, "mode", mode);
    cfg.train.mode = mode_from_string(mode);
    read(t, "mean_batch_loss", cfg.train.mean_batch_loss);
    read(t, "warm_start", cfg.warm_start);
  }

  if (j.contains("refine")) {
    const auto& r = j.at("refine");
    reject_unknown(r, {"rho0", "m0", "nu_min", "nu_max", "nu_points", "mu_min", "mu_max",
                       "mu_points", "residual", "beta1", "beta2", "alpha", "threshold",
                       "body_source"},
                   "refine");
    read(r, "rho0", cfg.refine.rho0);
    read(r, "m0", cfg.refine.m0);
    double nu0 = cfg.refine.nu_grid.front(), nu1 = cfg.refine.nu_grid.back();
    int nun = static_cast<int>(cfg.refine.nu_grid.size());
    double mu0 = cfg.refine.mu_grid.front(), mu1 = cfg.refine.mu_grid.back();
    int mun = static_cast<int>(cfg.refine.mu_grid.size());
    read(r, "nu_min", nu0); read(r, "nu_max", nu1); read(r, "nu_points", nun);
    read(r, "mu_min", mu0); read(r, "mu_max", mu1); read(r, "mu_points", mun);
    cfg.refine.nu_grid = RefineConfig::linspace(nu0, nu1, nun);
    cfg.refine.mu_grid = RefineConfig::linspace(mu0, mu1, mun);
    std::string res = cfg.refine.kind == ResidualKind::D1 ? "d1" : "d2";
    read(r, "residual", res);
    if (res == "d1") cfg.refine.kind = ResidualKind::D1;
    else if (res == "d2") cfg.refine.kind = ResidualKind::D2;
    else throw std::invalid_argument("config: unknown residual '" + res + "'");
    read(r, "beta1", cfg.refine.beta1);
    read(r, "beta2", cfg.refine.beta2);
    read(r, "alpha", cfg.refine.alpha);
    read(r, "threshold", cfg.refine.threshold);
    std::string src = cfg.refine.body_source == BodySource::Fixed ? "fixed" : "per_record";
    read(r, "body_source", src);
    if (src == "fixed") cfg.refine.body_source = BodySource::Fixed;
    else if (src == "per_record") cfg.refine.body_source = BodySource::PerRecord;
    else throw std::invalid_argument("config: unknown body_source '" + src + "'");
  }

  read(j, "seed", cfg.seed);
  read(j, "strict", cfg.strict);
  read(j, "threads", cfg.threads);
  cfg.arch.in_h = cfg.plane.mx;
  cfg.arch.in_w = cfg.plane.my;
  cfg.arch.out_channels = cfg.domain.nz;
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::preset(const std::string& name) {
  RunConfig cfg;
  cfg.domain = default_domain();
  cfg.plane = default_plane(cfg.domain);
  cfg.refine.nu_grid = RefineConfig::linspace(-0.5, 2.0, 21);
  cfg.refine.mu_grid = RefineConfig::linspace(-0.5, 2.0, 21);
  if (name == "paper-toy") {
    cfg.dataset.count = 11000;
    cfg.dataset.class_a = BodyClass::Toy;
    cfg.dataset.class_b = BodyClass::Toy;
    cfg.n_train = 10000;
    cfg.n_test = 1000;
    cfg.train.mode = TrainMode::Joint;
  } else if (name == "paper-brazil-pipeline") {
    cfg.dataset.count = 60000;
    cfg.dataset.class_a = BodyClass::Stoch;
    cfg.dataset.class_b = BodyClass::Stoch;
    cfg.dataset.noise_fraction = 0.1;
    cfg.dataset.noise_sigma = 0.02;
    cfg.n_train = 60000 + 6000 - 1000;
    cfg.n_test = 1000;
    cfg.train.mode = TrainMode::SeparateG;
    cfg.refine.kind = ResidualKind::D2;
    cfg.refine.beta1 = 1.0;
    cfg.refine.beta2 = 1.0;
    cfg.refine.alpha = 0.2;
    cfg.refine.nu_grid = RefineConfig::linspace(-0.5, 1.0, 16);
    cfg.refine.mu_grid = RefineConfig::linspace(-0.5, 1.0, 16);
    cfg.refine.body_source = BodySource::PerRecord;
  } else if (name == "desk") {
    cfg.domain = VoxelDomain::make(0, 400, 0, 400, 0, 400, 8, 8, 8);
    cfg.plane = SensorPlane::make(0, 400, 0, 400, 8, 8, -0.1, cfg.domain);
    cfg.arch.depth = 2;
    cfg.arch.channels = {8, 16};
    cfg.dataset.count = 200;
    cfg.n_train = 160;
    cfg.n_test = 40;
    cfg.train.batch_size = 16;
    cfg.train.max_epochs = 30;
    cfg.train.learning_rate = 1e-3;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  cfg.arch.in_h = cfg.plane.mx;
  cfg.arch.in_w = cfg.plane.my;
  cfg.arch.out_channels = cfg.domain.nz;
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config parse error in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void RunConfig::validate() const {
  // geometry types validated on construction
  arch.validate();
  train.validate();
  refine.validate();
  if (arch.in_h != plane.mx || arch.in_w != plane.my) {
    throw std::invalid_argument("config: model input dims must match the sensor grid");
  }
  if (arch.out_channels != domain.nz || plane.mx != domain.nx || plane.my != domain.ny) {
    throw std::invalid_argument("config: model output dims must match the voxel domain");
  }
  if (dataset.count < 1) throw std::invalid_argument("config: dataset count must be >= 1");
  const int total = dataset.count +
                    static_cast<int>(std::floor(dataset.noise_fraction * dataset.count + 1e-9));
  if (n_train + n_test > total) {
    throw std::invalid_argument("config: train/test split exceeds record count");
  }
  if (dataset.syn_sizes.min_cells < 1 ||
      dataset.syn_sizes.max_cells < dataset.syn_sizes.min_cells) {
    throw std::invalid_argument("config: bad syn size range");
  }
}

std::uint64_t RunConfig::config_hash() const {
  const std::string s = to_json().dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

json merge_json(json base, const json& overlay) {
  if (!overlay.is_object() || !base.is_object()) return overlay;
  for (const auto& [key, value] : overlay.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object()) {
      base[key] = merge_json(base[key], value);
    } else {
      base[key] = value;
    }
  }
  return base;
}

}  // namespace geoinv
