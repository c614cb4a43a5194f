#include "geoinv/commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "geoinv/io.hpp"
#include "geoinv/parallel.hpp"
#include "geoinv/rng.hpp"
#include "geoinv/version.hpp"

namespace geoinv {

namespace {

constexpr std::uint64_t kSaltSplitCmd = 0x67656eULL;

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Exclusive ownership of a run directory for the duration of a command.
class RunDirLock {
 public:
  explicit RunDirLock(const std::filesystem::path& dir) : lock_path_(dir / ".lock") {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw CommandError("io", "cannot create run directory " + dir.string());
    if (std::filesystem::exists(lock_path_)) {
      throw CommandError("io", "run directory is locked by another command: " + dir.string());
    }
    std::ofstream lock(lock_path_);
    if (!lock) throw CommandError("io", "cannot create lock file in " + dir.string());
    lock << "locked\n";
  }
  ~RunDirLock() {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
  }
  RunDirLock(const RunDirLock&) = delete;
  RunDirLock& operator=(const RunDirLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

/// Replay record: everything needed to reproduce the outputs bit-exactly
/// (no wall-clock data, so reruns compare equal).
void write_provenance(const RunConfig& cfg, const std::string& command,
                      const std::filesystem::path& dir) {
  nlohmann::json j;
  j["command"] = command;
  j["code_version"] = kVersion;
  j["config_hash"] = cfg.config_hash();
  j["seed"] = cfg.seed;
  j["strict"] = cfg.strict;
  j["config"] = cfg.to_json();
  std::ofstream out(dir / "provenance.json");
  if (!out) throw CommandError("io", "cannot write provenance in " + dir.string());
  out << j.dump(2) << '\n';
}

ModelCheckpoint load_ckpt_checked(const std::filesystem::path& path,
                                  const NetworkArchitecture& expected) {
  ModelCheckpoint ckpt;
  try {
    ckpt = load_checkpoint(path);
  } catch (const std::exception& e) {
    throw CommandError("io", e.what());
  }
  if (ckpt.arch.hash() != expected.hash()) {
    throw CommandError("config", "checkpoint architecture does not match configuration: " +
                                     path.string());
  }
  return ckpt;
}

void write_train_log(const std::filesystem::path& path, const TrainReport& rep,
                     const RunConfig& cfg, const std::vector<EpochStats>& prior) {
  std::ofstream out(path);
  if (!out) throw CommandError("io", "cannot write " + path.string());
  out << "epoch,loss_train,loss_test,loss_grav,loss_mag,structural,lr,seconds\n";
  const int offset = static_cast<int>(prior.size());
  auto row = [&](const EpochStats& e, int epoch) {
    out << epoch << ',' << fmt(e.loss_train) << ',' << fmt(e.loss_test) << ','
        << fmt(e.loss_grav) << ',' << fmt(e.loss_mag) << ',' << fmt(e.structural) << ','
        << fmt(cfg.train.learning_rate) << ',' << fmt(e.seconds) << '\n';
  };
  for (const auto& e : prior) row(e, e.epoch);
  for (const auto& e : rep.epochs) row(e, e.epoch + offset);
}

std::vector<EpochStats> read_train_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CommandError("io", "cannot read " + path.string());
  std::vector<EpochStats> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochStats e;
    char comma;
    std::istringstream ss(line);
    ss >> e.epoch >> comma >> e.loss_train >> comma >> e.loss_test >> comma >> e.loss_grav >>
        comma >> e.loss_mag >> comma >> e.structural;
    double lr = 0.0;
    ss >> comma >> lr >> comma >> e.seconds;
    rows.push_back(e);
  }
  return rows;
}

FieldMap normalized_copy(const FieldMap& map) {
  FieldMap out = map;
  const double s = out.max_abs() > 0.0 ? out.max_abs() : 1.0;
  for (double& v : out.values) v /= s;
  return out;
}

}  // namespace

void cmd_gen(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  RunDirLock lock(out_dir);
  write_provenance(cfg, "gen", out_dir);
  const auto ctx = ForwardContext::assemble(cfg.domain, cfg.plane, cfg.constants,
                                            cfg.dataset.mag_dir, cfg.storage,
                                            effective_threads(cfg.threads, cfg.strict));
  Dataset ds = build_dataset(cfg.dataset, ctx, cfg.seed,
                             effective_threads(cfg.threads, cfg.strict));
  split_dataset(ds, cfg.n_train, cfg.n_test, hash_seed(cfg.seed, kSaltSplitCmd));
  save_dataset(ds, out_dir / "dataset");
}

void cmd_train(const RunConfig& cfg, const TrainInputs& in,
               const std::filesystem::path& out_dir) {
  cfg.validate();
  RunDirLock lock(out_dir);
  write_provenance(cfg, "train", out_dir);

  Dataset ds;
  try {
    ds = load_dataset(in.dataset_dir);
  } catch (const std::exception& e) {
    throw CommandError("io", e.what());
  }

  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed;
  tcfg.strict = cfg.strict;
  tcfg.threads = cfg.threads;

  std::vector<ModelCheckpoint> models;
  std::vector<EpochStats> prior;
  const bool joint = tcfg.mode == TrainMode::Joint;
  if (in.resume_dir) {
    const char* first = tcfg.mode == TrainMode::SeparateM ? "ckpt_m.ginvckpt" : "ckpt_g.ginvckpt";
    models.push_back(load_ckpt_checked(*in.resume_dir / first, cfg.arch));
    if (joint) models.push_back(load_ckpt_checked(*in.resume_dir / "ckpt_m.ginvckpt", cfg.arch));
    prior = read_train_log(*in.resume_dir / "train_log.csv");
  } else if (joint) {
    if (in.cold_start) {
      models.push_back(init_model(cfg.arch, hash_seed(cfg.seed, 'g')));
      models.push_back(init_model(cfg.arch, hash_seed(cfg.seed, 'm')));
    } else {
      if (!in.ckpt_g || !in.ckpt_m) {
        throw CommandError("usage",
                           "joint mode requires --ckpt-g and --ckpt-m (warm start from the "
                           "separately trained pair) or --cold-start");
      }
      models.push_back(load_ckpt_checked(*in.ckpt_g, cfg.arch));
      models.push_back(load_ckpt_checked(*in.ckpt_m, cfg.arch));
    }
  } else {
    const char mark = tcfg.mode == TrainMode::SeparateG ? 'g' : 'm';
    models.push_back(init_model(cfg.arch, hash_seed(cfg.seed, mark)));
  }

  TrainReport rep;
  try {
    rep = train(std::move(models), ds, tcfg);
  } catch (const std::exception& e) {
    throw CommandError("runtime", e.what());
  }

  save_checkpoint(rep.models[0], out_dir / (joint || tcfg.mode == TrainMode::SeparateG
                                                ? "ckpt_g.ginvckpt"
                                                : "ckpt_m.ginvckpt"));
  if (joint) save_checkpoint(rep.models[1], out_dir / "ckpt_m.ginvckpt");
  write_train_log(out_dir / "train_log.csv", rep, cfg, prior);

  nlohmann::json report;
  report["iter_stop"] = rep.iter_stop + static_cast<int>(prior.size());
  report["loss_result"] = rep.loss_result;
  report["initial_loss_train"] = rep.initial_loss_train;
  report["initial_loss_test"] = rep.initial_loss_test;
  report["epochs_run"] = static_cast<int>(rep.epochs.size());
  report["wall_seconds"] = cfg.strict ? 0.0 : rep.wall_seconds;
  std::ofstream out(out_dir / "report.json");
  if (!out) throw CommandError("io", "cannot write report.json");
  out << report.dump(2) << '\n';
}

void cmd_invert(const RunConfig& cfg, const InvertInputs& in,
                const std::filesystem::path& out_dir) {
  cfg.validate();
  if (!in.ckpt_g && !in.ckpt_m) throw CommandError("usage", "invert needs at least one checkpoint");
  if ((in.ckpt_g && !in.phi_file) || (in.ckpt_m && !in.b_file)) {
    throw CommandError("usage", "each checkpoint needs its matching field file");
  }
  RunDirLock lock(out_dir);
  write_provenance(cfg, "invert", out_dir);

  std::optional<OccupancyField> body_g, body_m;
  if (in.ckpt_g) {
    const auto ckpt = load_ckpt_checked(*in.ckpt_g, cfg.arch);
    FieldMap phi;
    try {
      phi = load_field_auto(*in.phi_file, cfg.plane);
    } catch (const std::exception& e) {
      throw CommandError("io", e.what());
    }
    body_g = predict(ckpt, normalized_copy(phi));
    save_tensor(tensor_from_occupancy(*body_g), out_dir / "body_g.ginv");
    save_tensor(tensor_from_occupancy(threshold_body(*body_g, cfg.refine.threshold)),
                out_dir / "body_g_thresholded.ginv");
  }
  if (in.ckpt_m) {
    const auto ckpt = load_ckpt_checked(*in.ckpt_m, cfg.arch);
    FieldMap b;
    try {
      b = load_field_auto(*in.b_file, cfg.plane);
    } catch (const std::exception& e) {
      throw CommandError("io", e.what());
    }
    body_m = predict(ckpt, normalized_copy(b));
    save_tensor(tensor_from_occupancy(*body_m), out_dir / "body_m.ginv");
    save_tensor(tensor_from_occupancy(threshold_body(*body_m, cfg.refine.threshold)),
                out_dir / "body_m_thresholded.ginv");
  }
  if (body_g && body_m) {
    // Joint body: the two continuous predictions averaged, then thresholded.
    OccupancyField joint = *body_g;
    for (std::size_t i = 0; i < joint.values.size(); ++i) {
      joint.values[i] = 0.5 * (joint.values[i] + body_m->values[i]);
    }
    save_tensor(tensor_from_occupancy(joint), out_dir / "body_joint.ginv");
    save_tensor(tensor_from_occupancy(threshold_body(joint, cfg.refine.threshold)),
                out_dir / "body_joint_thresholded.ginv");
  }
}

void cmd_convert_gz(const RunConfig& cfg, const std::filesystem::path& grid_file,
                    GzInputFormat format, const std::filesystem::path& out_file) {
  cfg.validate();
  FieldMap gz = FieldMap::zeros(cfg.plane);
  try {
    switch (format) {
      case GzInputFormat::Text: gz = load_field_text(grid_file, cfg.plane); break;
      case GzInputFormat::Binary: gz = load_field_binary(grid_file, cfg.plane); break;
      case GzInputFormat::LatLon:
        gz = resample_to_plane(load_latlon_triplets(grid_file), cfg.plane);
        break;
      case GzInputFormat::Auto: {
        // Triplet rows have exactly 3 columns; field text rows have my.
        std::ifstream probe(grid_file, std::ios::binary);
        if (!probe) throw CommandError("io", "cannot open " + grid_file.string());
        char magic[8] = {};
        probe.read(magic, sizeof(magic));
        if (probe.gcount() == 8 && std::string(magic, 8) == "GINVFMAP") {
          gz = load_field_binary(grid_file, cfg.plane);
          break;
        }
        probe.close();
        std::ifstream text(grid_file);
        std::string first_line;
        std::getline(text, first_line);
        std::istringstream ss(first_line);
        int tokens = 0;
        double v;
        while (ss >> v) ++tokens;
        if (tokens == 3 && cfg.plane.my != 3) {
          gz = resample_to_plane(load_latlon_triplets(grid_file), cfg.plane);
        } else {
          gz = load_field_text(grid_file, cfg.plane);
        }
        break;
      }
    }
  } catch (const CommandError&) {
    throw;
  } catch (const std::exception& e) {
    throw CommandError("io", e.what());
  }
  const FieldMap phi = gz_to_potential(gz, cfg.plane, effective_threads(cfg.threads, cfg.strict));
  if (out_file.extension() == ".bin") {
    save_field_binary(phi, out_file);
  } else {
    save_field_text(phi, out_file);
  }
  // replay record alongside the single output file
  nlohmann::json prov;
  prov["command"] = "convert-gz";
  prov["code_version"] = kVersion;
  prov["config_hash"] = cfg.config_hash();
  prov["seed"] = cfg.seed;
  prov["strict"] = cfg.strict;
  prov["config"] = cfg.to_json();
  std::ofstream pout(out_file.string() + ".provenance.json");
  if (!pout) throw CommandError("io", "cannot write provenance for " + out_file.string());
  pout << prov.dump(2) << '\n';
}

void cmd_refine(const RunConfig& cfg, const RefineInputs& in,
                const std::filesystem::path& out_dir) {
  cfg.validate();
  if (in.phi_files.empty() || in.phi_files.size() != in.b_files.size()) {
    throw CommandError("usage", "refine needs matching --phi/--b file lists");
  }
  RunDirLock lock(out_dir);
  write_provenance(cfg, "refine", out_dir);

  const auto net_g = load_ckpt_checked(in.ckpt_g, cfg.arch);
  const auto net_m = load_ckpt_checked(in.ckpt_m, cfg.arch);
  const int threads = effective_threads(cfg.threads, cfg.strict);
  const auto ctx = ForwardContext::assemble(cfg.domain, cfg.plane, cfg.constants,
                                            cfg.dataset.mag_dir, cfg.storage, threads);

  std::vector<RefineTrial> trials;
  for (std::size_t i = 0; i < in.phi_files.size(); ++i) {
    RefineTrial t{FieldMap::zeros(cfg.plane), FieldMap::zeros(cfg.plane)};
    try {
      t.phi = load_field_auto(in.phi_files[i], cfg.plane);
      t.b = load_field_auto(in.b_files[i], cfg.plane);
    } catch (const std::exception& e) {
      throw CommandError("io", e.what());
    }
    trials.push_back(std::move(t));
  }

  // The common body pair comes from the first trial's inversion.
  const OccupancyField body_g =
      threshold_body(predict(net_g, normalized_copy(trials.front().phi)), cfg.refine.threshold);
  const OccupancyField body_m =
      threshold_body(predict(net_m, normalized_copy(trials.front().b)), cfg.refine.threshold);
  save_tensor(tensor_from_occupancy(body_g), out_dir / "body_g.ginv");
  save_tensor(tensor_from_occupancy(body_m), out_dir / "body_m.ginv");

  RefineResult res;
  try {
    res = refine_trials(cfg.refine, trials, &net_g, &net_m, &body_g, &body_m, ctx.gravity,
                        ctx.magnetic, threads);
  } catch (const std::exception& e) {
    throw CommandError("runtime", e.what());
  }

  {
    std::ofstream out(out_dir / "surface.csv");
    if (!out) throw CommandError("io", "cannot write surface.csv");
    out << "nu,mu,phi,is_argmin\n";
    for (std::size_t i = 0; i < res.nu_grid.size(); ++i) {
      for (std::size_t j = 0; j < res.mu_grid.size(); ++j) {
        out << fmt(res.nu_grid[i]) << ',' << fmt(res.mu_grid[j]) << ','
            << fmt(res.at(static_cast<int>(i), static_cast<int>(j))) << ','
            << (static_cast<int>(i) == res.i_best && static_cast<int>(j) == res.j_best ? 1 : 0)
            << '\n';
      }
    }
  }
  auto write_hist = [&](const std::filesystem::path& path, const std::vector<double>& grid,
                        const std::vector<long>& counts) {
    std::ofstream out(path);
    if (!out) throw CommandError("io", "cannot write " + path.string());
    out << "bin_center,count\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out << fmt(grid[i]) << ',' << counts[i] << '\n';
    }
  };
  write_hist(out_dir / "hist_nu.csv", res.nu_grid, res.nu_hist);
  write_hist(out_dir / "hist_mu.csv", res.mu_grid, res.mu_hist);

  nlohmann::json summary;
  summary["nu_best"] = res.nu_best;
  summary["mu_best"] = res.mu_best;
  summary["trial_count"] = res.trial_count;
  nlohmann::json minima = nlohmann::json::array();
  for (const auto& [i, j] : res.local_minima) {
    minima.push_back({{"nu", res.nu_grid[i]}, {"mu", res.mu_grid[j]}, {"phi", res.at(i, j)}});
  }
  summary["local_minima"] = std::move(minima);
  std::ofstream out(out_dir / "result.json");
  if (!out) throw CommandError("io", "cannot write result.json");
  out << summary.dump(2) << '\n';
}

void cmd_sweep(const RunConfig& cfg, const SweepInputs& in,
               const std::filesystem::path& out_dir) {
  cfg.validate();
  RunDirLock lock(out_dir);
  write_provenance(cfg, "sweep", out_dir);

  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed;
  tcfg.strict = cfg.strict;
  tcfg.threads = cfg.threads;

  if (in.kind == SweepKind::Alpha) {
    Dataset ds;
    try {
      ds = load_dataset(in.dataset_dir);
    } catch (const std::exception& e) {
      throw CommandError("io", e.what());
    }
    std::vector<double> grid = in.grid;
    if (grid.empty()) grid = RefineConfig::linspace(0.0, 1.5, 7);
    const auto sweep = alpha_sweep(ds, tcfg, cfg.arch, grid);
    std::ofstream out(out_dir / "alpha_sweep.csv");
    if (!out) throw CommandError("io", "cannot write alpha_sweep.csv");
    out << "alpha,loss_result,iter_stop\n";
    for (const auto& row : sweep.rows) {
      out << fmt(row.alpha) << ',' << fmt(row.loss_result) << ',' << row.iter_stop << '\n';
    }
    nlohmann::json j;
    j["best_alpha"] = sweep.best_alpha;
    std::ofstream res(out_dir / "result.json");
    res << j.dump(2) << '\n';
    return;
  }

  MixtureExperimentConfig mix;
  mix.class_a = cfg.dataset.class_a;
  mix.class_b = cfg.dataset.class_b;
  mix.lambdas = in.grid.empty() ? RefineConfig::linspace(0.0, 1.0, 11) : in.grid;
  mix.count = cfg.dataset.count;
  mix.n_train = cfg.n_train;
  mix.n_test = cfg.n_test;
  mix.n_valid = std::max(cfg.n_test, 1);
  mix.proto = cfg.dataset;
  mix.valid_classes = {cfg.dataset.class_a, cfg.dataset.class_b};
  mix.arch = cfg.arch;
  mix.tcfg = tcfg;
  mix.seed = cfg.seed;
  const auto ctx = ForwardContext::assemble(cfg.domain, cfg.plane, cfg.constants,
                                            cfg.dataset.mag_dir, cfg.storage,
                                            effective_threads(cfg.threads, cfg.strict));
  const auto rows = mixture_experiment(mix, ctx);
  std::ofstream out(out_dir / "lambda_mixture.csv");
  if (!out) throw CommandError("io", "cannot write lambda_mixture.csv");
  out << "lambda";
  if (!rows.empty()) {
    for (const auto& [name, loss] : rows.front().validation) out << ",valid_" << name;
  }
  out << '\n';
  for (const auto& row : rows) {
    out << fmt(row.lambda);
    for (const auto& [name, loss] : row.validation) out << ',' << fmt(loss);
    out << '\n';
  }
}

void cmd_report(const std::filesystem::path& run_dir) {
  if (!std::filesystem::is_directory(run_dir)) {
    throw CommandError("usage", "run directory does not exist: " + run_dir.string());
  }
  std::ostringstream summary;
  summary << "run directory: " << run_dir.filename().string() << '\n';

  const auto prov_path = run_dir / "provenance.json";
  if (std::filesystem::exists(prov_path)) {
    std::ifstream in(prov_path);
    nlohmann::json prov;
    in >> prov;
    summary << "command: " << prov.value("command", "?") << '\n';
    summary << "code version: " << prov.value("code_version", "?") << '\n';
    summary << "config hash: " << prov.value("config_hash", 0ULL) << '\n';
    summary << "seed: " << prov.value("seed", 0ULL) << '\n';
    summary << "strict: " << (prov.value("strict", false) ? "yes" : "no") << '\n';
  }
  const auto report_path = run_dir / "report.json";
  if (std::filesystem::exists(report_path)) {
    std::ifstream in(report_path);
    nlohmann::json rep;
    in >> rep;
    summary << "iter_stop: " << rep.value("iter_stop", 0) << '\n';
    summary << "loss_result: " << rep.value("loss_result", 0.0) << '\n';
  }
  summary << "files:\n";
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
    if (entry.path().filename() == "summary.txt") continue;
    names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  for (const auto& n : names) summary << "  " << n << '\n';

  std::ofstream out(run_dir / "summary.txt");
  if (!out) throw CommandError("io", "cannot write summary.txt");
  out << summary.str();
}

}  // namespace geoinv
