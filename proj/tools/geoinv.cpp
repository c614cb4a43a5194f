#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "geoinv/commands.hpp"
#include "geoinv/version.hpp"

namespace {

using geoinv::RunConfig;

struct CommonArgs {
  std::string config_path;
  std::string preset = "paper-toy";
  std::optional<std::uint64_t> seed;
  bool strict = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration file (JSON)");
    cmd->add_option("--preset", preset, "configuration preset")
        ->check(CLI::IsMember({"paper-toy", "paper-brazil-pipeline", "desk"}));
    cmd->add_option("--seed", seed, "master seed override");
    cmd->add_flag("--strict", strict, "bit-reproducible single-worker mode");
  }

  RunConfig resolve() const {
    nlohmann::json j = RunConfig::preset(preset).to_json();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw geoinv::CommandError("io", "cannot open config: " + config_path);
      nlohmann::json overlay;
      try {
        in >> overlay;
      } catch (const nlohmann::json::parse_error& e) {
        throw geoinv::CommandError("config",
                                   "config parse error in " + config_path + ": " + e.what());
      }
      j = geoinv::merge_json(j, overlay);
    }
    RunConfig cfg = RunConfig::from_json(j);
    if (seed) cfg.seed = *seed;
    if (strict) cfg.strict = true;
    return cfg;
  }
};

int error_exit_code(const std::string& category) {
  if (category == "usage") return 64;
  if (category == "config") return 65;
  if (category == "io") return 66;
  return 70;
}

void print_error(const std::string& category, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"category", category}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint gravity/magnetic field inversion pipeline"};
  app.set_version_flag("--version", geoinv::kVersion);
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, invert_args, convert_args, refine_args;
  std::string out_dir;

  auto* gen = app.add_subcommand("gen", "synthesize a dataset");
  gen_args.attach(gen);
  std::string gen_out;
  gen->add_option("--out", gen_out, "run directory")->required();

  auto* train = app.add_subcommand("train", "train the inversion networks");
  train_args.attach(train);
  geoinv::TrainInputs train_in;
  std::string train_dataset, train_out, train_ckpt_g, train_ckpt_m, train_resume;
  bool cold_start = false;
  train->add_option("--dataset", train_dataset, "dataset directory (from gen)")->required();
  train->add_option("--out", train_out, "run directory")->required();
  train->add_option("--ckpt-g", train_ckpt_g, "gravity checkpoint for joint warm start");
  train->add_option("--ckpt-m", train_ckpt_m, "magnetic checkpoint for joint warm start");
  train->add_option("--resume", train_resume, "previous run directory to continue");
  train->add_flag("--cold-start", cold_start, "joint mode from fresh initialization");

  auto* invert = app.add_subcommand("invert", "predict bodies from field maps");
  invert_args.attach(invert);
  std::string inv_ckpt_g, inv_ckpt_m, inv_phi, inv_b, inv_out;
  invert->add_option("--ckpt-g", inv_ckpt_g, "gravity checkpoint");
  invert->add_option("--ckpt-m", inv_ckpt_m, "magnetic checkpoint");
  invert->add_option("--phi", inv_phi, "gravity potential field map");
  invert->add_option("--b", inv_b, "magnetic z-component field map");
  invert->add_option("--out", inv_out, "run directory")->required();

  auto* convert = app.add_subcommand("convert-gz", "convert vertical gravity to potential");
  convert_args.attach(convert);
  std::string gz_in, gz_out, gz_format = "auto";
  convert->add_option("--grid", gz_in, "g_z grid file")->required();
  convert->add_option("--out", gz_out, "output field map path")->required();
  convert->add_option("--format", gz_format, "input format")
      ->check(CLI::IsMember({"auto", "text", "binary", "latlon"}));

  auto* refine = app.add_subcommand("refine", "amplitude grid search");
  refine_args.attach(refine);
  std::string ref_ckpt_g, ref_ckpt_m, ref_out;
  std::vector<std::string> ref_phi, ref_b;
  refine->add_option("--ckpt-g", ref_ckpt_g, "gravity checkpoint")->required();
  refine->add_option("--ckpt-m", ref_ckpt_m, "magnetic checkpoint")->required();
  refine->add_option("--phi", ref_phi, "gravity data files (one per trial)")->required();
  refine->add_option("--b", ref_b, "magnetic data files (one per trial)")->required();
  refine->add_option("--out", ref_out, "run directory")->required();

  CommonArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "structural-weight or class-mixture experiment");
  sweep_args.attach(sweep);
  std::string sweep_kind = "alpha", sweep_dataset, sweep_out;
  std::vector<double> sweep_grid;
  sweep->add_option("--kind", sweep_kind, "experiment kind")
      ->check(CLI::IsMember({"alpha", "lambda"}));
  sweep->add_option("--dataset", sweep_dataset, "dataset directory (alpha sweeps)");
  sweep->add_option("--grid", sweep_grid, "explicit grid values");
  sweep->add_option("--out", sweep_out, "run directory")->required();

  auto* report = app.add_subcommand("report", "summarize a run directory");
  std::string report_dir;
  report->add_option("run_dir", report_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      geoinv::cmd_gen(gen_args.resolve(), gen_out);
    } else if (train->parsed()) {
      if (!train_ckpt_g.empty()) train_in.ckpt_g = train_ckpt_g;
      if (!train_ckpt_m.empty()) train_in.ckpt_m = train_ckpt_m;
      if (!train_resume.empty()) train_in.resume_dir = train_resume;
      train_in.cold_start = cold_start;
      train_in.dataset_dir = train_dataset;
      geoinv::cmd_train(train_args.resolve(), train_in, train_out);
    } else if (invert->parsed()) {
      geoinv::InvertInputs in;
      if (!inv_ckpt_g.empty()) in.ckpt_g = inv_ckpt_g;
      if (!inv_ckpt_m.empty()) in.ckpt_m = inv_ckpt_m;
      if (!inv_phi.empty()) in.phi_file = inv_phi;
      if (!inv_b.empty()) in.b_file = inv_b;
      geoinv::cmd_invert(invert_args.resolve(), in, inv_out);
    } else if (convert->parsed()) {
      geoinv::GzInputFormat fmt = geoinv::GzInputFormat::Auto;
      if (gz_format == "text") fmt = geoinv::GzInputFormat::Text;
      else if (gz_format == "binary") fmt = geoinv::GzInputFormat::Binary;
      else if (gz_format == "latlon") fmt = geoinv::GzInputFormat::LatLon;
      geoinv::cmd_convert_gz(convert_args.resolve(), gz_in, fmt, gz_out);
    } else if (refine->parsed()) {
      geoinv::RefineInputs in;
      in.ckpt_g = ref_ckpt_g;
      in.ckpt_m = ref_ckpt_m;
      for (const auto& p : ref_phi) in.phi_files.emplace_back(p);
      for (const auto& p : ref_b) in.b_files.emplace_back(p);
      geoinv::cmd_refine(refine_args.resolve(), in, ref_out);
    } else if (sweep->parsed()) {
      geoinv::SweepInputs in;
      in.kind = sweep_kind == "alpha" ? geoinv::SweepKind::Alpha : geoinv::SweepKind::Lambda;
      if (in.kind == geoinv::SweepKind::Alpha && sweep_dataset.empty()) {
        throw geoinv::CommandError("usage", "alpha sweeps need --dataset");
      }
      in.dataset_dir = sweep_dataset;
      in.grid = sweep_grid;
      geoinv::cmd_sweep(sweep_args.resolve(), in, sweep_out);
    } else if (report->parsed()) {
      geoinv::cmd_report(report_dir);
    }
  } catch (const geoinv::CommandError& e) {
    print_error(e.category, e.what());
    return error_exit_code(e.category);
  } catch (const std::invalid_argument& e) {
    print_error("config", e.what());
    return error_exit_code("config");
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return error_exit_code("runtime");
  }
  return 0;
}
