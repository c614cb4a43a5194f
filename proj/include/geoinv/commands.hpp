#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoinv/run_config.hpp"

namespace geoinv {

/// Error with a machine-readable category; the CLI maps categories to exit
/// codes and emits them as JSON on stderr.
struct CommandError : std::runtime_error {
  std::string category;  // usage | config | io | runtime

  CommandError(std::string cat, const std::string& msg)
      : std::runtime_error(msg), category(std::move(cat)) {}
};

struct TrainInputs {
  std::filesystem::path dataset_dir;
  std::optional<std::filesystem::path> ckpt_g;  // warm start (joint)
  std::optional<std::filesystem::path> ckpt_m;
  std::optional<std::filesystem::path> resume_dir;  // continue a previous run
  bool cold_start = false;
};

struct InvertInputs {
  std::optional<std::filesystem::path> ckpt_g;
  std::optional<std::filesystem::path> ckpt_m;
  std::optional<std::filesystem::path> phi_file;
  std::optional<std::filesystem::path> b_file;
};

struct RefineInputs {
  std::filesystem::path ckpt_g;
  std::filesystem::path ckpt_m;
  std::vector<std::filesystem::path> phi_files;  // one trial per (phi, b) pair
  std::vector<std::filesystem::path> b_files;
};

enum class GzInputFormat { Auto, Text, Binary, LatLon };

enum class SweepKind { Alpha, Lambda };

struct SweepInputs {
  SweepKind kind = SweepKind::Alpha;
  std::filesystem::path dataset_dir;  // alpha sweeps train on an existing dataset
  std::vector<double> grid;           // empty: kind-specific default
};

/// Synthesizes the dataset into out_dir/dataset and writes provenance.
void cmd_gen(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Trains per cfg.train.mode; writes checkpoints, train_log.csv, report.json.
void cmd_train(const RunConfig& cfg, const TrainInputs& in,
               const std::filesystem::path& out_dir);

/// Applies the networks to field files; emits continuous and thresholded
/// bodies, separately and joined.
void cmd_invert(const RunConfig& cfg, const InvertInputs& in,
                const std::filesystem::path& out_dir);

/// Converts a vertical-gravity grid into potential values on the plane.
void cmd_convert_gz(const RunConfig& cfg, const std::filesystem::path& grid_file,
                    GzInputFormat format, const std::filesystem::path& out_file);

/// Amplitude grid search over the (nu, mu) box; emits surface and histogram
/// CSVs plus the recovered bodies.
void cmd_refine(const RunConfig& cfg, const RefineInputs& in,
                const std::filesystem::path& out_dir);

/// Experiment drivers: the structural-weight sweep (alpha_sweep.csv) or the
/// class-mixture transfer study (lambda_mixture.csv).
void cmd_sweep(const RunConfig& cfg, const SweepInputs& in,
               const std::filesystem::path& out_dir);

/// Collects a run directory into summary.txt; idempotent.
void cmd_report(const std::filesystem::path& run_dir);

}  // namespace geoinv
