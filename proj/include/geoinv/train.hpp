#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geoinv/dataset.hpp"
#include "geoinv/loss.hpp"
#include "geoinv/model.hpp"

namespace geoinv {

struct AdamWConfig {
  double lr = 3.0e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

struct AdamWState {
  std::vector<double> m, v;
  long t = 0;

  void init(std::size_t n);
};

/// One decoupled-weight-decay adaptive-moment update, bias-corrected.
/// Throws on non-finite gradients.
void adamw_step(std::vector<double>& params, std::span<const double> grads,
                AdamWState& state, const AdamWConfig& cfg);

enum class TrainMode { SeparateG, SeparateM, Joint };

struct TrainConfig {
  double learning_rate = 3.0e-4;
  int batch_size = 64;
  int max_epochs = 300;
  double epsilon = 0.02;  // early-stopping gap
  double alpha = 1.0;     // structural weight (joint mode)
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::Joint;
  bool mean_batch_loss = false;  // batch gradients from mean instead of sum
  bool strict = false;
  int threads = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double loss_train = 0.0;  // per-record mean over the split
  double loss_test = 0.0;
  double loss_grav = 0.0;
  double loss_mag = 0.0;
  double structural = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double initial_loss_train = 0.0;  // before the first update
  double initial_loss_test = 0.0;
  int iter_stop = 0;
  double loss_result = 0.0;  // loss_test at iter_stop
  double wall_seconds = 0.0;
  std::vector<ModelCheckpoint> models;  // [g] or [g, m]
};

/// Stopping rule: the first epoch whose train/test gap reaches epsilon.
bool stop_triggered(double loss_train, double loss_test, double epsilon);

/// Same rule applied to recorded curves; returns the 1-based first epoch, or
/// curve length when the rule never fires.
int first_stop_epoch(std::span<const double> loss_train, std::span<const double> loss_test,
                     double epsilon);

/// Lower level: one model (SeparateG/SeparateM). Upper level: a [g, m] pair
/// under the joint structural loss. Batch gradients are reduced per-record in
/// ascending index order, so results do not depend on the worker count.
TrainReport train(std::vector<ModelCheckpoint> models, const Dataset& ds,
                  const TrainConfig& cfg);

enum class Observable { Gravity, Magnetic };

/// Sum over the given records of (1 - dice(prediction, truth)), with the
/// record's stored normalization applied to the input.
double validate(const ModelCheckpoint& ckpt, const Dataset& ds,
                std::span<const int> indices, Observable obs, int threads = 0);

struct AlphaSweepRow {
  double alpha = 0.0;
  double loss_result = 0.0;
  int iter_stop = 0;
};

struct AlphaSweepResult {
  std::vector<AlphaSweepRow> rows;
  double best_alpha = 0.0;
};

/// Joint training per alpha from one shared initialization seed.
AlphaSweepResult alpha_sweep(const Dataset& ds, const TrainConfig& base,
                             const NetworkArchitecture& arch,
                             std::span<const double> alphas);

struct MixtureExperimentConfig {
  BodyClass class_a = BodyClass::Stoch;
  BodyClass class_b = BodyClass::Toy;
  std::vector<double> lambdas;
  int count = 0;    // training-corpus size per lambda
  int n_train = 0;
  int n_test = 0;
  int n_valid = 0;  // per validation class
  DatasetSpec proto;  // amplitudes, sizes, noise sigma
  std::vector<BodyClass> valid_classes;
  bool include_mixed_valid = true;
  NetworkArchitecture arch;
  TrainConfig tcfg;
  std::uint64_t seed = 0;
};

struct MixtureRow {
  double lambda = 0.0;
  std::vector<std::pair<std::string, double>> validation;  // class name -> loss
};

/// Class-mixture transfer study for the gravity network: trains on each
/// lambda blend at fixed corpus size, then validates against class-pure sets
/// and a 50/50 blend.
std::vector<MixtureRow> mixture_experiment(const MixtureExperimentConfig& cfg,
                                           const ForwardContext& ctx);

}  // namespace geoinv
