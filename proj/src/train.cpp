#include "geoinv/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "geoinv/parallel.hpp"
#include "geoinv/rng.hpp"

namespace geoinv {

namespace {

constexpr std::uint64_t kSaltShuffle = 0x73687566ULL;
constexpr std::uint64_t kSaltValidMix = 0x766d6978ULL;
constexpr std::uint64_t kSaltValidPure = 0x76707572ULL;
// Records in flight per gradient block; fixed so the per-record reduction
// order never depends on the machine.
constexpr int kGradBlock = 8;

std::vector<double> normalized_input(const DatasetRecord& rec, Observable obs) {
  const FieldMap& map = obs == Observable::Gravity ? rec.phi : rec.b;
  const double scale = obs == Observable::Gravity ? rec.meta.phi_scale : rec.meta.b_scale;
  std::vector<double> v(map.values);
  const double inv = 1.0 / scale;
  for (double& x : v) x *= inv;
  return v;
}

struct RecordTerms {
  double grav = 0.0, mag = 0.0, structural = 0.0;
};

/// Loss terms of one record under the current parameters; used for the
/// epoch-level metrics (no gradients).
RecordTerms eval_record(const std::vector<ModelCheckpoint>& models, const DatasetRecord& rec,
                        TrainMode mode) {
  RecordTerms t;
  ForwardCache cache;
  if (mode == TrainMode::SeparateG || mode == TrainMode::Joint) {
    model_forward(models[0].arch, models[0].params, normalized_input(rec, Observable::Gravity),
                  cache);
    t.grav = 1.0 - dice(cache.output.v, rec.body.values);
  }
  if (mode == TrainMode::Joint) {
    ForwardCache cache_m;
    model_forward(models[1].arch, models[1].params, normalized_input(rec, Observable::Magnetic),
                  cache_m);
    t.mag = 1.0 - dice(cache_m.output.v, rec.body.values);
    t.structural = 1.0 - dice(cache.output.v, cache_m.output.v);
  } else if (mode == TrainMode::SeparateM) {
    model_forward(models[0].arch, models[0].params, normalized_input(rec, Observable::Magnetic),
                  cache);
    t.mag = 1.0 - dice(cache.output.v, rec.body.values);
  }
  return t;
}

struct SplitMetrics {
  double mean_total = 0.0;
  double mean_grav = 0.0, mean_mag = 0.0, mean_structural = 0.0;
};

SplitMetrics eval_split(const std::vector<ModelCheckpoint>& models, const Dataset& ds,
                        std::span<const int> indices, TrainMode mode, double alpha,
                        int threads) {
  const long n = static_cast<long>(indices.size());
  std::vector<RecordTerms> terms(n);
  WorkerError err;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    err.run([&, i] { terms[i] = eval_record(models, ds.records[indices[i]], mode); });
  }
  err.rethrow_if_any();
  SplitMetrics m;
  for (long i = 0; i < n; ++i) {  // fixed-order reduction
    m.mean_grav += terms[i].grav;
    m.mean_mag += terms[i].mag;
    m.mean_structural += terms[i].structural;
  }
  const double inv = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  m.mean_grav *= inv;
  m.mean_mag *= inv;
  m.mean_structural *= inv;
  switch (mode) {
    case TrainMode::SeparateG: m.mean_total = m.mean_grav; break;
    case TrainMode::SeparateM: m.mean_total = m.mean_mag; break;
    case TrainMode::Joint:
      m.mean_total = 0.5 * m.mean_grav + 0.5 * m.mean_mag + alpha * m.mean_structural;
      break;
  }
  return m;
}

}  // namespace

void AdamWState::init(std::size_t n) {
  m.assign(n, 0.0);
  v.assign(n, 0.0);
  t = 0;
}

void adamw_step(std::vector<double>& params, std::span<const double> grads,
                AdamWState& state, const AdamWConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adamw_step: size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw std::runtime_error("adamw_step: non-finite gradient");
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= cfg.lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * params[i]);
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be > 0");
  if (alpha < 0.0) throw std::invalid_argument("TrainConfig: alpha must be >= 0");
  if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
}

bool stop_triggered(double loss_train, double loss_test, double epsilon) {
  return std::abs(loss_train - loss_test) >= epsilon;
}

int first_stop_epoch(std::span<const double> loss_train, std::span<const double> loss_test,
                     double epsilon) {
  if (loss_train.size() != loss_test.size() || loss_train.empty()) {
    throw std::invalid_argument("first_stop_epoch: curve length mismatch");
  }
  for (std::size_t e = 0; e < loss_train.size(); ++e) {
    if (stop_triggered(loss_train[e], loss_test[e], epsilon)) return static_cast<int>(e) + 1;
  }
  return static_cast<int>(loss_train.size());
}

TrainReport train(std::vector<ModelCheckpoint> models, const Dataset& ds,
                  const TrainConfig& cfg) {
  cfg.validate();
  const bool joint = cfg.mode == TrainMode::Joint;
  if (joint && models.size() != 2) {
    throw std::invalid_argument("train: joint mode needs a [gravity, magnetic] model pair");
  }
  if (!joint && models.size() != 1) {
    throw std::invalid_argument("train: separate mode needs exactly one model");
  }
  if (ds.split.train.empty() || ds.split.test.empty()) {
    throw std::invalid_argument("train: dataset has no train/test split");
  }
  for (const auto& m : models) {
    if (m.arch.in_h != ds.plane.mx || m.arch.in_w != ds.plane.my ||
        m.arch.out_channels != ds.domain.nz || m.arch.in_h != ds.domain.nx ||
        m.arch.in_w != ds.domain.ny) {
      throw std::invalid_argument("train: model shape does not match dataset geometry");
    }
  }
  const int threads = effective_threads(cfg.threads, cfg.strict);

  AdamWConfig opt;
  opt.lr = cfg.learning_rate;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.weight_decay = cfg.weight_decay;
  std::vector<AdamWState> states(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) states[i].init(models[i].params.size());

  TrainReport report;
  {
    const auto m0 = eval_split(models, ds, ds.split.train, cfg.mode, cfg.alpha, threads);
    const auto m1 = eval_split(models, ds, ds.split.test, cfg.mode, cfg.alpha, threads);
    report.initial_loss_train = m0.mean_total;
    report.initial_loss_test = m1.mean_total;
  }

  const auto wall_start = std::chrono::steady_clock::now();
  std::vector<int> order(ds.split.train.begin(), ds.split.train.end());

  std::vector<std::vector<double>> block_grads_g(kGradBlock), block_grads_m(kGradBlock);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();

    CounterRng shuffle_rng(hash_seed(cfg.seed, static_cast<std::uint64_t>(epoch), kSaltShuffle));
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.uniform_int(0, i));
      std::swap(order[i], order[j]);
    }

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const int bsz = static_cast<int>(std::min<std::size_t>(cfg.batch_size,
                                                             order.size() - start));
      std::vector<double> grad_g(models[0].params.size(), 0.0);
      std::vector<double> grad_m(joint ? models[1].params.size() : 0, 0.0);
      double batch_loss = 0.0;

      for (int blk = 0; blk < bsz; blk += kGradBlock) {
        const int blk_n = std::min(kGradBlock, bsz - blk);
        std::vector<double> blk_loss(blk_n, 0.0);
        WorkerError err;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (int r = 0; r < blk_n; ++r) {
          err.run([&, r] {
            const DatasetRecord& rec = ds.records[order[start + blk + r]];
            if (!joint) {
              const Observable obs = cfg.mode == TrainMode::SeparateG ? Observable::Gravity
                                                                      : Observable::Magnetic;
              ForwardCache cache;
              model_forward(models[0].arch, models[0].params, normalized_input(rec, obs), cache);
              blk_loss[r] = 1.0 - dice(cache.output.v, rec.body.values);
              std::vector<double> d_out(cache.output.v.size());
              dice_loss_grad(cache.output.v, rec.body.values, d_out);
              block_grads_g[r] = model_backward(models[0].arch, models[0].params, cache, d_out);
            } else {
              ForwardCache cache_g, cache_m;
              model_forward(models[0].arch, models[0].params,
                            normalized_input(rec, Observable::Gravity), cache_g);
              model_forward(models[1].arch, models[1].params,
                            normalized_input(rec, Observable::Magnetic), cache_m);
              const auto& out_g = cache_g.output.v;
              const auto& out_m = cache_m.output.v;
              blk_loss[r] = 0.5 * (1.0 - dice(out_g, rec.body.values)) +
                            0.5 * (1.0 - dice(out_m, rec.body.values)) +
                            cfg.alpha * (1.0 - dice(out_g, out_m));
              std::vector<double> d_g(out_g.size()), d_m(out_m.size()), d_s(out_g.size());
              dice_loss_grad(out_g, rec.body.values, d_g);
              dice_loss_grad(out_m, rec.body.values, d_m);
              dice_loss_grad(out_g, out_m, d_s);
              for (std::size_t i = 0; i < d_g.size(); ++i) d_g[i] = 0.5 * d_g[i] + cfg.alpha * d_s[i];
              dice_loss_grad(out_m, out_g, d_s);  // dice is symmetric in its arguments
              for (std::size_t i = 0; i < d_m.size(); ++i) d_m[i] = 0.5 * d_m[i] + cfg.alpha * d_s[i];
              block_grads_g[r] = model_backward(models[0].arch, models[0].params, cache_g, d_g);
              block_grads_m[r] = model_backward(models[1].arch, models[1].params, cache_m, d_m);
            }
          });
        }
        err.rethrow_if_any();
        for (int r = 0; r < blk_n; ++r) {  // ascending record order
          batch_loss += blk_loss[r];
          const auto& gg = block_grads_g[r];
          for (std::size_t i = 0; i < grad_g.size(); ++i) grad_g[i] += gg[i];
          if (joint) {
            const auto& gm = block_grads_m[r];
            for (std::size_t i = 0; i < grad_m.size(); ++i) grad_m[i] += gm[i];
          }
        }
      }

      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch offset " + std::to_string(start));
      }
      if (cfg.mean_batch_loss) {
        const double inv = 1.0 / bsz;
        for (double& g : grad_g) g *= inv;
        for (double& g : grad_m) g *= inv;
      }
      adamw_step(models[0].params, grad_g, states[0], opt);
      models[0].step_count += 1;
      if (joint) {
        adamw_step(models[1].params, grad_m, states[1], opt);
        models[1].step_count += 1;
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    const auto mt = eval_split(models, ds, ds.split.train, cfg.mode, cfg.alpha, threads);
    const auto ms = eval_split(models, ds, ds.split.test, cfg.mode, cfg.alpha, threads);
    stats.loss_train = mt.mean_total;
    stats.loss_test = ms.mean_total;
    stats.loss_grav = ms.mean_grav;
    stats.loss_mag = ms.mean_mag;
    stats.structural = ms.mean_structural;
    stats.seconds = cfg.strict ? 0.0
                               : std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                               epoch_start)
                                     .count();
    report.epochs.push_back(stats);

    if (stop_triggered(stats.loss_train, stats.loss_test, cfg.epsilon)) break;
  }

  report.iter_stop = static_cast<int>(report.epochs.size());
  report.loss_result = report.epochs.back().loss_test;
  report.wall_seconds =
      cfg.strict ? 0.0
                 : std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
                       .count();
  report.models = std::move(models);
  return report;
}

double validate(const ModelCheckpoint& ckpt, const Dataset& ds, std::span<const int> indices,
                Observable obs, int threads) {
  if (indices.empty()) throw std::invalid_argument("validate: empty index set");
  const int nthreads = effective_threads(threads, false);
  const long n = static_cast<long>(indices.size());
  std::vector<double> terms(n, 0.0);
  WorkerError err;
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
  for (long i = 0; i < n; ++i) {
    err.run([&, i] {
      const DatasetRecord& rec = ds.records[indices[i]];
      ForwardCache cache;
      model_forward(ckpt.arch, ckpt.params, normalized_input(rec, obs), cache);
      terms[i] = 1.0 - dice(cache.output.v, rec.body.values);
    });
  }
  err.rethrow_if_any();
  double total = 0.0;
  for (long i = 0; i < n; ++i) total += terms[i];
  return total;
}

AlphaSweepResult alpha_sweep(const Dataset& ds, const TrainConfig& base,
                             const NetworkArchitecture& arch,
                             std::span<const double> alphas) {
  if (alphas.size() < 2) throw std::invalid_argument("alpha_sweep: need at least 2 grid points");
  AlphaSweepResult res;
  double best = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    TrainConfig cfg = base;
    cfg.mode = TrainMode::Joint;
    cfg.alpha = alphas[i];
    std::vector<ModelCheckpoint> models = {init_model(arch, hash_seed(base.seed, 'g')),
                                           init_model(arch, hash_seed(base.seed, 'm'))};
    const TrainReport rep = train(std::move(models), ds, cfg);
    res.rows.push_back({alphas[i], rep.loss_result, rep.iter_stop});
    if (i == 0 || rep.loss_result < best) {
      best = rep.loss_result;
      res.best_alpha = alphas[i];
    }
  }
  return res;
}

std::vector<MixtureRow> mixture_experiment(const MixtureExperimentConfig& cfg,
                                           const ForwardContext& ctx) {
  if (cfg.lambdas.empty()) throw std::invalid_argument("mixture_experiment: empty lambda grid");
  if (cfg.count < 1 || cfg.n_train + cfg.n_test > cfg.count) {
    throw std::invalid_argument("mixture_experiment: bad corpus/split sizes");
  }

  // Validation sets are fixed across lambdas.
  std::vector<std::pair<std::string, Dataset>> valid_sets;
  for (BodyClass cls : cfg.valid_classes) {
    DatasetSpec spec = cfg.proto;
    spec.count = cfg.n_valid;
    spec.class_a = cls;
    spec.class_b = cls;
    spec.lambda = 1.0;
    spec.noise_fraction = 0.0;
    valid_sets.emplace_back(to_string(cls),
                            build_dataset(spec, ctx, hash_seed(cfg.seed, kSaltValidPure,
                                                               static_cast<std::uint64_t>(cls)),
                                          cfg.tcfg.threads));
  }
  if (cfg.include_mixed_valid) {
    DatasetSpec spec = cfg.proto;
    spec.count = cfg.n_valid;
    spec.class_a = cfg.class_a;
    spec.class_b = cfg.class_b;
    spec.lambda = 0.5;
    spec.noise_fraction = 0.0;
    valid_sets.emplace_back("MIXED",
                            build_dataset(spec, ctx, hash_seed(cfg.seed, kSaltValidMix),
                                          cfg.tcfg.threads));
  }
  for (auto& [name, vs] : valid_sets) {
    vs.split.valid.resize(vs.records.size());
    std::iota(vs.split.valid.begin(), vs.split.valid.end(), 0);
  }

  std::vector<MixtureRow> rows;
  for (double lambda : cfg.lambdas) {
    DatasetSpec spec = cfg.proto;
    spec.count = cfg.count;
    spec.class_a = cfg.class_a;
    spec.class_b = cfg.class_b;
    spec.lambda = lambda;
    Dataset ds = build_dataset(spec, ctx, hash_seed(cfg.seed, 0x6d6978ULL), cfg.tcfg.threads);
    split_dataset(ds, cfg.n_train, cfg.n_test, hash_seed(cfg.seed, 0x73706cULL));

    TrainConfig tcfg = cfg.tcfg;
    tcfg.mode = TrainMode::SeparateG;
    std::vector<ModelCheckpoint> models = {init_model(cfg.arch, hash_seed(cfg.seed, 'g'))};
    const TrainReport rep = train(std::move(models), ds, tcfg);

    MixtureRow row;
    row.lambda = lambda;
    for (const auto& [name, vs] : valid_sets) {
      row.validation.emplace_back(
          name, validate(rep.models[0], vs, vs.split.valid, Observable::Gravity,
                         cfg.tcfg.threads));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace geoinv
