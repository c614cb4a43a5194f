#include "geoinv/refine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "geoinv/parallel.hpp"

namespace geoinv {

void RefineConfig::validate() const {
  if (nu_grid.empty() || mu_grid.empty()) {
    throw std::invalid_argument("RefineConfig: grids must be nonempty");
  }
  if (!std::is_sorted(nu_grid.begin(), nu_grid.end()) ||
      !std::is_sorted(mu_grid.begin(), mu_grid.end())) {
    throw std::invalid_argument("RefineConfig: grids must be ascending");
  }
  if (beta1 < 0.0 || beta2 < 0.0 || alpha < 0.0) {
    throw std::invalid_argument("RefineConfig: weights must be >= 0");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("RefineConfig: threshold must lie in (0,1)");
  }
}

std::vector<double> RefineConfig::linspace(double lo, double hi, int n) {
  if (n < 1 || !(hi >= lo)) throw std::invalid_argument("linspace: bad range");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

namespace {

FieldMap scaled_map(const FieldMap& unit_field, double scale) {
  FieldMap f = unit_field;
  for (double& v : f.values) v *= scale;
  return f;
}

double misfit_against(const FieldMap& unit_field, double amplitude, const FieldMap& data,
                      ResidualKind kind) {
  const FieldMap model = scaled_map(unit_field, amplitude);
  return residual(kind, model, data);
}

void check_geometry(const OccupancyField& body, const FieldMap& data,
                    const ForwardMatrix& op, const char* what) {
  if (!body.matches(op.domain())) {
    throw std::invalid_argument(std::string(what) + ": body does not match operator domain");
  }
  if (static_cast<long>(data.values.size()) != op.rows()) {
    throw std::invalid_argument(std::string(what) + ": data does not match operator plane");
  }
}

}  // namespace

double gravity_misfit(double nu, const OccupancyField& body, const FieldMap& data,
                      ResidualKind kind, double rho0, const ForwardMatrix& gravity) {
  check_geometry(body, data, gravity, "gravity_misfit");
  const FieldMap unit = gravity.apply(body.values, rho0);
  return misfit_against(unit, nu, data, kind);
}

double magnetic_misfit(double mu, const OccupancyField& body, const FieldMap& data,
                       ResidualKind kind, double m0, const ForwardMatrix& magnetic) {
  check_geometry(body, data, magnetic, "magnetic_misfit");
  const FieldMap unit = magnetic.apply(body.values, m0);
  return misfit_against(unit, mu, data, kind);
}

double joint_misfit(double nu, double mu, const OccupancyField& body_g,
                    const OccupancyField& body_m, const FieldMap& data_phi,
                    const FieldMap& data_b, const RefineConfig& cfg,
                    const ForwardMatrix& gravity, const ForwardMatrix& magnetic) {
  const double fg = gravity_misfit(nu, body_g, data_phi, cfg.kind, cfg.rho0, gravity);
  const double fm = magnetic_misfit(mu, body_m, data_b, cfg.kind, cfg.m0, magnetic);
  const double s = residual_flat(cfg.kind, body_g.values, body_m.values);
  return cfg.beta1 * fg + cfg.beta2 * fm + cfg.alpha * s;
}

namespace {

struct Surface {
  std::vector<double> values;  // nu-major
  int nu_n = 0, mu_n = 0;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * mu_n + j]; }
};

Surface evaluate_surface(const RefineConfig& cfg, const OccupancyField& body_g,
                         const OccupancyField& body_m, const FieldMap& data_phi,
                         const FieldMap& data_b, const ForwardMatrix& gravity,
                         const ForwardMatrix& magnetic, int threads) {
  check_geometry(body_g, data_phi, gravity, "grid_refine");
  check_geometry(body_m, data_b, magnetic, "grid_refine");
  const FieldMap unit_g = gravity.apply(body_g.values, cfg.rho0, threads);
  const FieldMap unit_m = magnetic.apply(body_m.values, cfg.m0, threads);
  const double s = residual_flat(cfg.kind, body_g.values, body_m.values);

  Surface surf;
  surf.nu_n = static_cast<int>(cfg.nu_grid.size());
  surf.mu_n = static_cast<int>(cfg.mu_grid.size());
  std::vector<double> fg(surf.nu_n), fm(surf.mu_n);
  const int nthreads = effective_threads(threads, false);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (int i = 0; i < surf.nu_n; ++i) {
    fg[i] = misfit_against(unit_g, cfg.nu_grid[i], data_phi, cfg.kind);
  }
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (int j = 0; j < surf.mu_n; ++j) {
    fm[j] = misfit_against(unit_m, cfg.mu_grid[j], data_b, cfg.kind);
  }
  surf.values.resize(static_cast<std::size_t>(surf.nu_n) * surf.mu_n);
  for (int i = 0; i < surf.nu_n; ++i) {
    for (int j = 0; j < surf.mu_n; ++j) {
      surf.values[static_cast<std::size_t>(i) * surf.mu_n + j] =
          cfg.beta1 * fg[i] + cfg.beta2 * fm[j] + cfg.alpha * s;
    }
  }
  return surf;
}

std::pair<int, int> argmin_of(const Surface& surf) {
  int bi = 0, bj = 0;
  double best = surf.at(0, 0);
  for (int i = 0; i < surf.nu_n; ++i) {
    for (int j = 0; j < surf.mu_n; ++j) {
      if (surf.at(i, j) < best) {  // strict: ties keep the smallest (nu, mu)
        best = surf.at(i, j);
        bi = i;
        bj = j;
      }
    }
  }
  return {bi, bj};
}

std::vector<std::pair<int, int>> strict_local_minima(const Surface& surf) {
  std::vector<std::pair<int, int>> minima;
  for (int i = 0; i < surf.nu_n; ++i) {
    for (int j = 0; j < surf.mu_n; ++j) {
      bool strict = true;
      for (int di = -1; di <= 1 && strict; ++di) {
        for (int dj = -1; dj <= 1 && strict; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || ni >= surf.nu_n || nj < 0 || nj >= surf.mu_n) continue;
          if (!(surf.at(i, j) < surf.at(ni, nj))) strict = false;
        }
      }
      if (strict) minima.emplace_back(i, j);
    }
  }
  return minima;
}

}  // namespace

RefineResult grid_refine(const RefineConfig& cfg, const OccupancyField& body_g,
                         const OccupancyField& body_m, const FieldMap& data_phi,
                         const FieldMap& data_b, const ForwardMatrix& gravity,
                         const ForwardMatrix& magnetic, int threads) {
  cfg.validate();
  const Surface surf =
      evaluate_surface(cfg, body_g, body_m, data_phi, data_b, gravity, magnetic, threads);

  RefineResult res;
  res.nu_grid = cfg.nu_grid;
  res.mu_grid = cfg.mu_grid;
  res.surface = surf.values;
  const auto [bi, bj] = argmin_of(surf);
  res.i_best = bi;
  res.j_best = bj;
  res.nu_best = cfg.nu_grid[bi];
  res.mu_best = cfg.mu_grid[bj];
  res.local_minima = strict_local_minima(surf);
  res.nu_hist.assign(cfg.nu_grid.size(), 0);
  res.mu_hist.assign(cfg.mu_grid.size(), 0);
  res.nu_hist[bi] = 1;
  res.mu_hist[bj] = 1;
  res.trial_count = 1;
  return res;
}

RefineResult refine_trials(const RefineConfig& cfg, const std::vector<RefineTrial>& trials,
                           const ModelCheckpoint* net_g, const ModelCheckpoint* net_m,
                           const OccupancyField* fixed_body_g,
                           const OccupancyField* fixed_body_m, const ForwardMatrix& gravity,
                           const ForwardMatrix& magnetic, int threads) {
  cfg.validate();
  if (trials.empty()) throw std::invalid_argument("refine_trials: no trials");
  if (cfg.body_source == BodySource::Fixed) {
    if (!fixed_body_g || !fixed_body_m) {
      throw std::invalid_argument("refine_trials: fixed body source needs both bodies");
    }
  } else if (!net_g || !net_m) {
    throw std::invalid_argument("refine_trials: per-record body source needs both networks");
  }

  RefineResult res;
  res.nu_grid = cfg.nu_grid;
  res.mu_grid = cfg.mu_grid;
  res.nu_hist.assign(cfg.nu_grid.size(), 0);
  res.mu_hist.assign(cfg.mu_grid.size(), 0);
  res.surface.assign(cfg.nu_grid.size() * cfg.mu_grid.size(), 0.0);
  res.trial_count = static_cast<long>(trials.size());

  std::vector<Surface> surfaces(trials.size());
  const int nthreads = effective_threads(threads, false);
  WorkerError err;
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
  for (std::size_t t = 0; t < trials.size(); ++t) {
    err.run([&, t] {
      OccupancyField body_g, body_m;
      if (cfg.body_source == BodySource::Fixed) {
        body_g = *fixed_body_g;
        body_m = *fixed_body_m;
      } else {
        // Network inputs are max-abs normalized, mirroring training.
        FieldMap phi_in = trials[t].phi;
        const double ps = phi_in.max_abs() > 0 ? phi_in.max_abs() : 1.0;
        for (double& v : phi_in.values) v /= ps;
        FieldMap b_in = trials[t].b;
        const double bs = b_in.max_abs() > 0 ? b_in.max_abs() : 1.0;
        for (double& v : b_in.values) v /= bs;
        body_g = threshold_body(predict(*net_g, phi_in), cfg.threshold);
        body_m = threshold_body(predict(*net_m, b_in), cfg.threshold);
      }
      surfaces[t] = evaluate_surface(cfg, body_g, body_m, trials[t].phi, trials[t].b, gravity,
                                     magnetic, /*threads=*/1);
    });
  }
  err.rethrow_if_any();

  for (std::size_t t = 0; t < trials.size(); ++t) {  // fixed-order accumulation
    const auto [bi, bj] = argmin_of(surfaces[t]);
    res.nu_hist[bi] += 1;
    res.mu_hist[bj] += 1;
    for (std::size_t k = 0; k < res.surface.size(); ++k) {
      res.surface[k] += surfaces[t].values[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(trials.size());
  for (double& v : res.surface) v *= inv;

  Surface mean;
  mean.values = res.surface;
  mean.nu_n = static_cast<int>(cfg.nu_grid.size());
  mean.mu_n = static_cast<int>(cfg.mu_grid.size());
  const auto [bi, bj] = argmin_of(mean);
  res.i_best = bi;
  res.j_best = bj;
  res.nu_best = cfg.nu_grid[bi];
  res.mu_best = cfg.mu_grid[bj];
  res.local_minima = strict_local_minima(mean);
  return res;
}

}  // namespace geoinv
