#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "geoinv/dataset.hpp"
#include "geoinv/loss.hpp"
#include "geoinv/model.hpp"

namespace geoinv {

enum class BodySource { Fixed, PerRecord };

struct RefineConfig {
  double rho0 = 1.0;
  double m0 = 1.0;
  std::vector<double> nu_grid;  // ascending
  std::vector<double> mu_grid;  // ascending
  ResidualKind kind = ResidualKind::D1;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double alpha = 0.0;  // weight of the structural term S
  double threshold = 0.5;
  BodySource body_source = BodySource::Fixed;

  void validate() const;

  static std::vector<double> linspace(double lo, double hi, int n);
};

/// Residual of the gravity data against nu * rho0 * A_g[body].
double gravity_misfit(double nu, const OccupancyField& body, const FieldMap& data,
                      ResidualKind kind, double rho0, const ForwardMatrix& gravity);

/// Residual of the magnetic data against mu * m0 * A_m[body].
double magnetic_misfit(double mu, const OccupancyField& body, const FieldMap& data,
                       ResidualKind kind, double m0, const ForwardMatrix& magnetic);

/// beta1 * Phi_g(nu) + beta2 * Phi_m(mu) + alpha * S, where S compares the
/// two bodies and is constant over the amplitude grid for fixed bodies.
double joint_misfit(double nu, double mu, const OccupancyField& body_g,
                    const OccupancyField& body_m, const FieldMap& data_phi,
                    const FieldMap& data_b, const RefineConfig& cfg,
                    const ForwardMatrix& gravity, const ForwardMatrix& magnetic);

struct RefineResult {
  std::vector<double> nu_grid, mu_grid;
  std::vector<double> surface;  // nu-major: surface[i*mu_n + j]
  double nu_best = 0.0, mu_best = 0.0;
  int i_best = 0, j_best = 0;
  std::vector<std::pair<int, int>> local_minima;  // strict, 8-neighborhood
  std::vector<long> nu_hist, mu_hist;             // per-grid-point counts
  long trial_count = 0;

  double at(int i, int j) const { return surface[static_cast<std::size_t>(i) * mu_grid.size() + j]; }
};

/// Full-grid evaluation; ties break to the smallest nu, then smallest mu.
RefineResult grid_refine(const RefineConfig& cfg, const OccupancyField& body_g,
                         const OccupancyField& body_m, const FieldMap& data_phi,
                         const FieldMap& data_b, const ForwardMatrix& gravity,
                         const ForwardMatrix& magnetic, int threads = 0);

struct RefineTrial {
  FieldMap phi;
  FieldMap b;
};

/// Repeated refinement over trial records: bodies either fixed (one common
/// pair for every trial) or re-inverted per record through the networks.
/// Accumulates argmin histograms and the trial-averaged surface.
RefineResult refine_trials(const RefineConfig& cfg, const std::vector<RefineTrial>& trials,
                           const ModelCheckpoint* net_g, const ModelCheckpoint* net_m,
                           const OccupancyField* fixed_body_g,
                           const OccupancyField* fixed_body_m, const ForwardMatrix& gravity,
                           const ForwardMatrix& magnetic, int threads = 0);

}  // namespace geoinv
