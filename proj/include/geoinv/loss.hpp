#pragma once

#include <span>
#include <vector>

#include "geoinv/forward.hpp"
#include "geoinv/grid.hpp"

namespace geoinv {

/// Dice similarity 2*sum(a*b) / sum(a^2 + b^2) for nonnegative vectors.
/// Two all-zero inputs compare as identical: dice = 1.
double dice(std::span<const double> a, std::span<const double> b);

/// d(1 - dice(a,b)) / da written into grad (same length as a).
/// Zero where both inputs are all-zero (the convention value is constant).
void dice_loss_grad(std::span<const double> a, std::span<const double> b,
                    std::span<double> grad);

/// Sum over the batch of (1 - dice(pred_k, truth_k)).
double loss_separate(const std::vector<OccupancyField>& pred,
                     const std::vector<OccupancyField>& truth);

struct LossBreakdown {
  double loss_grav = 0.0;
  double loss_mag = 0.0;
  double structural_term = 0.0;  // sum of (1 - dice(pred_g, pred_m))
  double total = 0.0;            // 0.5*loss_grav + 0.5*loss_mag + alpha*structural_term
  double alpha = 0.0;
  int batch_size = 0;
};

/// Joint structural loss over a batch; at alpha = 0 this reduces to the
/// plain averaged two-network loss.
LossBreakdown loss_joint(const std::vector<OccupancyField>& pred_g,
                         const std::vector<OccupancyField>& truth_g,
                         const std::vector<OccupancyField>& pred_m,
                         const std::vector<OccupancyField>& truth_m, double alpha);

enum class ResidualKind { D1, D2 };

/// d1: squared l2 distance, sum over sensors.
double residual_d1(const FieldMap& x, const FieldMap& y);

/// d2: 1 - dice after shifting both maps by their joint minimum so the
/// inputs are nonnegative.
double residual_d2(const FieldMap& x, const FieldMap& y);

double residual(ResidualKind kind, const FieldMap& x, const FieldMap& y);

/// Flat-vector variants for occupancy bodies; d2 applies the same
/// joint-minimum shift for safety with continuous inputs.
double residual_d1_flat(std::span<const double> x, std::span<const double> y);
double residual_d2_flat(std::span<const double> x, std::span<const double> y);
double residual_flat(ResidualKind kind, std::span<const double> x, std::span<const double> y);

}  // namespace geoinv
