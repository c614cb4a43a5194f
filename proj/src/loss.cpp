#include "geoinv/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geoinv {

namespace {

void check_same_length(std::span<const double> a, std::span<const double> b,
                       const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch");
  }
}

struct DiceSums {
  double cross = 0.0;   // sum a*b
  double square = 0.0;  // sum a^2 + b^2
};

DiceSums dice_sums(std::span<const double> a, std::span<const double> b) {
  DiceSums s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.cross += a[i] * b[i];
    s.square += a[i] * a[i] + b[i] * b[i];
  }
  return s;
}

}  // namespace

double dice(std::span<const double> a, std::span<const double> b) {
  check_same_length(a, b, "dice");
  const DiceSums s = dice_sums(a, b);
  if (s.square == 0.0) return 1.0;  // identical empties
  return 2.0 * s.cross / s.square;
}

void dice_loss_grad(std::span<const double> a, std::span<const double> b,
                    std::span<double> grad) {
  check_same_length(a, b, "dice_loss_grad");
  if (grad.size() != a.size()) {
    throw std::invalid_argument("dice_loss_grad: gradient length mismatch");
  }
  const DiceSums s = dice_sums(a, b);
  if (s.square == 0.0) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return;
  }
  // d dice/da_i = 2*(b_i*square - 2*a_i*cross) / square^2; loss flips the sign.
  const double inv_sq2 = 1.0 / (s.square * s.square);
  for (std::size_t i = 0; i < a.size(); ++i) {
    grad[i] = -2.0 * (b[i] * s.square - 2.0 * a[i] * s.cross) * inv_sq2;
  }
}

namespace {

void check_batch(const std::vector<OccupancyField>& pred,
                 const std::vector<OccupancyField>& truth, const char* what) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument(std::string(what) + ": batch size mismatch");
  }
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (pred[k].size() != truth[k].size() || pred[k].nz != truth[k].nz ||
        pred[k].nx != truth[k].nx || pred[k].ny != truth[k].ny) {
      throw std::invalid_argument(std::string(what) + ": shape mismatch in batch");
    }
  }
}

}  // namespace

double loss_separate(const std::vector<OccupancyField>& pred,
                     const std::vector<OccupancyField>& truth) {
  check_batch(pred, truth, "loss_separate");
  double total = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    total += 1.0 - dice(pred[k].values, truth[k].values);
  }
  return total;
}

LossBreakdown loss_joint(const std::vector<OccupancyField>& pred_g,
                         const std::vector<OccupancyField>& truth_g,
                         const std::vector<OccupancyField>& pred_m,
                         const std::vector<OccupancyField>& truth_m, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("loss_joint: alpha must be >= 0");
  check_batch(pred_g, truth_g, "loss_joint(gravity)");
  check_batch(pred_m, truth_m, "loss_joint(magnetic)");
  check_batch(pred_g, pred_m, "loss_joint(structural)");
  LossBreakdown out;
  out.alpha = alpha;
  out.batch_size = static_cast<int>(pred_g.size());
  for (std::size_t k = 0; k < pred_g.size(); ++k) {
    out.loss_grav += 1.0 - dice(pred_g[k].values, truth_g[k].values);
    out.loss_mag += 1.0 - dice(pred_m[k].values, truth_m[k].values);
    out.structural_term += 1.0 - dice(pred_g[k].values, pred_m[k].values);
  }
  out.total = 0.5 * out.loss_grav + 0.5 * out.loss_mag + alpha * out.structural_term;
  return out;
}

double residual_d1_flat(std::span<const double> x, std::span<const double> y) {
  check_same_length(x, y, "residual_d1");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double residual_d1(const FieldMap& x, const FieldMap& y) {
  return residual_d1_flat(x.values, y.values);
}

double residual_d2_flat(std::span<const double> x, std::span<const double> y) {
  check_same_length(x, y, "residual_d2");
  double lo = 0.0;
  for (double v : x) lo = std::min(lo, v);
  for (double v : y) lo = std::min(lo, v);
  // Shift by the joint minimum so dice sees nonnegative inputs. Maps that
  // are already nonnegative pass through unchanged (lo starts at 0).
  DiceSums s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - lo, b = y[i] - lo;
    s.cross += a * b;
    s.square += a * a + b * b;
  }
  if (s.square == 0.0) return 0.0;
  return 1.0 - 2.0 * s.cross / s.square;
}

double residual_d2(const FieldMap& x, const FieldMap& y) {
  return residual_d2_flat(x.values, y.values);
}

double residual_flat(ResidualKind kind, std::span<const double> x, std::span<const double> y) {
  return kind == ResidualKind::D1 ? residual_d1_flat(x, y) : residual_d2_flat(x, y);
}

double residual(ResidualKind kind, const FieldMap& x, const FieldMap& y) {
  return kind == ResidualKind::D1 ? residual_d1(x, y) : residual_d2(x, y);
}

}  // namespace geoinv
