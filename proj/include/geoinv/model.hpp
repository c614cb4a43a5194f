#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "geoinv/forward.hpp"
#include "geoinv/grid.hpp"

namespace geoinv {

/// Encoder-decoder ("U-Net" type) configuration. The input is a single-channel
/// field map, the output a stack of depth slices: one channel per voxel layer,
/// squashed into (0,1) by a logistic head.
struct NetworkArchitecture {
  int in_h = 32, in_w = 32;        // sensor grid (mx, my)
  int out_channels = 16;           // nz
  int depth = 3;                   // down/up levels
  std::vector<int> channels = {16, 32, 64};  // one entry per level
  int kernel = 3;
  bool skip_connections = true;

  static NetworkArchitecture paper_scale();
  static NetworkArchitecture desk_scale();

  /// Throws on indivisible spatial dims or malformed channel lists.
  void validate() const;
  long param_count() const;
  std::string descriptor() const;
  static NetworkArchitecture from_descriptor(const std::string& text);
  std::uint64_t hash() const;
};

struct ModelCheckpoint {
  NetworkArchitecture arch;
  std::vector<double> params;
  std::uint64_t seed = 0;
  std::uint64_t step_count = 0;
};

/// Fan-in-scaled uniform initialization, reproducible from the seed.
ModelCheckpoint init_model(const NetworkArchitecture& arch, std::uint64_t seed);

/// Per-record activation store for the backward pass.
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  static Tensor3 zeros(int c, int h, int w);
  long size() const { return static_cast<long>(c) * h * w; }
};

struct ForwardCache {
  Tensor3 input;
  std::vector<Tensor3> enc_in, enc_pre, skip, pooled;
  std::vector<std::vector<long>> pool_src;
  Tensor3 bott_pre, bott_out;
  std::vector<Tensor3> up, a_pre, a_out, cat, b_pre, b_out;
  Tensor3 logits;
  Tensor3 output;
};

/// Runs the network on a flat 1 x in_h x in_w input; activations stay in the
/// cache for backward. Throws on non-finite intermediates, naming the layer.
void model_forward(const NetworkArchitecture& arch, std::span<const double> params,
                   std::span<const double> input, ForwardCache& cache);

/// Reverse-mode gradient of the loss with respect to the parameters given
/// dLoss/dOutput; independent of any particular loss.
std::vector<double> model_backward(const NetworkArchitecture& arch,
                                   std::span<const double> params,
                                   const ForwardCache& cache,
                                   std::span<const double> d_output);

/// Continuous occupancy prediction in (0,1); pure function of (params, input).
OccupancyField predict(const ModelCheckpoint& ckpt, const FieldMap& input);

/// Hard thresholding at tau in (0,1).
OccupancyField threshold_body(const OccupancyField& pred, double tau);

/// Checkpoint file: magic "GINVCKPT", version, architecture descriptor,
/// seed/step counters, then little-endian float32 parameters.
void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace geoinv
