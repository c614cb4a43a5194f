#include "geoinv/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "geoinv/rng.hpp"

namespace geoinv {

namespace {

struct ConvSpec {
  int in_ch = 0, out_ch = 0, k = 0;
  long w_off = 0, b_off = 0;

  long weight_count() const { return static_cast<long>(out_ch) * in_ch * k * k; }
};

/// Static layer plan derived from the architecture: encoder convs, a
/// bottleneck conv, per-level decoder conv pairs, and a 1x1 head.
struct Plan {
  std::vector<ConvSpec> enc;
  ConvSpec bottleneck;
  std::vector<ConvSpec> dec_a, dec_b;  // indexed by level, applied descending
  ConvSpec head;
  long param_count = 0;
};

Plan build_plan(const NetworkArchitecture& arch) {
  Plan plan;
  long off = 0;
  auto add = [&off](int in_ch, int out_ch, int k) {
    ConvSpec c;
    c.in_ch = in_ch;
    c.out_ch = out_ch;
    c.k = k;
    c.w_off = off;
    off += c.weight_count();
    c.b_off = off;
    off += out_ch;
    return c;
  };
  const int depth = arch.depth;
  plan.enc.reserve(depth);
  int ch = 1;
  for (int l = 0; l < depth; ++l) {
    plan.enc.push_back(add(ch, arch.channels[l], arch.kernel));
    ch = arch.channels[l];
  }
  plan.bottleneck = add(ch, ch, arch.kernel);
  plan.dec_a.resize(depth);
  plan.dec_b.resize(depth);
  for (int l = depth - 1; l >= 0; --l) {
    const int prev = (l == depth - 1) ? arch.channels[depth - 1] : arch.channels[l + 1];
    plan.dec_a[l] = add(prev, arch.channels[l], arch.kernel);
    const int cat_ch = arch.skip_connections ? 2 * arch.channels[l] : arch.channels[l];
    plan.dec_b[l] = add(cat_ch, arch.channels[l], arch.kernel);
  }
  plan.head = add(arch.channels[0], arch.out_channels, 1);
  plan.param_count = off;
  return plan;
}

void conv_forward(const Tensor3& in, Tensor3& out, const double* w, const double* b, int k) {
  const int pad = k / 2;
  for (int oc = 0; oc < out.c; ++oc) {
    const double bias = b[oc];
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x) {
        double acc = bias;
        for (int ic = 0; ic < in.c; ++ic) {
          const double* wp = w + ((static_cast<long>(oc) * in.c + ic) * k) * k;
          const double* ip = in.v.data() + static_cast<long>(ic) * in.h * in.w;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = y + ky - pad;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = x + kx - pad;
              if (ix < 0 || ix >= in.w) continue;
              acc += wp[ky * k + kx] * ip[iy * in.w + ix];
            }
          }
        }
        out.v[(static_cast<long>(oc) * out.h + y) * out.w + x] = acc;
      }
    }
  }
}

void conv_backward(const Tensor3& in, const Tensor3& d_out, Tensor3& d_in,
                   double* d_w, double* d_b, const double* w, int k) {
  const int pad = k / 2;
  std::fill(d_in.v.begin(), d_in.v.end(), 0.0);
  for (int oc = 0; oc < d_out.c; ++oc) {
    double db = 0.0;
    for (int y = 0; y < d_out.h; ++y) {
      for (int x = 0; x < d_out.w; ++x) {
        const double g = d_out.v[(static_cast<long>(oc) * d_out.h + y) * d_out.w + x];
        db += g;
        if (g == 0.0) continue;
        for (int ic = 0; ic < in.c; ++ic) {
          const long w_base = ((static_cast<long>(oc) * in.c + ic) * k) * k;
          const double* ip = in.v.data() + static_cast<long>(ic) * in.h * in.w;
          double* dip = d_in.v.data() + static_cast<long>(ic) * in.h * in.w;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = y + ky - pad;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = x + kx - pad;
              if (ix < 0 || ix >= in.w) continue;
              d_w[w_base + ky * k + kx] += g * ip[iy * in.w + ix];
              dip[iy * in.w + ix] += g * w[w_base + ky * k + kx];
            }
          }
        }
      }
    }
    d_b[oc] += db;
  }
}

void relu_forward(const Tensor3& pre, Tensor3& out) {
  for (long i = 0; i < pre.size(); ++i) out.v[i] = pre.v[i] > 0.0 ? pre.v[i] : 0.0;
}

void relu_backward(const Tensor3& pre, Tensor3& d) {
  for (long i = 0; i < pre.size(); ++i) {
    if (pre.v[i] <= 0.0) d.v[i] = 0.0;
  }
}

void maxpool_forward(const Tensor3& in, Tensor3& out, std::vector<long>& src) {
  src.assign(out.size(), 0);
  for (int c = 0; c < in.c; ++c) {
    const double* ip = in.v.data() + static_cast<long>(c) * in.h * in.w;
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x) {
        long best = static_cast<long>(2 * y) * in.w + 2 * x;
        double best_v = ip[best];
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const long idx = static_cast<long>(2 * y + dy) * in.w + (2 * x + dx);
            if (ip[idx] > best_v) {  // first max wins ties
              best_v = ip[idx];
              best = idx;
            }
          }
        }
        const long o = (static_cast<long>(c) * out.h + y) * out.w + x;
        out.v[o] = best_v;
        src[o] = static_cast<long>(c) * in.h * in.w + best;
      }
    }
  }
}

void maxpool_backward(const std::vector<long>& src, const Tensor3& d_out, Tensor3& d_in) {
  std::fill(d_in.v.begin(), d_in.v.end(), 0.0);
  for (long o = 0; o < d_out.size(); ++o) d_in.v[src[o]] += d_out.v[o];
}

void upsample_forward(const Tensor3& in, Tensor3& out) {
  for (int c = 0; c < in.c; ++c) {
    const double* ip = in.v.data() + static_cast<long>(c) * in.h * in.w;
    double* op = out.v.data() + static_cast<long>(c) * out.h * out.w;
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x) {
        op[static_cast<long>(y) * out.w + x] = ip[static_cast<long>(y / 2) * in.w + x / 2];
      }
    }
  }
}

void upsample_backward(const Tensor3& d_out, Tensor3& d_in) {
  std::fill(d_in.v.begin(), d_in.v.end(), 0.0);
  for (int c = 0; c < d_in.c; ++c) {
    const double* gp = d_out.v.data() + static_cast<long>(c) * d_out.h * d_out.w;
    double* dp = d_in.v.data() + static_cast<long>(c) * d_in.h * d_in.w;
    for (int y = 0; y < d_out.h; ++y) {
      for (int x = 0; x < d_out.w; ++x) {
        dp[static_cast<long>(y / 2) * d_in.w + x / 2] += gp[static_cast<long>(y) * d_out.w + x];
      }
    }
  }
}

void check_finite(const Tensor3& t, const char* layer) {
  for (double v : t.v) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string("non-finite activation in layer '") + layer + "'");
    }
  }
}

}  // namespace

NetworkArchitecture NetworkArchitecture::paper_scale() { return NetworkArchitecture{}; }

NetworkArchitecture NetworkArchitecture::desk_scale() {
  NetworkArchitecture a;
  a.in_h = 8;
  a.in_w = 8;
  a.out_channels = 4;
  a.depth = 2;
  a.channels = {8, 16};
  return a;
}

void NetworkArchitecture::validate() const {
  if (in_h <= 0 || in_w <= 0 || out_channels <= 0) {
    throw std::invalid_argument("NetworkArchitecture: dims must be positive");
  }
  if (depth < 1 || static_cast<int>(channels.size()) != depth) {
    throw std::invalid_argument("NetworkArchitecture: need one channel count per level");
  }
  for (int c : channels) {
    if (c <= 0) throw std::invalid_argument("NetworkArchitecture: channels must be positive");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    throw std::invalid_argument("NetworkArchitecture: kernel must be odd");
  }
  const int div = 1 << depth;
  if (in_h % div != 0 || in_w % div != 0) {
    throw std::invalid_argument("NetworkArchitecture: spatial dims must be divisible by 2^depth");
  }
}

long NetworkArchitecture::param_count() const {
  validate();
  return build_plan(*this).param_count;
}

std::string NetworkArchitecture::descriptor() const {
  nlohmann::json j;
  j["in_h"] = in_h;
  j["in_w"] = in_w;
  j["out_channels"] = out_channels;
  j["depth"] = depth;
  j["channels"] = channels;
  j["kernel"] = kernel;
  j["skip_connections"] = skip_connections;
  return j.dump();
}

NetworkArchitecture NetworkArchitecture::from_descriptor(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  NetworkArchitecture a;
  a.in_h = j.at("in_h").get<int>();
  a.in_w = j.at("in_w").get<int>();
  a.out_channels = j.at("out_channels").get<int>();
  a.depth = j.at("depth").get<int>();
  a.channels = j.at("channels").get<std::vector<int>>();
  a.kernel = j.at("kernel").get<int>();
  a.skip_connections = j.at("skip_connections").get<bool>();
  a.validate();
  return a;
}

std::uint64_t NetworkArchitecture::hash() const {
  // FNV-1a over the canonical descriptor.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : descriptor()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

ModelCheckpoint init_model(const NetworkArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  const Plan plan = build_plan(arch);
  ModelCheckpoint ckpt;
  ckpt.arch = arch;
  ckpt.seed = seed;
  ckpt.params.assign(plan.param_count, 0.0);
  CounterRng rng(hash_seed(seed, 0x6d6f64656cULL));
  auto fill = [&](const ConvSpec& c) {
    const double limit = std::sqrt(6.0 / (c.in_ch * c.k * c.k));
    for (long i = 0; i < c.weight_count(); ++i) {
      ckpt.params[c.w_off + i] = rng.uniform(-limit, limit);
    }
    // small random biases keep pre-activations away from the relu kink,
    // which central-difference gradient checks rely on
    for (int i = 0; i < c.out_ch; ++i) {
      ckpt.params[c.b_off + i] = rng.uniform(-0.05, 0.05);
    }
  };
  for (const auto& c : plan.enc) fill(c);
  fill(plan.bottleneck);
  for (int l = arch.depth - 1; l >= 0; --l) {
    fill(plan.dec_a[l]);
    fill(plan.dec_b[l]);
  }
  fill(plan.head);
  return ckpt;
}

Tensor3 Tensor3::zeros(int c, int h, int w) {
  Tensor3 t;
  t.c = c;
  t.h = h;
  t.w = w;
  t.v.assign(static_cast<std::size_t>(c) * h * w, 0.0);
  return t;
}

void model_forward(const NetworkArchitecture& arch, std::span<const double> params,
                   std::span<const double> input, ForwardCache& cache) {
  arch.validate();
  const Plan plan = build_plan(arch);
  if (static_cast<long>(params.size()) != plan.param_count) {
    throw std::invalid_argument("model_forward: parameter vector size mismatch");
  }
  if (static_cast<long>(input.size()) != static_cast<long>(arch.in_h) * arch.in_w) {
    throw std::invalid_argument("model_forward: input size mismatch");
  }
  const int depth = arch.depth;
  const double* p = params.data();

  cache.input = Tensor3::zeros(1, arch.in_h, arch.in_w);
  std::copy(input.begin(), input.end(), cache.input.v.begin());
  check_finite(cache.input, "input");

  cache.enc_in.resize(depth);
  cache.enc_pre.resize(depth);
  cache.skip.resize(depth);
  cache.pooled.resize(depth);
  cache.pool_src.resize(depth);

  int h = arch.in_h, w = arch.in_w;
  for (int l = 0; l < depth; ++l) {
    cache.enc_in[l] = (l == 0) ? cache.input : cache.pooled[l - 1];
    const ConvSpec& c = plan.enc[l];
    cache.enc_pre[l] = Tensor3::zeros(c.out_ch, h, w);
    conv_forward(cache.enc_in[l], cache.enc_pre[l], p + c.w_off, p + c.b_off, c.k);
    check_finite(cache.enc_pre[l], ("enc" + std::to_string(l)).c_str());
    cache.skip[l] = Tensor3::zeros(c.out_ch, h, w);
    relu_forward(cache.enc_pre[l], cache.skip[l]);
    h /= 2;
    w /= 2;
    cache.pooled[l] = Tensor3::zeros(c.out_ch, h, w);
    maxpool_forward(cache.skip[l], cache.pooled[l], cache.pool_src[l]);
  }

  {
    const ConvSpec& c = plan.bottleneck;
    cache.bott_pre = Tensor3::zeros(c.out_ch, h, w);
    conv_forward(cache.pooled[depth - 1], cache.bott_pre, p + c.w_off, p + c.b_off, c.k);
    check_finite(cache.bott_pre, "bottleneck");
    cache.bott_out = Tensor3::zeros(c.out_ch, h, w);
    relu_forward(cache.bott_pre, cache.bott_out);
  }

  cache.up.resize(depth);
  cache.a_pre.resize(depth);
  cache.a_out.resize(depth);
  cache.cat.resize(depth);
  cache.b_pre.resize(depth);
  cache.b_out.resize(depth);

  for (int l = depth - 1; l >= 0; --l) {
    const Tensor3& src = (l == depth - 1) ? cache.bott_out : cache.b_out[l + 1];
    h *= 2;
    w *= 2;
    cache.up[l] = Tensor3::zeros(src.c, h, w);
    upsample_forward(src, cache.up[l]);

    const ConvSpec& ca = plan.dec_a[l];
    cache.a_pre[l] = Tensor3::zeros(ca.out_ch, h, w);
    conv_forward(cache.up[l], cache.a_pre[l], p + ca.w_off, p + ca.b_off, ca.k);
    check_finite(cache.a_pre[l], ("dec_a" + std::to_string(l)).c_str());
    cache.a_out[l] = Tensor3::zeros(ca.out_ch, h, w);
    relu_forward(cache.a_pre[l], cache.a_out[l]);

    if (arch.skip_connections) {
      cache.cat[l] = Tensor3::zeros(2 * ca.out_ch, h, w);
      std::copy(cache.a_out[l].v.begin(), cache.a_out[l].v.end(), cache.cat[l].v.begin());
      std::copy(cache.skip[l].v.begin(), cache.skip[l].v.end(),
                cache.cat[l].v.begin() + cache.a_out[l].size());
    } else {
      cache.cat[l] = cache.a_out[l];
    }

    const ConvSpec& cb = plan.dec_b[l];
    cache.b_pre[l] = Tensor3::zeros(cb.out_ch, h, w);
    conv_forward(cache.cat[l], cache.b_pre[l], p + cb.w_off, p + cb.b_off, cb.k);
    check_finite(cache.b_pre[l], ("dec_b" + std::to_string(l)).c_str());
    cache.b_out[l] = Tensor3::zeros(cb.out_ch, h, w);
    relu_forward(cache.b_pre[l], cache.b_out[l]);
  }

  {
    const ConvSpec& c = plan.head;
    cache.logits = Tensor3::zeros(c.out_ch, arch.in_h, arch.in_w);
    conv_forward(cache.b_out[0], cache.logits, p + c.w_off, p + c.b_off, c.k);
    check_finite(cache.logits, "head");
    cache.output = Tensor3::zeros(c.out_ch, arch.in_h, arch.in_w);
    for (long i = 0; i < cache.logits.size(); ++i) {
      cache.output.v[i] = 1.0 / (1.0 + std::exp(-cache.logits.v[i]));
    }
  }
}

std::vector<double> model_backward(const NetworkArchitecture& arch,
                                   std::span<const double> params,
                                   const ForwardCache& cache,
                                   std::span<const double> d_output) {
  const Plan plan = build_plan(arch);
  if (static_cast<long>(d_output.size()) != cache.output.size()) {
    throw std::invalid_argument("model_backward: output gradient size mismatch");
  }
  const int depth = arch.depth;
  const double* p = params.data();
  std::vector<double> grad(plan.param_count, 0.0);

  // logistic head
  Tensor3 d_logits = Tensor3::zeros(cache.logits.c, cache.logits.h, cache.logits.w);
  for (long i = 0; i < d_logits.size(); ++i) {
    const double s = cache.output.v[i];
    d_logits.v[i] = d_output[i] * s * (1.0 - s);
  }
  Tensor3 d_bout = Tensor3::zeros(cache.b_out[0].c, cache.b_out[0].h, cache.b_out[0].w);
  conv_backward(cache.b_out[0], d_logits, d_bout, grad.data() + plan.head.w_off,
                grad.data() + plan.head.b_off, p + plan.head.w_off, plan.head.k);

  // decoder, unwound in reverse (ascending level order); skip gradients are
  // collected for the encoder sweep
  std::vector<Tensor3> d_skip(depth);
  Tensor3 d_bott;
  for (int l = 0; l < depth; ++l) {
    relu_backward(cache.b_pre[l], d_bout);
    Tensor3 d_cat = Tensor3::zeros(cache.cat[l].c, cache.cat[l].h, cache.cat[l].w);
    conv_backward(cache.cat[l], d_bout, d_cat, grad.data() + plan.dec_b[l].w_off,
                  grad.data() + plan.dec_b[l].b_off, p + plan.dec_b[l].w_off,
                  plan.dec_b[l].k);

    Tensor3 d_aout = Tensor3::zeros(cache.a_out[l].c, cache.a_out[l].h, cache.a_out[l].w);
    std::copy(d_cat.v.begin(), d_cat.v.begin() + d_aout.size(), d_aout.v.begin());
    if (arch.skip_connections) {
      d_skip[l] = Tensor3::zeros(cache.skip[l].c, cache.skip[l].h, cache.skip[l].w);
      std::copy(d_cat.v.begin() + d_aout.size(), d_cat.v.end(), d_skip[l].v.begin());
    }

    relu_backward(cache.a_pre[l], d_aout);
    Tensor3 d_up = Tensor3::zeros(cache.up[l].c, cache.up[l].h, cache.up[l].w);
    conv_backward(cache.up[l], d_aout, d_up, grad.data() + plan.dec_a[l].w_off,
                  grad.data() + plan.dec_a[l].b_off, p + plan.dec_a[l].w_off,
                  plan.dec_a[l].k);

    const Tensor3& src = (l == depth - 1) ? cache.bott_out : cache.b_out[l + 1];
    Tensor3 d_src = Tensor3::zeros(src.c, src.h, src.w);
    upsample_backward(d_up, d_src);
    if (l == depth - 1) {
      d_bott = std::move(d_src);
    } else {
      d_bout = std::move(d_src);
    }
  }

  // bottleneck
  relu_backward(cache.bott_pre, d_bott);
  Tensor3 d_pooled = Tensor3::zeros(cache.pooled[depth - 1].c, cache.pooled[depth - 1].h,
                                    cache.pooled[depth - 1].w);
  conv_backward(cache.pooled[depth - 1], d_bott, d_pooled,
                grad.data() + plan.bottleneck.w_off, grad.data() + plan.bottleneck.b_off,
                p + plan.bottleneck.w_off, plan.bottleneck.k);

  // encoder, deepest level first
  for (int l = depth - 1; l >= 0; --l) {
    Tensor3 d_skip_total = Tensor3::zeros(cache.skip[l].c, cache.skip[l].h, cache.skip[l].w);
    maxpool_backward(cache.pool_src[l], d_pooled, d_skip_total);
    if (arch.skip_connections) {
      for (long i = 0; i < d_skip_total.size(); ++i) d_skip_total.v[i] += d_skip[l].v[i];
    }
    relu_backward(cache.enc_pre[l], d_skip_total);
    Tensor3 d_in = Tensor3::zeros(cache.enc_in[l].c, cache.enc_in[l].h, cache.enc_in[l].w);
    conv_backward(cache.enc_in[l], d_skip_total, d_in, grad.data() + plan.enc[l].w_off,
                  grad.data() + plan.enc[l].b_off, p + plan.enc[l].w_off, plan.enc[l].k);
    d_pooled = std::move(d_in);
  }
  return grad;
}

OccupancyField predict(const ModelCheckpoint& ckpt, const FieldMap& input) {
  if (input.plane.mx != ckpt.arch.in_h || input.plane.my != ckpt.arch.in_w) {
    throw std::invalid_argument("predict: field map shape does not match architecture");
  }
  ForwardCache cache;
  model_forward(ckpt.arch, ckpt.params, input.values, cache);
  OccupancyField out = OccupancyField::zeros(ckpt.arch.out_channels, ckpt.arch.in_h,
                                             ckpt.arch.in_w, /*binary=*/false);
  out.values = cache.output.v;
  return out;
}

OccupancyField threshold_body(const OccupancyField& pred, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::invalid_argument("threshold_body: tau must lie in (0,1)");
  }
  OccupancyField out = pred;
  out.binary = true;
  for (double& v : out.values) v = (v >= tau) ? 1.0 : 0.0;
  return out;
}

namespace {

constexpr char kCkptMagic[8] = {'G', 'I', 'N', 'V', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

}  // namespace

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(kCkptMagic, sizeof(kCkptMagic));
  const std::uint32_t version = kCkptVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t arch_hash = ckpt.arch.hash();
  out.write(reinterpret_cast<const char*>(&arch_hash), sizeof(arch_hash));
  const std::string desc = ckpt.arch.descriptor();
  const std::uint32_t desc_len = static_cast<std::uint32_t>(desc.size());
  out.write(reinterpret_cast<const char*>(&desc_len), sizeof(desc_len));
  out.write(desc.data(), desc_len);
  out.write(reinterpret_cast<const char*>(&ckpt.seed), sizeof(ckpt.seed));
  out.write(reinterpret_cast<const char*>(&ckpt.step_count), sizeof(ckpt.step_count));
  const std::uint64_t count = ckpt.params.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  std::vector<float> params32(ckpt.params.begin(), ckpt.params.end());
  out.write(reinterpret_cast<const char*>(params32.data()),
            static_cast<std::streamsize>(params32.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  auto read_exact = [&](void* data, std::size_t n, const char* what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      throw std::runtime_error(std::string("truncated checkpoint while reading ") + what +
                               ": " + path.string());
    }
  };
  char magic[8];
  read_exact(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("bad checkpoint magic: " + path.string());
  }
  std::uint32_t version = 0;
  read_exact(&version, sizeof(version), "version");
  if (version != kCkptVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t arch_hash = 0;
  read_exact(&arch_hash, sizeof(arch_hash), "architecture hash");
  std::uint32_t desc_len = 0;
  read_exact(&desc_len, sizeof(desc_len), "descriptor length");
  if (desc_len > 1 << 20) throw std::runtime_error("implausible descriptor length");
  std::string desc(desc_len, '\0');
  read_exact(desc.data(), desc_len, "descriptor");
  ModelCheckpoint ckpt;
  ckpt.arch = NetworkArchitecture::from_descriptor(desc);
  if (ckpt.arch.hash() != arch_hash) {
    throw std::runtime_error("checkpoint architecture hash mismatch: " + path.string());
  }
  read_exact(&ckpt.seed, sizeof(ckpt.seed), "seed");
  read_exact(&ckpt.step_count, sizeof(ckpt.step_count), "step count");
  std::uint64_t count = 0;
  read_exact(&count, sizeof(count), "parameter count");
  if (count != static_cast<std::uint64_t>(ckpt.arch.param_count())) {
    throw std::runtime_error("checkpoint parameter count does not match architecture");
  }
  std::vector<float> params32(count);
  read_exact(params32.data(), count * sizeof(float), "parameters");
  ckpt.params.assign(params32.begin(), params32.end());
  for (double v : ckpt.params) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite checkpoint parameter");
  }
  return ckpt;
}

}  // namespace geoinv
