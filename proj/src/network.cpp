#include "evrn/network.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "evrn/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace evrn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// Unrolls one batch element (C,H,W) into a (C*9, H*W) patch matrix for the
// 3x3, stride-1, zero-padding-1 convolution. Row (c,ky,kx) holds the input
// plane shifted by (ky-1, kx-1).
void im2col(const double* in, int channels, int h, int w, double* cols)
{
  const size_t plane = static_cast<size_t>(h) * w;
  size_t row = 0;
  for (int c = 0; c < channels; ++c) {
    const double* src = in + c * plane;
    for (int ky = 0; ky < 3; ++ky) {
      const int dy = ky - 1;
      for (int kx = 0; kx < 3; ++kx, ++row) {
        const int dx = kx - 1;
        double* dst = cols + row * plane;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          double* drow = dst + static_cast<size_t>(y) * w;
          if (sy < 0 || sy >= h) {
            std::fill(drow, drow + w, 0.0);
            continue;
          }
          const double* srow = src + static_cast<size_t>(sy) * w;
          if (dx < 0) {
            drow[0] = 0.0;
            std::copy(srow, srow + w - 1, drow + 1);
          } else if (dx == 0) {
            std::copy(srow, srow + w, drow);
          } else {
            std::copy(srow + 1, srow + w, drow);
            drow[w - 1] = 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds a patch-matrix gradient back onto the
// (C,H,W) input gradient, dropping contributions that fell on the padding.
void col2im_add(const double* cols, int channels, int h, int w, double* out)
{
  const size_t plane = static_cast<size_t>(h) * w;
  size_t row = 0;
  for (int c = 0; c < channels; ++c) {
    double* dst = out + c * plane;
    for (int ky = 0; ky < 3; ++ky) {
      const int dy = ky - 1;
      for (int kx = 0; kx < 3; ++kx, ++row) {
        const int dx = kx - 1;
        const double* src = cols + row * plane;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const double* srow = src + static_cast<size_t>(y) * w;
          double* drow = dst + static_cast<size_t>(sy) * w;
          if (dx < 0) {
            for (int x = 1; x < w; ++x) drow[x - 1] += srow[x];
          } else if (dx == 0) {
            for (int x = 0; x < w; ++x) drow[x] += srow[x];
          } else {
            for (int x = 0; x + 1 < w; ++x) drow[x + 1] += srow[x];
          }
        }
      }
    }
  }
}

}  // namespace

namespace detail {

void conv_forward(const Tensor4& x, const ConvParams& p, Tensor4& y,
                  AlignedVec& workspace)
{
  if (x.channels != p.in_ch) {
    throw std::invalid_argument("conv2d: input has " + std::to_string(x.channels) +
                                " channels, layer expects " + std::to_string(p.in_ch));
  }
  const int n = x.height * x.width;
  const int k = p.in_ch * 9;
  y = Tensor4(x.batch, p.out_ch, x.height, x.width);
  workspace.resize(static_cast<size_t>(k) * n);
  ConstMapMat wm(p.weights.data(), p.out_ch, k);
  for (int b = 0; b < x.batch; ++b) {
    im2col(x.at(b, 0), x.channels, x.height, x.width, workspace.data());
    ConstMapMat cols(workspace.data(), k, n);
    MapMat ym(y.at(b, 0), p.out_ch, n);
    ym.noalias() = wm * cols;
    for (int c = 0; c < p.out_ch; ++c) {
      ym.row(c).array() += p.bias[c];
    }
  }
}

void conv_backward(const Tensor4& x_cached, const ConvParams& p, const Tensor4& gy,
                   ConvParams& gp, Tensor4* gx, AlignedVec& workspace,
                   AlignedVec& workspace2)
{
  const int n = x_cached.height * x_cached.width;
  const int k = p.in_ch * 9;
  workspace.resize(static_cast<size_t>(k) * n);
  ConstMapMat wm(p.weights.data(), p.out_ch, k);
  MapMat gwm(gp.weights.data(), p.out_ch, k);
  if (gx) {
    *gx = Tensor4(x_cached.batch, p.in_ch, x_cached.height, x_cached.width, 0.0);
    workspace2.resize(static_cast<size_t>(k) * n);
  }
  for (int b = 0; b < x_cached.batch; ++b) {
    im2col(x_cached.at(b, 0), x_cached.channels, x_cached.height, x_cached.width,
           workspace.data());
    ConstMapMat cols(workspace.data(), k, n);
    ConstMapMat gym(gy.at(b, 0), p.out_ch, n);
    gwm.noalias() += gym * cols.transpose();
    for (int c = 0; c < p.out_ch; ++c) {
      gp.bias[c] += gym.row(c).sum();
    }
    if (gx) {
      MapMat colgrad(workspace2.data(), k, n);
      colgrad.noalias() = wm.transpose() * gym;
      col2im_add(workspace2.data(), p.in_ch, x_cached.height, x_cached.width, gx->at(b, 0));
    }
  }
}

void bn_forward(const Tensor4& x, BatchNormParams& p, Mode mode, Tensor4& y, BnCache& cache)
{
  if (x.channels != p.channels()) {
    throw std::invalid_argument("batchnorm: channel mismatch");
  }
  const size_t plane = x.plane();
  const double n = static_cast<double>(x.batch) * plane;
  y = Tensor4(x.batch, x.channels, x.height, x.width);
  cache.xhat = Tensor4(x.batch, x.channels, x.height, x.width);
  cache.inv_std.assign(x.channels, 0.0);
  cache.mode = mode;
  cache.n = n;

  for (int c = 0; c < x.channels; ++c) {
    double mean = 0.0;
    double inv = 0.0;
    if (mode == Mode::kTrain) {
      double sum = 0.0;
      for (int b = 0; b < x.batch; ++b) {
        const double* src = x.at(b, c);
        for (size_t i = 0; i < plane; ++i) sum += src[i];
      }
      mean = sum / n;
      double sq = 0.0;
      for (int b = 0; b < x.batch; ++b) {
        const double* src = x.at(b, c);
        for (size_t i = 0; i < plane; ++i) {
          const double d = src[i] - mean;
          sq += d * d;
        }
      }
      const double var = sq / n;
      inv = 1.0 / std::sqrt(var + BatchNormParams::kEpsilon);
      const double unbiased = n > 1.0 ? var * n / (n - 1.0) : var;
      p.running_mean[c] =
          (1.0 - BatchNormParams::kMomentum) * p.running_mean[c] +
          BatchNormParams::kMomentum * mean;
      p.running_var[c] =
          (1.0 - BatchNormParams::kMomentum) * p.running_var[c] +
          BatchNormParams::kMomentum * unbiased;
    } else {
      mean = p.running_mean[c];
      inv = 1.0 / std::sqrt(p.running_var[c] + BatchNormParams::kEpsilon);
    }
    cache.inv_std[c] = inv;
    const double g = p.gamma[c], bta = p.beta[c];
    for (int b = 0; b < x.batch; ++b) {
      const double* src = x.at(b, c);
      double* xh = cache.xhat.at(b, c);
      double* dst = y.at(b, c);
      for (size_t i = 0; i < plane; ++i) {
        xh[i] = (src[i] - mean) * inv;
        dst[i] = g * xh[i] + bta;
      }
    }
  }
}

void bn_backward(const BnCache& cache, const BatchNormParams& p, const Tensor4& gy,
                 Tensor4& gx, BatchNormParams& gp)
{
  const size_t plane = gy.plane();
  gx = Tensor4(gy.batch, gy.channels, gy.height, gy.width);
  for (int c = 0; c < gy.channels; ++c) {
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (int b = 0; b < gy.batch; ++b) {
      const double* g = gy.at(b, c);
      const double* xh = cache.xhat.at(b, c);
      for (size_t i = 0; i < plane; ++i) {
        sum_gy += g[i];
        sum_gy_xhat += g[i] * xh[i];
      }
    }
    gp.beta[c] += sum_gy;
    gp.gamma[c] += sum_gy_xhat;
    const double scale = p.gamma[c] * cache.inv_std[c];
    if (cache.mode == Mode::kTrain) {
      const double k1 = sum_gy / cache.n;
      const double k2 = sum_gy_xhat / cache.n;
      for (int b = 0; b < gy.batch; ++b) {
        const double* g = gy.at(b, c);
        const double* xh = cache.xhat.at(b, c);
        double* d = gx.at(b, c);
        for (size_t i = 0; i < plane; ++i) {
          d[i] = scale * (g[i] - k1 - xh[i] * k2);
        }
      }
    } else {
      for (int b = 0; b < gy.batch; ++b) {
        const double* g = gy.at(b, c);
        double* d = gx.at(b, c);
        for (size_t i = 0; i < plane; ++i) {
          d[i] = scale * g[i];
        }
      }
    }
  }
}

void lrelu_forward(const Tensor4& x, Tensor4& y)
{
  y = Tensor4(x.batch, x.channels, x.height, x.width);
  for (size_t i = 0; i < x.size(); ++i) {
    const double v = x.data[i];
    y.data[i] = v >= 0.0 ? v : kLeakySlope * v;
  }
}

void lrelu_backward(const Tensor4& x_cached, const Tensor4& gy, Tensor4& gx)
{
  gx = Tensor4(gy.batch, gy.channels, gy.height, gy.width);
  for (size_t i = 0; i < gy.size(); ++i) {
    gx.data[i] = gy.data[i] * (x_cached.data[i] >= 0.0 ? 1.0 : kLeakySlope);
  }
}

}  // namespace detail

using detail::BnCache;
using detail::bn_backward;
using detail::bn_forward;
using detail::conv_backward;
using detail::conv_forward;
using detail::lrelu_backward;
using detail::lrelu_forward;

ModelParams ModelParams::initialized(uint64_t seed, int in_channels, int hidden, int n_blocks)
{
  std::mt19937_64 rng(seed);
  // Portable uniform in [0,1): the distribution adapters are not pinned by
  // the standard, the raw generator sequence is.
  auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto he_fill = [&uniform](AlignedVec& w, int fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (double& v : w) v = (2.0 * uniform() - 1.0) * limit;
  };

  ModelParams p;
  p.head = ConvParams(in_channels, hidden);
  he_fill(p.head.weights, in_channels * 9);
  p.blocks.resize(static_cast<size_t>(n_blocks));
  for (BlockParams& b : p.blocks) {
    b.conv1 = ConvParams(hidden, hidden);
    he_fill(b.conv1.weights, hidden * 9);
    b.bn1 = BatchNormParams(hidden);
    b.conv2 = ConvParams(hidden, hidden);
    he_fill(b.conv2.weights, hidden * 9);
    b.bn2 = BatchNormParams(hidden);
  }
  p.tail = ConvParams(hidden, 1);  // stays zero: identity initialization
  return p;
}

size_t ModelParams::parameter_count() const
{
  size_t n = head.weights.size() + head.bias.size() + tail.weights.size() + tail.bias.size();
  for (const BlockParams& b : blocks) {
    n += b.conv1.weights.size() + b.conv1.bias.size() + b.bn1.gamma.size() +
         b.bn1.beta.size();
    n += b.conv2.weights.size() + b.conv2.bias.size() + b.bn2.gamma.size() +
         b.bn2.beta.size();
  }
  return n;
}

std::vector<ParamView> trainable_views(ModelParams& p)
{
  std::vector<ParamView> views;
  auto add = [&views](const std::string& name, auto& v) {
    views.push_back({name, v.data(), v.size()});
  };
  add("head.w", p.head.weights);
  add("head.b", p.head.bias);
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    const std::string b = "block" + std::to_string(i) + ".";
    add(b + "conv1.w", p.blocks[i].conv1.weights);
    add(b + "conv1.b", p.blocks[i].conv1.bias);
    add(b + "bn1.gamma", p.blocks[i].bn1.gamma);
    add(b + "bn1.beta", p.blocks[i].bn1.beta);
    add(b + "conv2.w", p.blocks[i].conv2.weights);
    add(b + "conv2.b", p.blocks[i].conv2.bias);
    add(b + "bn2.gamma", p.blocks[i].bn2.gamma);
    add(b + "bn2.beta", p.blocks[i].bn2.beta);
  }
  add("tail.w", p.tail.weights);
  add("tail.b", p.tail.bias);
  return views;
}

std::vector<ParamView> running_stat_views(ModelParams& p)
{
  std::vector<ParamView> views;
  auto add = [&views](const std::string& name, std::vector<double>& v) {
    views.push_back({name, v.data(), v.size()});
  };
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    const std::string b = "block" + std::to_string(i) + ".";
    add(b + "bn1.running_mean", p.blocks[i].bn1.running_mean);
    add(b + "bn1.running_var", p.blocks[i].bn1.running_var);
    add(b + "bn2.running_mean", p.blocks[i].bn2.running_mean);
    add(b + "bn2.running_var", p.blocks[i].bn2.running_var);
  }
  return views;
}

ModelParams zeros_like(const ModelParams& p)
{
  ModelParams z;
  z.head = ConvParams(p.head.in_ch, p.head.out_ch);
  z.blocks.resize(p.blocks.size());
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    const int hidden = p.blocks[i].conv1.in_ch;
    z.blocks[i].conv1 = ConvParams(hidden, hidden);
    z.blocks[i].bn1 = BatchNormParams(hidden);
    z.blocks[i].conv2 = ConvParams(hidden, hidden);
    z.blocks[i].bn2 = BatchNormParams(hidden);
    for (BatchNormParams* bn : {&z.blocks[i].bn1, &z.blocks[i].bn2}) {
      std::fill(bn->gamma.begin(), bn->gamma.end(), 0.0);
      std::fill(bn->running_var.begin(), bn->running_var.end(), 0.0);
    }
  }
  z.tail = ConvParams(p.tail.in_ch, p.tail.out_ch);
  return z;
}

namespace {

Tensor4 to_batch1(const Tensor3& t)
{
  Tensor4 out(1, t.channels, t.height, t.width);
  std::copy(t.data.begin(), t.data.end(), out.data.begin());
  return out;
}

Tensor3 from_batch1(const Tensor4& t)
{
  Tensor3 out(t.channels, t.height, t.width);
  std::copy(t.data.begin(), t.data.end(), out.data.begin());
  return out;
}

}  // namespace

Tensor3 conv2d(const Tensor3& input, const ConvParams& layer)
{
  Tensor4 y;
  AlignedVec ws;
  conv_forward(to_batch1(input), layer, y, ws);
  return from_batch1(y);
}

Tensor3 leaky_relu(const Tensor3& x, double slope)
{
  Tensor3 y = x;
  for (double& v : y.data) {
    if (v < 0.0) v *= slope;
  }
  return y;
}

Tensor3 batchnorm(const Tensor3& x, BatchNormParams& layer, Mode mode)
{
  Tensor4 y;
  BnCache cache;
  bn_forward(to_batch1(x), layer, mode, y, cache);
  return from_batch1(y);
}

struct Network::Impl {
  struct BlockCache {
    Tensor4 input;    // block input (conv1 input and skip source)
    BnCache bn1;
    Tensor4 n1;       // bn1 output, lrelu input
    Tensor4 r1;       // lrelu output, conv2 input
    BnCache bn2;
  };

  Tensor4 head_in;    // network input
  Tensor4 head_out;   // head conv output, lrelu input
  std::vector<BlockCache> blocks;
  Tensor4 tail_in;
  Tensor4 y;
  bool have_forward = false;

  AlignedVec ws1, ws2;
};

Network::Network(ModelParams params)
    : params_(std::move(params)), impl_(std::make_unique<Impl>())
{
  impl_->blocks.resize(params_.blocks.size());
}

Network::~Network() = default;
Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;

const Tensor4& Network::forward(const Tensor4& x, Mode mode)
{
  if (x.channels != params_.head.in_ch) {
    throw std::invalid_argument("Network::forward: input volume has wrong channel count");
  }
  if (x.height < 3 || x.width < 3 || x.batch < 1) {
    throw std::invalid_argument("Network::forward: input must be at least 3x3");
  }
  Impl& im = *impl_;
  im.head_in = x;
  conv_forward(im.head_in, params_.head, im.head_out, im.ws1);
  Tensor4 h;
  lrelu_forward(im.head_out, h);

  for (size_t i = 0; i < params_.blocks.size(); ++i) {
    Impl::BlockCache& cache = im.blocks[i];
    BlockParams& bp = params_.blocks[i];
    cache.input = std::move(h);
    Tensor4 c1, c2, n2;
    conv_forward(cache.input, bp.conv1, c1, im.ws1);
    bn_forward(c1, bp.bn1, mode, cache.n1, cache.bn1);
    lrelu_forward(cache.n1, cache.r1);
    conv_forward(cache.r1, bp.conv2, c2, im.ws1);
    bn_forward(c2, bp.bn2, mode, n2, cache.bn2);
    h = cache.input;
    for (size_t j = 0; j < h.size(); ++j) h.data[j] += n2.data[j];
  }

  im.tail_in = std::move(h);
  conv_forward(im.tail_in, params_.tail, im.y, im.ws1);
  // Global residual skip from the degraded input channel.
  const size_t plane = x.plane();
  for (int b = 0; b < x.batch; ++b) {
    const double* skip = im.head_in.at(b, 0);
    double* out = im.y.at(b, 0);
    for (size_t j = 0; j < plane; ++j) out[j] += skip[j];
  }
  im.have_forward = true;
  return im.y;
}

ModelParams Network::backward(const Tensor4& upstream)
{
  Impl& im = *impl_;
  if (!im.have_forward) {
    throw std::logic_error("Network::backward: no cached forward pass");
  }
  if (upstream.size() != im.y.size()) {
    throw std::invalid_argument("Network::backward: upstream gradient shape mismatch");
  }
  ModelParams grads = zeros_like(params_);

  Tensor4 dh;
  conv_backward(im.tail_in, params_.tail, upstream, grads.tail, &dh, im.ws1, im.ws2);

  for (size_t i = params_.blocks.size(); i-- > 0;) {
    Impl::BlockCache& cache = im.blocks[i];
    BlockParams& bp = params_.blocks[i];
    BlockParams& gb = grads.blocks[i];
    Tensor4 dc2, dr1, dn1, dc1, dbranch;
    bn_backward(cache.bn2, bp.bn2, dh, dc2, gb.bn2);
    conv_backward(cache.r1, bp.conv2, dc2, gb.conv2, &dr1, im.ws1, im.ws2);
    lrelu_backward(cache.n1, dr1, dn1);
    bn_backward(cache.bn1, bp.bn1, dn1, dc1, gb.bn1);
    conv_backward(cache.input, bp.conv1, dc1, gb.conv1, &dbranch, im.ws1, im.ws2);
    // Residual add: identity path keeps dh, branch path adds its share.
    for (size_t j = 0; j < dh.size(); ++j) dh.data[j] += dbranch.data[j];
  }

  Tensor4 da0;
  lrelu_backward(im.head_out, dh, da0);
  conv_backward(im.head_in, params_.head, da0, grads.head, nullptr, im.ws1, im.ws2);
  return grads;
}

Frame Network::restore_frame(const Tensor3& input_volume)
{
  const Tensor4& y = forward(to_batch1(input_volume), Mode::kEval);
  Frame out(y.height, y.width);
  const double* src = y.at(0, 0);
  for (size_t i = 0; i < out.size(); ++i) {
    double v = src[i];
    out.data[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  return out;
}

Frame forward(const Tensor3& x, ModelParams& params, Mode mode)
{
  Network net(params);
  const Tensor4& y = net.forward(to_batch1(x), mode);
  if (mode == Mode::kTrain) {
    // Keep the caller's running statistics in sync with the pass.
    for (size_t i = 0; i < params.blocks.size(); ++i) {
      params.blocks[i].bn1.running_mean = net.params().blocks[i].bn1.running_mean;
      params.blocks[i].bn1.running_var = net.params().blocks[i].bn1.running_var;
      params.blocks[i].bn2.running_mean = net.params().blocks[i].bn2.running_mean;
      params.blocks[i].bn2.running_var = net.params().blocks[i].bn2.running_var;
    }
  }
  Frame out(y.height, y.width);
  const double* src = y.at(0, 0);
  for (size_t i = 0; i < out.size(); ++i) {
    double v = src[i];
    out.data[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  return out;
}

namespace {

void write_u32(std::ofstream& out, uint32_t v)
{
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ofstream& out, uint64_t v)
{
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::ifstream& in, const std::string& path)
{
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError(path + ": truncated checkpoint");
  return v;
}

uint64_t read_u64(std::ifstream& in, const std::string& path)
{
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError(path + ": truncated checkpoint");
  return v;
}

void write_doubles(std::ofstream& out, const std::vector<ParamView>& views)
{
  for (const ParamView& v : views) {
    out.write(reinterpret_cast<const char*>(v.data),
              static_cast<std::streamsize>(v.size * sizeof(double)));
  }
}

void read_doubles(std::ifstream& in, const std::vector<ParamView>& views,
                  const std::string& path)
{
  for (const ParamView& v : views) {
    in.read(reinterpret_cast<char*>(v.data),
            static_cast<std::streamsize>(v.size * sizeof(double)));
    if (!in) throw FormatError(path + ": truncated checkpoint");
  }
}

constexpr char kMagic[4] = {'E', 'V', 'R', 'N'};
constexpr uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path,
                     const AdamSnapshot* adam)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error(path + ": cannot open for writing");
  }
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(params.head.in_ch));
  write_u32(out, static_cast<uint32_t>(params.head.out_ch));
  write_u32(out, static_cast<uint32_t>(params.tail.out_ch));
  write_u32(out, static_cast<uint32_t>(params.blocks.size()));
  write_u64(out, params.parameter_count());

  ModelParams& mutable_params = const_cast<ModelParams&>(params);
  write_doubles(out, trainable_views(mutable_params));
  write_doubles(out, running_stat_views(mutable_params));

  out.put(adam ? 1 : 0);
  if (adam) {
    write_u64(out, adam->step);
    out.write(reinterpret_cast<const char*>(adam->m.data()),
              static_cast<std::streamsize>(adam->m.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(adam->v.data()),
              static_cast<std::streamsize>(adam->v.size() * sizeof(double)));
  }
  if (!out) {
    throw std::runtime_error(path + ": write failed");
  }
}

ModelParams load_checkpoint(const std::string& path, AdamSnapshot* adam_out,
                            int expected_blocks)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError(path + ": cannot open file");
  }
  char magic[4] = {0};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path + ": not a checkpoint file (bad magic)");
  }
  const uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t in_ch = read_u32(in, path);
  const uint32_t hidden = read_u32(in, path);
  const uint32_t out_ch = read_u32(in, path);
  const uint32_t n_blocks = read_u32(in, path);
  if (in_ch != 6 || hidden != 32 || out_ch != 1 ||
      n_blocks != static_cast<uint32_t>(expected_blocks)) {
    throw ArchitectureError(path + ": checkpoint architecture " + std::to_string(in_ch) +
                            "->" + std::to_string(hidden) + " x" + std::to_string(n_blocks) +
                            " blocks ->" + std::to_string(out_ch) +
                            " does not match the expected 6->32 x" +
                            std::to_string(expected_blocks) + " blocks ->1");
  }
  ModelParams params = ModelParams::initialized(0, static_cast<int>(in_ch),
                                                static_cast<int>(hidden),
                                                static_cast<int>(n_blocks));
  const uint64_t count = read_u64(in, path);
  if (count != params.parameter_count()) {
    throw FormatError(path + ": parameter count mismatch");
  }
  read_doubles(in, trainable_views(params), path);
  read_doubles(in, running_stat_views(params), path);

  const int has_adam = in.get();
  if (has_adam != 0 && has_adam != 1) {
    throw FormatError(path + ": truncated checkpoint");
  }
  if (has_adam == 1) {
    AdamSnapshot snap;
    snap.step = read_u64(in, path);
    snap.m.resize(count);
    snap.v.resize(count);
    in.read(reinterpret_cast<char*>(snap.m.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    in.read(reinterpret_cast<char*>(snap.v.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw FormatError(path + ": truncated optimizer state");
    if (adam_out) *adam_out = std::move(snap);
  } else if (adam_out) {
    *adam_out = AdamSnapshot{};
  }
  return params;
}

}  // namespace evrn
