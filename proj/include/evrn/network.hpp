#ifndef EVRN_NETWORK_HPP
#define EVRN_NETWORK_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "evrn/adam.hpp"
#include "evrn/aligned.hpp"
#include "evrn/frame.hpp"
#include "evrn/param_view.hpp"

namespace evrn {

// Batched (B,C,H,W) activation volume.
struct Tensor4 {
  int batch = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  AlignedVec data;

  Tensor4() = default;
  Tensor4(int b, int c, int h, int w, double fill = 0.0)
      : batch(b),
        channels(c),
        height(h),
        width(w),
        data(static_cast<size_t>(b) * c * h * w, fill)
  {
  }

  size_t plane() const { return static_cast<size_t>(height) * width; }
  double* at(int b, int c)
  {
    return data.data() + (static_cast<size_t>(b) * channels + c) * plane();
  }
  const double* at(int b, int c) const
  {
    return data.data() + (static_cast<size_t>(b) * channels + c) * plane();
  }
  size_t size() const { return data.size(); }
};

// 3x3 convolution, stride 1, zero padding 1; weights are (out, in, 3, 3).
struct ConvParams {
  int in_ch = 0;
  int out_ch = 0;
  AlignedVec weights;
  AlignedVec bias;

  ConvParams() = default;
  ConvParams(int in, int out)
      : in_ch(in),
        out_ch(out),
        weights(static_cast<size_t>(out) * in * 9, 0.0),
        bias(static_cast<size_t>(out), 0.0)
  {
  }
};

struct BatchNormParams {
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;

  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;

  BatchNormParams() = default;
  explicit BatchNormParams(int channels)
      : gamma(channels, 1.0),
        beta(channels, 0.0),
        running_mean(channels, 0.0),
        running_var(channels, 1.0)
  {
  }
  int channels() const { return static_cast<int>(gamma.size()); }
};

// conv -> bn -> lrelu -> conv -> bn, added back onto the block input.
struct BlockParams {
  ConvParams conv1;
  BatchNormParams bn1;
  ConvParams conv2;
  BatchNormParams bn2;
};

// Restoration network: head conv (6->32) + leaky ReLU, four residual
// blocks, tail conv (32->1), and a global skip that adds the degraded
// input channel, so a zero tail makes the network an exact identity.
struct ModelParams {
  ConvParams head;
  std::vector<BlockParams> blocks;
  ConvParams tail;

  // He-uniform kernels from the seed; zero biases; gamma 1, beta 0;
  // tail entirely zero (identity initialization).
  static ModelParams initialized(uint64_t seed, int in_channels = 6, int hidden = 32,
                                 int n_blocks = 4);

  int input_channels() const { return head.in_ch; }
  int hidden_channels() const { return head.out_ch; }
  int block_count() const { return static_cast<int>(blocks.size()); }
  size_t parameter_count() const;
};

enum class Mode { kTrain, kEval };

constexpr double kLeakySlope = 0.2;

// Learnable arrays in checkpoint order: head w/b, per block
// (conv1 w/b, bn1 gamma/beta, conv2 w/b, bn2 gamma/beta), tail w/b.
std::vector<ParamView> trainable_views(ModelParams& p);
// Batch-norm running statistics, same block order.
std::vector<ParamView> running_stat_views(ModelParams& p);

// Zero-valued parameter set with the same shapes, used as gradient storage.
ModelParams zeros_like(const ModelParams& p);

// Standalone layer operations (single volume, batch of one).
Tensor3 conv2d(const Tensor3& input, const ConvParams& layer);
Tensor3 leaky_relu(const Tensor3& x, double slope = kLeakySlope);
// Train mode normalizes with batch statistics and updates the running ones;
// eval mode uses the running statistics.
Tensor3 batchnorm(const Tensor3& x, BatchNormParams& layer, Mode mode);

namespace detail {

// Batched layer primitives the Network engine is assembled from. Gradient
// accumulation targets (gp) must be pre-sized; gx may be null when the
// input gradient is not needed.
void conv_forward(const Tensor4& x, const ConvParams& p, Tensor4& y,
                  AlignedVec& workspace);
void conv_backward(const Tensor4& x_cached, const ConvParams& p, const Tensor4& gy,
                   ConvParams& gp, Tensor4* gx, AlignedVec& workspace,
                   AlignedVec& workspace2);

struct BnCache {
  Tensor4 xhat;
  std::vector<double> inv_std;
  Mode mode = Mode::kEval;
  double n = 0.0;  // batch * height * width
};

void bn_forward(const Tensor4& x, BatchNormParams& p, Mode mode, Tensor4& y, BnCache& cache);
void bn_backward(const BnCache& cache, const BatchNormParams& p, const Tensor4& gy,
                 Tensor4& gx, BatchNormParams& gp);

void lrelu_forward(const Tensor4& x, Tensor4& y);
void lrelu_backward(const Tensor4& x_cached, const Tensor4& gy, Tensor4& gx);

}  // namespace detail

// Forward/backward engine; owns the activation caches a backward pass needs.
class Network {
 public:
  explicit Network(ModelParams params);
  ~Network();
  Network(Network&&) noexcept;
  Network& operator=(Network&&) noexcept;

  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  // (B,6,H,W) -> (B,1,H,W), global skip included, no clamping.
  const Tensor4& forward(const Tensor4& x, Mode mode);

  // Parameter gradients for the loss whose dL/dy is given; requires the
  // caches of the preceding forward call.
  ModelParams backward(const Tensor4& upstream);

  // Inference on one input volume, output clamped to [0,1].
  Frame restore_frame(const Tensor3& input_volume);

 private:
  struct Impl;
  ModelParams params_;
  std::unique_ptr<Impl> impl_;
};

// Single-volume forward pass (eval-style clamped output).
Frame forward(const Tensor3& x, ModelParams& params, Mode mode);

// Checkpoint file: magic "EVRN", u32 version, architecture descriptor and
// parameter count, trainable parameters then running statistics as
// little-endian doubles, and optionally the Adam state.
void save_checkpoint(const ModelParams& params, const std::string& path,
                     const AdamSnapshot* adam = nullptr);
ModelParams load_checkpoint(const std::string& path, AdamSnapshot* adam_out = nullptr,
                            int expected_blocks = 4);

}  // namespace evrn

#endif  // EVRN_NETWORK_HPP
