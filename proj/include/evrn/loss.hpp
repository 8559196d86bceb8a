#ifndef EVRN_LOSS_HPP
#define EVRN_LOSS_HPP

#include "evrn/frame.hpp"

namespace evrn {

struct LossWeights {
  double lambda_fid = 0.5;
  double lambda_tv = 0.05;
};

struct GradientPair {
  Frame gx;
  Frame gy;
};

struct LossResult {
  double value = 0.0;
  Frame grad;  // dL/dr
};

// 3x3 Sobel responses with replicate border padding. Requires >= 3x3.
GradientPair sobel_gradients(const Frame& img);

// sum over pixels of [(1 + lambda_fid * ebar) * (f - r)]^2
LossResult fidelity_loss(const Frame& f, const Frame& r, const Frame& ebar,
                         const LossWeights& w);

// sum over pixels and both Sobel directions of [lambda_tv * (4 - ebar) * g]^2,
// gradient backpropagated exactly through the padded Sobel correlation.
LossResult tv_loss(const Frame& r, const Frame& ebar, const LossWeights& w);

// fidelity + tv, gradients summed.
LossResult total_loss(const Frame& f, const Frame& r, const Frame& ebar,
                      const LossWeights& w);

}  // namespace evrn

#endif  // EVRN_LOSS_HPP
