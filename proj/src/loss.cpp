#include "evrn/loss.hpp"

#include <algorithm>
#include <stdexcept>

namespace evrn {

namespace {

constexpr double kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr double kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

inline int clamp_index(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

void check_min_size(const Frame& img, const char* who)
{
  if (img.height < 3 || img.width < 3) {
    throw std::invalid_argument(std::string(who) + ": image smaller than 3x3");
  }
}

}  // namespace

GradientPair sobel_gradients(const Frame& img)
{
  check_min_size(img, "sobel_gradients");
  const int h = img.height, w = img.width;
  // Factored [1,2,1] x [-1,0,1] form of the same clamped correlation; the
  // difference stage cancels exactly on constant regions.
  Frame dx(h, w), dy(h, w);
  for (int y = 0; y < h; ++y) {
    const int yu = clamp_index(y - 1, h - 1);
    const int yd = clamp_index(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xl = clamp_index(x - 1, w - 1);
      const int xr = clamp_index(x + 1, w - 1);
      dx.at(y, x) = img.at(y, xr) - img.at(y, xl);
      dy.at(y, x) = img.at(yd, x) - img.at(yu, x);
    }
  }
  GradientPair out{Frame(h, w), Frame(h, w)};
  for (int y = 0; y < h; ++y) {
    const int yu = clamp_index(y - 1, h - 1);
    const int yd = clamp_index(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xl = clamp_index(x - 1, w - 1);
      const int xr = clamp_index(x + 1, w - 1);
      out.gx.at(y, x) = dx.at(yu, x) + 2.0 * dx.at(y, x) + dx.at(yd, x);
      out.gy.at(y, x) = dy.at(y, xl) + 2.0 * dy.at(y, x) + dy.at(y, xr);
    }
  }
  return out;
}

LossResult fidelity_loss(const Frame& f, const Frame& r, const Frame& ebar,
                         const LossWeights& w)
{
  if (!f.same_dims(r) || !f.same_dims(ebar)) {
    throw std::invalid_argument("fidelity_loss: dimension mismatch");
  }
  LossResult res;
  res.grad = Frame(f.height, f.width);
  for (size_t i = 0; i < f.size(); ++i) {
    const double weight = 1.0 + w.lambda_fid * ebar.data[i];
    const double term = weight * (f.data[i] - r.data[i]);
    res.value += term * term;
    res.grad.data[i] = -2.0 * weight * weight * (f.data[i] - r.data[i]);
  }
  return res;
}

LossResult tv_loss(const Frame& r, const Frame& ebar, const LossWeights& w)
{
  if (!r.same_dims(ebar)) {
    throw std::invalid_argument("tv_loss: dimension mismatch");
  }
  check_min_size(r, "tv_loss");
  const GradientPair g = sobel_gradients(r);

  LossResult res;
  res.grad = Frame(r.height, r.width);
  Frame dgx(r.height, r.width);
  Frame dgy(r.height, r.width);
  for (size_t i = 0; i < r.size(); ++i) {
    const double weight = w.lambda_tv * (4.0 - ebar.data[i]);
    const double tx = weight * g.gx.data[i];
    const double ty = weight * g.gy.data[i];
    res.value += tx * tx + ty * ty;
    dgx.data[i] = 2.0 * weight * weight * g.gx.data[i];
    dgy.data[i] = 2.0 * weight * weight * g.gy.data[i];
  }
  // Adjoint of the clamped-index gather above: scatter each response's
  // gradient back onto the source pixels it actually read.
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) {
      const double dx = dgx.at(y, x);
      const double dy = dgy.at(y, x);
      for (int i = 0; i < 3; ++i) {
        const int sy = clamp_index(y + i - 1, r.height - 1);
        for (int j = 0; j < 3; ++j) {
          const int sx = clamp_index(x + j - 1, r.width - 1);
          res.grad.at(sy, sx) += dx * kSobelX[i][j] + dy * kSobelY[i][j];
        }
      }
    }
  }
  return res;
}

LossResult total_loss(const Frame& f, const Frame& r, const Frame& ebar, const LossWeights& w)
{
  LossResult fid = fidelity_loss(f, r, ebar, w);
  const LossResult tv = tv_loss(r, ebar, w);
  fid.value += tv.value;
  for (size_t i = 0; i < fid.grad.size(); ++i) {
    fid.grad.data[i] += tv.grad.data[i];
  }
  return fid;
}

}  // namespace evrn
