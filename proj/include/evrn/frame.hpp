#ifndef EVRN_FRAME_HPP
#define EVRN_FRAME_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace evrn {

// Single-channel intensity image, row-major doubles in [0,1].
// Also reused as a generic 2-D scalar map (event counts, loss gradients),
// where the [0,1] convention does not apply.
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Frame() = default;
  Frame(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<size_t>(h) * w, fill)
  {
    if (h <= 0 || w <= 0) {
      throw std::invalid_argument("Frame: dimensions must be positive");
    }
  }

  double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return data.size(); }
  bool same_dims(const Frame& o) const { return height == o.height && width == o.width; }
};

// Channel-major (C,H,W) volume of doubles.
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<size_t>(c) * h * w, fill)
  {
    if (c <= 0 || h <= 0 || w <= 0) {
      throw std::invalid_argument("Tensor3: dimensions must be positive");
    }
  }

  double* channel(int c) { return data.data() + static_cast<size_t>(c) * height * width; }
  const double* channel(int c) const
  {
    return data.data() + static_cast<size_t>(c) * height * width;
  }
  double& at(int c, int y, int x)
  {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const
  {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  size_t size() const { return data.size(); }
};

// 8-bit quantization used at every file and bitstream boundary.
// Round-half-up keeps the mapping platform independent.
inline uint8_t quantize8(double v)
{
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  return static_cast<uint8_t>(v * 255.0 + 0.5);
}

inline double dequantize8(uint8_t q) { return q / 255.0; }

}  // namespace evrn

#endif  // EVRN_FRAME_HPP
