#include "evrn/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace evrn {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Seeded uniform draws with a mapping that is pinned by the standard, unlike
// std::uniform_real_distribution.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi)  // inclusive bounds
  {
    const int n = hi - lo + 1;
    int k = static_cast<int>(uniform() * n);
    if (k >= n) k = n - 1;
    return lo + k;
  }

 private:
  std::mt19937_64 gen_;
};

struct Square {
  int x, y, size;
  int vx, vy;
  double intensity;
};

void advance(Square& s, int height, int width)
{
  s.x += s.vx;
  s.y += s.vy;
  if (s.x < 0) {
    s.x = -s.x;
    s.vx = -s.vx;
  }
  if (s.x + s.size > width) {
    s.x = 2 * (width - s.size) - s.x;
    s.vx = -s.vx;
  }
  if (s.y < 0) {
    s.y = -s.y;
    s.vy = -s.vy;
  }
  if (s.y + s.size > height) {
    s.y = 2 * (height - s.size) - s.y;
    s.vy = -s.vy;
  }
}

SequenceData moving_squares(const SynthOptions& opt)
{
  Rng rng(opt.seed);
  const int h = opt.height, w = opt.width;

  // Fixed diagonal background gradient so blocking artifacts are visible
  // away from the objects too.
  const double mix = rng.uniform();
  Frame background(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double g = mix * (static_cast<double>(x) / (w - 1)) +
                       (1.0 - mix) * (static_cast<double>(y) / (h - 1));
      background.at(y, x) = 0.3 + 0.4 * g;
    }
  }

  const int n_squares = opt.n_squares ? *opt.n_squares : rng.uniform_int(2, 3);
  std::vector<Square> squares;
  for (int i = 0; i < n_squares; ++i) {
    Square s;
    const int max_size = std::min({24, h / 3, w / 3});
    s.size = rng.uniform_int(8, max_size);
    s.x = rng.uniform_int(0, w - s.size);
    s.y = rng.uniform_int(0, h - s.size);
    if (opt.velocity) {
      s.vx = opt.velocity->first;
      s.vy = opt.velocity->second;
    } else {
      do {
        s.vx = rng.uniform_int(-2, 2);
        s.vy = rng.uniform_int(-2, 2);
      } while (s.vx == 0 && s.vy == 0);
    }
    // High contrast against the mid-gray background.
    s.intensity = (i % 2 == 0) ? rng.uniform(0.85, 1.0) : rng.uniform(0.0, 0.15);
    squares.push_back(s);
  }

  SequenceData seq;
  seq.fps = opt.fps;
  seq.roi = RoiMask(h, w, 0);
  for (int t = 0; t < opt.n_frames; ++t) {
    Frame f = background;
    for (const Square& s : squares) {
      for (int y = s.y; y < s.y + s.size; ++y) {
        for (int x = s.x; x < s.x + s.size; ++x) {
          f.at(y, x) = s.intensity;
          seq.roi->at(y, x) = 1;
        }
      }
    }
    seq.frames.push_back(std::move(f));
    for (Square& s : squares) advance(s, h, w);
  }
  return seq;
}

SequenceData drifting_gradient(const SynthOptions& opt)
{
  Rng rng(opt.seed);
  const int h = opt.height, w = opt.width;
  const double angle = rng.uniform(0.0, 2.0 * kPi);
  const double wavelength = rng.uniform(24.0, 48.0);
  const double cx = std::cos(angle) / wavelength;
  const double cy = std::sin(angle) / wavelength;
  const double phase0 = rng.uniform(0.0, 2.0 * kPi);
  const double drift = rng.uniform(0.15, 0.45);  // radians per frame

  SequenceData seq;
  seq.fps = opt.fps;
  for (int t = 0; t < opt.n_frames; ++t) {
    Frame f(h, w);
    const double phase = phase0 + drift * t;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        f.at(y, x) = 0.5 + 0.45 * std::sin(2.0 * kPi * (cx * x + cy * y) + phase);
      }
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

SequenceData texture_pan(const SynthOptions& opt)
{
  Rng rng(opt.seed);
  const int h = opt.height, w = opt.width;

  // Two-octave periodic value noise sampled with bilinear wraparound.
  auto lattice = [&rng](int n) {
    std::vector<double> v(static_cast<size_t>(n) * n);
    for (double& x : v) x = rng.uniform();
    return v;
  };
  const int n1 = 8, n2 = 16;
  const std::vector<double> l1 = lattice(n1);
  const std::vector<double> l2 = lattice(n2);
  auto sample = [](const std::vector<double>& l, int n, double u, double v) {
    u -= std::floor(u);
    v -= std::floor(v);
    const double fu = u * n, fv = v * n;
    const int iu = static_cast<int>(fu) % n, iv = static_cast<int>(fv) % n;
    const double au = fu - std::floor(fu), av = fv - std::floor(fv);
    const int ju = (iu + 1) % n, jv = (iv + 1) % n;
    const double v00 = l[static_cast<size_t>(iv) * n + iu];
    const double v01 = l[static_cast<size_t>(iv) * n + ju];
    const double v10 = l[static_cast<size_t>(jv) * n + iu];
    const double v11 = l[static_cast<size_t>(jv) * n + ju];
    return (1 - av) * ((1 - au) * v00 + au * v01) + av * ((1 - au) * v10 + au * v11);
  };

  const double vx = rng.uniform(0.5, 2.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  const double vy = rng.uniform(0.5, 2.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);

  SequenceData seq;
  seq.fps = opt.fps;
  for (int t = 0; t < opt.n_frames; ++t) {
    Frame f(h, w);
    const double ox = vx * t, oy = vy * t;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double u = (x + ox) / w;
        const double v = (y + oy) / h;
        const double val = 0.15 + 0.7 * (0.667 * sample(l1, n1, u, v) +
                                         0.333 * sample(l2, n2, u, v));
        f.at(y, x) = val;
      }
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

}  // namespace

SynthKind parse_synth_kind(const std::string& name)
{
  if (name == "moving-squares") return SynthKind::kMovingSquares;
  if (name == "drifting-gradient") return SynthKind::kDriftingGradient;
  if (name == "texture-pan") return SynthKind::kTexturePan;
  throw std::invalid_argument("unknown synthetic sequence kind: " + name);
}

std::string synth_kind_name(SynthKind kind)
{
  switch (kind) {
    case SynthKind::kMovingSquares: return "moving-squares";
    case SynthKind::kDriftingGradient: return "drifting-gradient";
    case SynthKind::kTexturePan: return "texture-pan";
  }
  return "?";
}

SequenceData synth_sequence(SynthKind kind, const SynthOptions& opt)
{
  if (opt.height < 32 || opt.width < 32) {
    throw std::invalid_argument("synth_sequence: dimensions must be at least 32x32");
  }
  if (opt.n_frames < 2) {
    throw std::invalid_argument("synth_sequence: need at least 2 frames");
  }
  SequenceData seq;
  switch (kind) {
    case SynthKind::kMovingSquares: seq = moving_squares(opt); break;
    case SynthKind::kDriftingGradient: seq = drifting_gradient(opt); break;
    case SynthKind::kTexturePan: seq = texture_pan(opt); break;
  }
  seq.validate();
  return seq;
}

}  // namespace evrn
