#ifndef EVRN_TESTS_ORACLES_HPP
#define EVRN_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <vector>

#include "evrn/events.hpp"
#include "evrn/frame.hpp"
#include "evrn/loss.hpp"

// Independent reference implementations the main library is checked
// against. They stay deliberately naive.
namespace evrn::test {

// Two-pass MSE: materialize squared differences, then sum them.
inline double mse_oracle(const Frame& a, const Frame& b)
{
  std::vector<double> sq(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sq[i] = d * d;
  }
  const double total = std::accumulate(sq.begin(), sq.end(), 0.0);
  return total / static_cast<double>(a.size());
}

// Direct per-window SSIM with an explicitly tabulated 2-D Gaussian.
inline double ssim_oracle(const Frame& a, const Frame& b)
{
  const int win = 11;
  const double sigma = 1.5;
  double wsum = 0.0;
  double weight[11][11];
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      const double dy = i - 5.0, dx = j - 5.0;
      weight[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      wsum += weight[i][j];
    }
  }
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) weight[i][j] /= wsum;
  }
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  int count = 0;
  for (int y = 0; y + win <= a.height; ++y) {
    for (int x = 0; x + win <= a.width; ++x) {
      double ma = 0, mb = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          ma += weight[i][j] * a.at(y + i, x + j);
          mb += weight[i][j] * b.at(y + i, x + j);
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double da = a.at(y + i, x + j) - ma;
          const double db = b.at(y + i, x + j) - mb;
          va += weight[i][j] * da * da;
          vb += weight[i][j] * db * db;
          cov += weight[i][j] * da * db;
        }
      }
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / count;
}

// Naive per-pixel re-derivation of the training objective, including its
// own clamped-index Sobel.
inline double loss_sobel_at(const Frame& img, int y, int x, bool xdir)
{
  static const double kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  static const double ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int yy = std::clamp(y + i - 1, 0, img.height - 1);
      const int xx = std::clamp(x + j - 1, 0, img.width - 1);
      acc += (xdir ? kx[i][j] : ky[i][j]) * img.at(yy, xx);
    }
  }
  return acc;
}

inline double naive_total_loss(const Frame& f, const Frame& r, const Frame& ebar,
                               const LossWeights& w)
{
  double loss = 0.0;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const double fid = (1.0 + w.lambda_fid * ebar.at(y, x)) * (f.at(y, x) - r.at(y, x));
      loss += fid * fid;
      const double wx = w.lambda_tv * (4.0 - ebar.at(y, x)) * loss_sobel_at(r, y, x, true);
      const double wy = w.lambda_tv * (4.0 - ebar.at(y, x)) * loss_sobel_at(r, y, x, false);
      loss += wx * wx + wy * wy;
    }
  }
  return loss;
}

// Time-marching reference event simulator: walks 10^4 substeps, detects
// threshold crossings per substep and solves the crossing time inside that
// substep. Independent of the closed-form enumeration in the implementation.
class DenseEventOracle {
 public:
  explicit DenseEventOracle(SimConfig cfg) : cfg_(cfg) {}

  EventStream step(const Frame& prev, const Frame& next, double t0, double t1)
  {
    if (ref_.empty()) {
      ref_.resize(prev.size());
      for (size_t i = 0; i < prev.size(); ++i) {
        ref_[i] = std::log(prev.data[i] + cfg_.log_eps);
      }
    }
    constexpr int kSteps = 10000;
    EventStream out;
    for (int y = 0; y < prev.height; ++y) {
      for (int x = 0; x < prev.width; ++x) {
        const size_t i = static_cast<size_t>(y) * prev.width + x;
        const double l0 = std::log(prev.data[i] + cfg_.log_eps);
        const double l1 = std::log(next.data[i] + cfg_.log_eps);
        double& ref = ref_[i];
        while (l0 - ref >= cfg_.threshold) {
          ref += cfg_.threshold;
          out.push_back({t0, x, y, +1});
        }
        while (ref - l0 >= cfg_.threshold) {
          ref -= cfg_.threshold;
          out.push_back({t0, x, y, -1});
        }
        double la = l0, ta = t0;
        for (int k = 1; k <= kSteps; ++k) {
          const double frac = static_cast<double>(k) / kSteps;
          const double tb = t0 + (t1 - t0) * frac;
          const double lb = l0 + (l1 - l0) * frac;
          while (true) {
            if (lb >= la && lb - ref >= cfg_.threshold) {
              const double target = ref + cfg_.threshold;
              out.push_back({ta + (target - la) / (lb - la) * (tb - ta), x, y, +1});
              ref = target;
            } else if (lb <= la && ref - lb >= cfg_.threshold) {
              const double target = ref - cfg_.threshold;
              out.push_back({ta + (target - la) / (lb - la) * (tb - ta), x, y, -1});
              ref = target;
            } else {
              break;
            }
          }
          la = lb;
          ta = tb;
        }
      }
    }
    std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
      return std::tie(a.t, a.y, a.x, a.p) < std::tie(b.t, b.y, b.x, b.p);
    });
    return out;
  }

  double ref(size_t i) const { return ref_[i]; }

 private:
  SimConfig cfg_;
  std::vector<double> ref_;
};

}  // namespace evrn::test

#endif  // EVRN_TESTS_ORACLES_HPP
