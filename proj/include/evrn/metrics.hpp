#ifndef EVRN_METRICS_HPP
#define EVRN_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "evrn/frame.hpp"

namespace evrn {

// 10*log10(1/MSE) with MAX = 1. Identical frames return +infinity,
// serialized as "inf" in reports.
double psnr(const Frame& a, const Frame& b);

// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
// L = 1, averaged over fully valid window positions only.
double ssim(const Frame& a, const Frame& b);

struct CropRect {
  int x = 0, y = 0, w = 0, h = 0;
};

Frame crop_frame(const Frame& f, const CropRect& rect);

struct QualityRow {
  int frame_index = 0;
  double psnr_value = 0.0;
  double ssim_value = 0.0;
  std::optional<double> psnr_roi;
  std::optional<double> ssim_roi;
};

struct QualityReport {
  std::vector<QualityRow> rows;

  double mean_psnr() const;
  double mean_ssim() const;
  std::optional<double> mean_psnr_roi() const;
  std::optional<double> mean_ssim_roi() const;
};

// "inf" for infinities, fixed 6 decimals otherwise.
std::string format_metric(double v);

// CSV schema: frame_index,psnr,ssim,psnr_roi,ssim_roi (ROI cells empty when
// no crop rectangle was given).
void write_report_csv(const QualityReport& report, const std::string& path);

// Plain-text summary of the aggregate means; crop means, when present,
// appear in parentheses after the whole-frame means.
std::string report_summary(const QualityReport& report, const std::string& label);

}  // namespace evrn

#endif  // EVRN_METRICS_HPP
