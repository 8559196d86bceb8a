#include "evrn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace evrn {

double psnr(const Frame& a, const Frame& b)
{
  if (!a.same_dims(b)) {
    throw std::invalid_argument("psnr: dimension mismatch");
  }
  double sse = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sse += d * d;
  }
  if (sse == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double mse = sse / static_cast<double>(a.size());
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2
constexpr double kC2 = 0.03 * 0.03;  // (K2 * L)^2

const std::vector<double>& gaussian_taps()
{
  static const std::vector<double> taps = [] {
    std::vector<double> w(kWindow);
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double d = i - (kWindow - 1) / 2.0;
      w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
  }();
  return taps;
}

// Separable valid-mode Gaussian filter: (H,W) -> (H-10, W-10).
void gauss_valid(const std::vector<double>& src, int h, int w, std::vector<double>& tmp,
                 std::vector<double>& dst)
{
  const std::vector<double>& g = gaussian_taps();
  const int wv = w - kWindow + 1;
  const int hv = h - kWindow + 1;
  tmp.assign(static_cast<size_t>(h) * wv, 0.0);
  for (int y = 0; y < h; ++y) {
    const double* row = src.data() + static_cast<size_t>(y) * w;
    double* trow = tmp.data() + static_cast<size_t>(y) * wv;
    for (int x = 0; x < wv; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * row[x + k];
      trow[x] = acc;
    }
  }
  dst.assign(static_cast<size_t>(hv) * wv, 0.0);
  for (int y = 0; y < hv; ++y) {
    double* drow = dst.data() + static_cast<size_t>(y) * wv;
    for (int k = 0; k < kWindow; ++k) {
      const double* trow = tmp.data() + static_cast<size_t>(y + k) * wv;
      const double gk = g[k];
      for (int x = 0; x < wv; ++x) drow[x] += gk * trow[x];
    }
  }
}

}  // namespace

double ssim(const Frame& a, const Frame& b)
{
  if (!a.same_dims(b)) {
    throw std::invalid_argument("ssim: dimension mismatch");
  }
  if (a.height < kWindow || a.width < kWindow) {
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  }
  const size_t n = a.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (size_t i = 0; i < n; ++i) {
    aa[i] = a.data[i] * a.data[i];
    bb[i] = b.data[i] * b.data[i];
    ab[i] = a.data[i] * b.data[i];
  }
  std::vector<double> tmp, mu_a, mu_b, m_aa, m_bb, m_ab;
  gauss_valid(a.data, a.height, a.width, tmp, mu_a);
  gauss_valid(b.data, a.height, a.width, tmp, mu_b);
  gauss_valid(aa, a.height, a.width, tmp, m_aa);
  gauss_valid(bb, a.height, a.width, tmp, m_bb);
  gauss_valid(ab, a.height, a.width, tmp, m_ab);

  double total = 0.0;
  for (size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = m_aa[i] - ma * ma;
    const double vb = m_bb[i] - mb * mb;
    const double cab = m_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + kC1) * (2.0 * cab + kC2)) /
             ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
  }
  return total / static_cast<double>(mu_a.size());
}

Frame crop_frame(const Frame& f, const CropRect& rect)
{
  if (rect.w <= 0 || rect.h <= 0 || rect.x < 0 || rect.y < 0 || rect.x + rect.w > f.width ||
      rect.y + rect.h > f.height) {
    throw std::invalid_argument("crop_frame: rectangle outside frame");
  }
  Frame out(rect.h, rect.w);
  for (int y = 0; y < rect.h; ++y) {
    for (int x = 0; x < rect.w; ++x) {
      out.at(y, x) = f.at(rect.y + y, rect.x + x);
    }
  }
  return out;
}

namespace {

double mean_of(const std::vector<QualityRow>& rows, double QualityRow::* field)
{
  double sum = 0.0;
  for (const QualityRow& r : rows) sum += r.*field;
  return rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
}

}  // namespace

double QualityReport::mean_psnr() const { return mean_of(rows, &QualityRow::psnr_value); }
double QualityReport::mean_ssim() const { return mean_of(rows, &QualityRow::ssim_value); }

std::optional<double> QualityReport::mean_psnr_roi() const
{
  double sum = 0.0;
  for (const QualityRow& r : rows) {
    if (!r.psnr_roi) return std::nullopt;
    sum += *r.psnr_roi;
  }
  if (rows.empty()) return std::nullopt;
  return sum / static_cast<double>(rows.size());
}

std::optional<double> QualityReport::mean_ssim_roi() const
{
  double sum = 0.0;
  for (const QualityRow& r : rows) {
    if (!r.ssim_roi) return std::nullopt;
    sum += *r.ssim_roi;
  }
  if (rows.empty()) return std::nullopt;
  return sum / static_cast<double>(rows.size());
}

std::string format_metric(double v)
{
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_report_csv(const QualityReport& report, const std::string& path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error(path + ": cannot open for writing");
  }
  out << "frame_index,psnr,ssim,psnr_roi,ssim_roi\n";
  for (const QualityRow& r : report.rows) {
    out << r.frame_index << ',' << format_metric(r.psnr_value) << ','
        << format_metric(r.ssim_value) << ',';
    if (r.psnr_roi) out << format_metric(*r.psnr_roi);
    out << ',';
    if (r.ssim_roi) out << format_metric(*r.ssim_roi);
    out << '\n';
  }
}

std::string report_summary(const QualityReport& report, const std::string& label)
{
  std::ostringstream os;
  os << label << ": PSNR " << format_metric(report.mean_psnr());
  if (auto roi = report.mean_psnr_roi()) os << " (" << format_metric(*roi) << ")";
  os << ", SSIM " << format_metric(report.mean_ssim());
  if (auto roi = report.mean_ssim_roi()) os << " (" << format_metric(*roi) << ")";
  return os.str();
}

}  // namespace evrn
