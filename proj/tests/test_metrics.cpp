#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "evrn/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace evrn;



TEST_CASE("psnr of identical frames is the inf sentinel")
{
  test::Rng rng(3);
  const Frame a = test::random_frame(rng, 8, 8);
  CHECK(std::isinf(psnr(a, a)));
  CHECK(format_metric(psnr(a, a)) == "inf");
}

TEST_CASE("psnr of a uniform 0.1 difference is 20 dB")
{
  Frame a(16, 16, 0.4);
  Frame b(16, 16, 0.5);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("psnr matches the two-pass MSE oracle")
{
  test::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Frame a = test::random_frame(rng, 17, 23);
    const Frame b = test::random_frame(rng, 17, 23);
    const double expected = 10.0 * std::log10(1.0 / test::mse_oracle(a, b));
    CHECK(psnr(a, b) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(psnr(a, b) == psnr(b, a));
  }
}

TEST_CASE("psnr decreases with noise amplitude")
{
  test::Rng rng(9);
  const Frame base = test::random_frame(rng, 32, 32);
  double previous = std::numeric_limits<double>::infinity();
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    Frame noisy = base;
    test::Rng noise(42);  // same noise pattern, scaled
    for (double& v : noisy.data) {
      v = std::clamp(v + amp * (2.0 * noise.uniform() - 1.0), 0.0, 1.0);
    }
    const double p = psnr(base, noisy);
    CHECK(p < previous);
    previous = p;
  }
}

TEST_CASE("ssim of identical frames is exactly 1")
{
  test::Rng rng(7);
  const Frame a = test::random_frame(rng, 16, 16);
  CHECK(ssim(a, a) == 1.0);
}

TEST_CASE("ssim of constant 0 vs constant 1")
{
  Frame a(12, 12, 0.0);
  Frame b(12, 12, 1.0);
  // (2*0*1 + 1e-4) / (0 + 1 + 1e-4); contrast/structure factor is 1.
  CHECK(ssim(a, b) == doctest::Approx(1e-4 / 1.0001).epsilon(1e-12));
}

TEST_CASE("ssim matches the sliding-window oracle")
{
  test::Rng rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    const Frame a = test::random_frame(rng, 15, 18);
    Frame b = a;
    for (double& v : b.data) {
      v = std::clamp(v + rng.uniform(-0.2, 0.2), 0.0, 1.0);
    }
    CHECK(ssim(a, b) == doctest::Approx(test::ssim_oracle(a, b)).epsilon(1e-9));
    CHECK(ssim(a, b) == ssim(b, a));
  }
}

TEST_CASE("ssim rejects images smaller than the window")
{
  Frame a(10, 20, 0.5);
  CHECK_THROWS_AS(ssim(a, a), std::invalid_argument);
  Frame c(8, 8, 0.1);
  Frame d(9, 8, 0.1);
  CHECK_THROWS_AS(psnr(c, d), std::invalid_argument);
}

TEST_CASE("report CSV and summary formatting")
{
  QualityReport rep;
  rep.rows.push_back({1, 30.0, 0.9, 25.0, 0.8});
  rep.rows.push_back({2, 32.0, 0.95, 27.0, 0.9});
  CHECK(rep.mean_psnr() == doctest::Approx(31.0));
  CHECK(rep.mean_ssim() == doctest::Approx(0.925));
  REQUIRE(rep.mean_psnr_roi());
  CHECK(*rep.mean_psnr_roi() == doctest::Approx(26.0));
  const std::string summary = report_summary(rep, "test");
  CHECK(summary.find("31.000000") != std::string::npos);
  CHECK(summary.find("(26.000000)") != std::string::npos);

  test::TempDir dir("metrics");
  const std::string path = dir.file("r.csv");
  write_report_csv(rep, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "frame_index,psnr,ssim,psnr_roi,ssim_roi");
  std::string row;
  std::getline(in, row);
  CHECK(row == "1,30.000000,0.900000,25.000000,0.800000");
}
