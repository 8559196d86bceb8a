#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "evrn/loss.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace evrn;

namespace {

Frame ramp_frame(int h, int w, double step)
{
  Frame f(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f.at(y, x) = step * x;
  }
  return f;
}

Frame random_ebar(test::Rng& rng, int h, int w)
{
  Frame e(h, w);
  for (double& v : e.data) v = static_cast<double>(rng.raw() % 5);
  return e;
}

}  // namespace

TEST_CASE("sobel of a constant image is zero")
{
  Frame f(6, 7, 0.42);
  const GradientPair g = sobel_gradients(f);
  for (double v : g.gx.data) CHECK(v == 0.0);
  for (double v : g.gy.data) CHECK(v == 0.0);
}

TEST_CASE("sobel of a horizontal ramp")
{
  // Column step 0.25: the x kernel sums to 8x the step on interior pixels.
  const Frame f = ramp_frame(5, 5, 0.25);
  const GradientPair g = sobel_gradients(f);
  for (int y = 0; y < 5; ++y) {
    for (int x = 1; x < 4; ++x) {
      CHECK(g.gx.at(y, x) == doctest::Approx(2.0).epsilon(1e-12));
    }
    // Replicate padding halves the response on the border columns.
    CHECK(g.gx.at(y, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.gx.at(y, 4) == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (double v : g.gy.data) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("sobel transpose symmetry")
{
  test::Rng rng(41);
  const Frame f = test::random_frame(rng, 7, 9);
  Frame ft(f.width, f.height);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) ft.at(x, y) = f.at(y, x);
  }
  const GradientPair g = sobel_gradients(f);
  const GradientPair gt = sobel_gradients(ft);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      CHECK(gt.gx.at(x, y) == doctest::Approx(g.gy.at(y, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("sobel rejects images smaller than 3x3")
{
  Frame f(2, 5, 0.0);
  CHECK_THROWS_AS(sobel_gradients(f), std::invalid_argument);
}

TEST_CASE("fidelity loss worked values")
{
  const LossWeights w{0.5, 0.05};
  SUBCASE("perfect restoration costs nothing")
  {
    test::Rng rng(42);
    const Frame f = test::random_frame(rng, 4, 4);
    const Frame ebar = random_ebar(rng, 4, 4);
    const LossResult res = fidelity_loss(f, f, ebar, w);
    CHECK(res.value == 0.0);
    for (double v : res.grad.data) CHECK(v == 0.0);
  }
  SUBCASE("single pixel, four events")
  {
    Frame f(1, 1, 0.75), r(1, 1, 0.25), ebar(1, 1, 4.0);
    const LossResult res = fidelity_loss(f, r, ebar, w);
    CHECK(res.value == doctest::Approx(2.25).epsilon(1e-12));
    CHECK(res.grad.at(0, 0) == doctest::Approx(-2.0 * 9.0 * 0.5).epsilon(1e-12));
  }
  SUBCASE("single pixel, no events")
  {
    Frame f(1, 1, 0.75), r(1, 1, 0.25), ebar(1, 1, 0.0);
    const LossResult res = fidelity_loss(f, r, ebar, w);
    CHECK(res.value == doctest::Approx(0.25).epsilon(1e-12));
    // The event weighting triples the residual term at ebar = 4 vs 0.
    CHECK(2.25 / 0.25 == doctest::Approx(9.0));
  }
}

TEST_CASE("tv loss worked values")
{
  const LossWeights w{0.5, 0.05};
  SUBCASE("constant image has no variation")
  {
    Frame r(5, 5, 0.3), ebar(5, 5, 0.0);
    const LossResult res = tv_loss(r, ebar, w);
    CHECK(res.value == 0.0);
    for (double v : res.grad.data) CHECK(v == 0.0);
  }
  SUBCASE("fully active pixels mute the term")
  {
    test::Rng rng(43);
    const Frame r = test::random_frame(rng, 6, 6);
    Frame ebar(6, 6, 4.0);
    const LossResult res = tv_loss(r, ebar, w);
    CHECK(res.value == 0.0);
    for (double v : res.grad.data) CHECK(v == 0.0);
  }
  SUBCASE("ramp interior x-term")
  {
    // Interior gx = 2.0, so each interior pixel contributes
    // (0.05 * 4 * 2)^2 = 0.16 through the x direction.
    const Frame r = ramp_frame(5, 5, 0.25);
    const Frame ebar(5, 5, 0.0);
    const GradientPair g = sobel_gradients(r);
    const double term = std::pow(w.lambda_tv * 4.0 * g.gx.at(2, 2), 2.0);
    CHECK(term == doctest::Approx(0.16).epsilon(1e-12));
    const LossResult res = tv_loss(r, ebar, w);
    CHECK(res.value == doctest::Approx(test::naive_total_loss(r, r, ebar, {0.0, w.lambda_tv}))
                           .epsilon(1e-12));
  }
}

TEST_CASE("total loss adds the two terms")
{
  test::Rng rng(44);
  const Frame f = test::random_frame(rng, 6, 6);
  const Frame r = test::random_frame(rng, 6, 6);
  const Frame ebar = random_ebar(rng, 6, 6);
  const LossWeights w{0.5, 0.05};
  const LossResult fid = fidelity_loss(f, r, ebar, w);
  const LossResult tv = tv_loss(r, ebar, w);
  const LossResult tot = total_loss(f, r, ebar, w);
  CHECK(tot.value == fid.value + tv.value);
  for (size_t i = 0; i < tot.grad.size(); ++i) {
    CHECK(tot.grad.data[i] == fid.grad.data[i] + tv.grad.data[i]);
  }
}

TEST_CASE("total loss matches the naive per-pixel oracle")
{
  test::Rng rng(45);
  for (int trial = 0; trial < 100; ++trial) {
    const Frame f = test::random_frame(rng, 8, 8);
    const Frame r = test::random_frame(rng, 8, 8);
    const Frame ebar = random_ebar(rng, 8, 8);
    const LossWeights w{rng.uniform(0.0, 1.0), rng.uniform(0.0, 0.2)};
    const LossResult res = total_loss(f, r, ebar, w);
    CHECK(res.value == doctest::Approx(test::naive_total_loss(f, r, ebar, w)).epsilon(1e-9));
    CHECK(res.value >= 0.0);
  }
}

TEST_CASE("loss gradient matches central finite differences")
{
  test::Rng rng(46);
  const LossWeights w{0.5, 0.05};
  for (int trial = 0; trial < 3; ++trial) {
    const Frame f = test::random_frame(rng, 8, 8);
    Frame r = test::random_frame(rng, 8, 8);
    const Frame ebar = random_ebar(rng, 8, 8);
    const LossResult res = total_loss(f, r, ebar, w);
    const double h = 1e-6;
    for (size_t i = 0; i < r.size(); ++i) {
      const double saved = r.data[i];
      r.data[i] = saved + h;
      const double up = total_loss(f, r, ebar, w).value;
      r.data[i] = saved - h;
      const double down = total_loss(f, r, ebar, w).value;
      r.data[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = res.grad.data[i];
      const double rel = std::fabs(analytic - fd) /
                         std::max(std::fabs(analytic) + std::fabs(fd), 1e-8);
      CHECK(rel < 1e-6);
    }
  }
}

TEST_CASE("event weighting is monotone per pixel")
{
  const LossWeights w{0.5, 0.05};
  SUBCASE("fidelity grows with the event count")
  {
    double previous = -1.0;
    for (int e = 0; e <= 4; ++e) {
      Frame f(1, 1, 0.9), r(1, 1, 0.4), ebar(1, 1, static_cast<double>(e));
      const double v = fidelity_loss(f, r, ebar, w).value;
      CHECK(v >= previous);
      previous = v;
    }
  }
  SUBCASE("tv shrinks with the event count")
  {
    const Frame r = ramp_frame(5, 5, 0.2);
    double previous = std::numeric_limits<double>::infinity();
    for (int e = 0; e <= 4; ++e) {
      Frame ebar(5, 5, static_cast<double>(e));
      const double v = tv_loss(r, ebar, w).value;
      CHECK(v <= previous);
      previous = v;
    }
  }
}

TEST_CASE("zero lambdas reduce to plain SSE")
{
  test::Rng rng(47);
  const Frame f = test::random_frame(rng, 7, 7);
  const Frame r = test::random_frame(rng, 7, 7);
  const Frame ebar = random_ebar(rng, 7, 7);
  double sse = 0.0;
  for (size_t i = 0; i < f.size(); ++i) {
    sse += (f.data[i] - r.data[i]) * (f.data[i] - r.data[i]);
  }
  const LossResult res = total_loss(f, r, ebar, {0.0, 0.0});
  CHECK(res.value == doctest::Approx(sse).epsilon(1e-12));
}

TEST_CASE("loss rejects mismatched dimensions")
{
  Frame f(4, 4, 0.5), r(4, 5, 0.5), ebar(4, 4, 0.0);
  CHECK_THROWS_AS(fidelity_loss(f, r, ebar, {}), std::invalid_argument);
  CHECK_THROWS_AS(tv_loss(r, ebar, {}), std::invalid_argument);
  Frame tiny(2, 2, 0.1), etiny(2, 2, 0.0);
  CHECK_THROWS_AS(tv_loss(tiny, etiny, {}), std::invalid_argument);
}
