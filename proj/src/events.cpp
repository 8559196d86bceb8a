#include "evrn/events.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "evrn/errors.hpp"

namespace evrn {

SimConfig::SimConfig(double c, double eps) : threshold(c), log_eps(eps)
{
  if (c <= 0.0) throw std::invalid_argument("SimConfig: threshold must be positive");
  if (eps <= 0.0) throw std::invalid_argument("SimConfig: log_eps must be positive");
}

EventSimulator::EventSimulator(SimConfig cfg) : cfg_(cfg)
{
  if (cfg_.threshold <= 0.0 || cfg_.log_eps <= 0.0) {
    throw std::invalid_argument("EventSimulator: invalid config");
  }
}

namespace detail {

void pixel_events(double l0, double l1, double t0, double t1, double threshold, int x, int y,
                  double& ref, EventStream& out)
{
  // Catch-up crossings at the interval start cover discontinuous input
  // (externally reset reference levels); contiguous frame feeds never hit it.
  while (l0 - ref >= threshold) {
    ref += threshold;
    out.push_back({t0, x, y, +1});
  }
  while (ref - l0 >= threshold) {
    ref -= threshold;
    out.push_back({t0, x, y, -1});
  }
  if (l1 == l0) return;
  const int dir = l1 > l0 ? +1 : -1;
  double target = ref + dir * threshold;
  while (dir * (l1 - target) >= 0.0) {
    const double tau = t0 + (target - l0) / (l1 - l0) * (t1 - t0);
    out.push_back({tau, x, y, dir});
    ref = target;
    target += dir * threshold;
  }
}

}  // namespace detail

EventStream EventSimulator::step(const Frame& prev, const Frame& next, double t_prev,
                                 double t_next)
{
  if (!prev.same_dims(next)) {
    throw std::invalid_argument("EventSimulator::step: frame size mismatch");
  }
  if (!(t_prev < t_next)) {
    throw std::invalid_argument("EventSimulator::step: timestamps must increase");
  }
  if (ref_.empty()) {
    height_ = prev.height;
    width_ = prev.width;
    ref_.resize(prev.size());
    for (size_t i = 0; i < prev.size(); ++i) {
      ref_[i] = std::log(prev.data[i] + cfg_.log_eps);
    }
  } else if (prev.height != height_ || prev.width != width_) {
    throw std::invalid_argument("EventSimulator::step: frame size changed mid-sequence");
  }

  EventStream out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const size_t i = static_cast<size_t>(y) * width_ + x;
      const double l0 = std::log(prev.data[i] + cfg_.log_eps);
      const double l1 = std::log(next.data[i] + cfg_.log_eps);
      detail::pixel_events(l0, l1, t_prev, t_next, cfg_.threshold, x, y, ref_[i], out);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
    return std::tie(a.t, a.y, a.x, a.p) < std::tie(b.t, b.y, b.x, b.p);
  });
  return out;
}

EventStream simulate_events(const Frame& prev, const Frame& next, double t_prev, double t_next,
                            const SimConfig& cfg)
{
  EventSimulator sim(cfg);
  return sim.step(prev, next, t_prev, t_next);
}

EventFrameStack bin_events(const EventStream& stream, double t_prev, double t_next, int height,
                           int width)
{
  if (!(t_prev < t_next)) {
    throw std::invalid_argument("bin_events: timestamps must increase");
  }
  const double span = t_next - t_prev;
  // Polarity sums per bin, collapsed to signs afterwards.
  std::array<std::vector<int>, 4> sums;
  for (auto& s : sums) s.assign(static_cast<size_t>(height) * width, 0);

  for (const Event& e : stream) {
    if (e.t < t_prev || e.t > t_next) {
      throw std::invalid_argument("bin_events: event outside [t_prev, t_next]");
    }
    if (e.x < 0 || e.x >= width || e.y < 0 || e.y >= height) {
      throw std::invalid_argument("bin_events: event outside frame bounds");
    }
    int bin = static_cast<int>((e.t - t_prev) / span * 4.0);
    if (bin > 3) bin = 3;  // the t == t_next boundary crossing
    sums[bin][static_cast<size_t>(e.y) * width + e.x] += e.p;
  }

  EventFrameStack stack;
  for (int b = 0; b < 4; ++b) {
    stack.bins[b] = Frame(height, width);
    for (size_t i = 0; i < sums[b].size(); ++i) {
      stack.bins[b].data[i] = sums[b][i] > 0 ? 1.0 : (sums[b][i] < 0 ? -1.0 : 0.0);
    }
  }
  return stack;
}

Frame event_count_map(const EventFrameStack& stack)
{
  Frame out(stack.bins[0].height, stack.bins[0].width);
  for (size_t i = 0; i < out.size(); ++i) {
    double n = 0.0;
    for (int b = 0; b < 4; ++b) {
      n += std::fabs(stack.bins[b].data[i]);
    }
    out.data[i] = n;
  }
  return out;
}

void save_events(const EventStream& stream, const std::string& path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error(path + ": cannot open for writing");
  }
  char line[96];
  for (const Event& e : stream) {
    std::snprintf(line, sizeof(line), "%.9f %d %d %d\n", e.t, e.x, e.y, e.p);
    out << line;
  }
}

EventStream load_events(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw FormatError(path + ": cannot open file");
  }
  EventStream stream;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Event e;
    if (!(ls >> e.t >> e.x >> e.y >> e.p) || (e.p != 1 && e.p != -1)) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": malformed event line");
    }
    stream.push_back(e);
  }
  return stream;
}

}  // namespace evrn
