#ifndef EVRN_EVENTS_HPP
#define EVRN_EVENTS_HPP

#include <array>
#include <string>
#include <vector>

#include "evrn/frame.hpp"

namespace evrn {

// Polarity event at pixel (x,y), time t seconds, p in {-1,+1}.
struct Event {
  double t = 0.0;
  int x = 0;
  int y = 0;
  int p = +1;
};

// Time-ordered, ties broken by (y, x, p).
using EventStream = std::vector<Event>;

// Four temporally binned event frames, per-pixel values in {-1, 0, +1}.
struct EventFrameStack {
  std::array<Frame, 4> bins;
};

struct SimConfig {
  double threshold = 0.15;  // contrast threshold C, log-intensity units
  double log_eps = 1e-3;    // offset inside the log to keep it finite at 0

  SimConfig() = default;
  SimConfig(double c, double eps);
};

// Threshold-crossing event model over linearly interpolated log intensity.
// Per-pixel reference levels persist across step() calls; the first call
// initializes them from its `prev` frame. One simulator per sequence.
class EventSimulator {
 public:
  explicit EventSimulator(SimConfig cfg = SimConfig{});

  // Events fired while moving from `prev` (at t_prev) to `next` (at t_next).
  // A crossing that lands exactly on the threshold counts.
  EventStream step(const Frame& prev, const Frame& next, double t_prev, double t_next);

  const SimConfig& config() const { return cfg_; }

 private:
  SimConfig cfg_;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> ref_;  // per-pixel log-intensity reference levels
};

// One-shot variant with a fresh reference state.
EventStream simulate_events(const Frame& prev, const Frame& next, double t_prev, double t_next,
                            const SimConfig& cfg = SimConfig{});

namespace detail {
// Crossing generator for one pixel: log intensity moves linearly from l0 at
// t0 to l1 at t1, measured against reference level `ref` (updated in place).
void pixel_events(double l0, double l1, double t0, double t1, double threshold, int x, int y,
                  double& ref, EventStream& out);
}  // namespace detail

// Bins events from [t_prev, t_next] into 4 equal sub-intervals and collapses
// each pixel/bin to the sign of its polarity sum. An event at exactly t_next
// (a crossing reached on the boundary) falls into the last bin.
EventFrameStack bin_events(const EventStream& stream, double t_prev, double t_next, int height,
                           int width);

// Per-pixel count of active bins, values in {0,..,4}.
Frame event_count_map(const EventFrameStack& stack);

// Text format, one "t x y p" line per event.
void save_events(const EventStream& stream, const std::string& path);
EventStream load_events(const std::string& path);

}  // namespace evrn

#endif  // EVRN_EVENTS_HPP
