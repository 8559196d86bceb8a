#ifndef EVRN_SYNTH_HPP
#define EVRN_SYNTH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "evrn/sequence.hpp"

namespace evrn {

enum class SynthKind {
  kMovingSquares,    // constant-intensity squares bouncing over a gradient
  kDriftingGradient, // smooth sinusoidal gradient with a drifting phase
  kTexturePan,       // periodic value-noise texture panning with wraparound
};

SynthKind parse_synth_kind(const std::string& name);
std::string synth_kind_name(SynthKind kind);

struct SynthOptions {
  int n_frames = 2;
  int height = 64;
  int width = 64;
  uint64_t seed = 1;
  double fps = 25.0;
  // moving-squares overrides; unset values are derived from the seed
  std::optional<int> n_squares;
  std::optional<std::pair<int, int>> velocity;  // (vx, vy) applied to all squares
};

// Deterministic synthetic grayscale motion sequence. moving-squares also
// emits the union of the object boxes as the sequence ROI mask.
SequenceData synth_sequence(SynthKind kind, const SynthOptions& opt);

}  // namespace evrn

#endif  // EVRN_SYNTH_HPP
