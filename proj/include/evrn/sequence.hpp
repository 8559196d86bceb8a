#ifndef EVRN_SEQUENCE_HPP
#define EVRN_SEQUENCE_HPP

#include <optional>
#include <string>
#include <vector>

#include "evrn/frame.hpp"
#include "evrn/quadtree.hpp"

namespace evrn {

// In-memory video sequence: >= 2 equally sized frames, uniformly spaced
// timestamps, optional per-sequence object mask.
struct SequenceData {
  std::vector<Frame> frames;
  std::optional<RoiMask> roi;
  double fps = 25.0;

  double timestamp(size_t i) const { return static_cast<double>(i) / fps; }
  void validate() const;
};

// Sorted .pgm/.png files of a directory; "roi.pgm", when present, becomes
// the sequence mask instead of a frame.
std::vector<std::string> list_frame_files(const std::string& dir);

SequenceData load_sequence(const std::string& dir, double fps = 25.0);

// Mask I/O through 8-bit PGM: nonzero bytes mark object pixels.
RoiMask load_roi_mask(const std::string& path);
void save_roi_mask(const RoiMask& mask, const std::string& path);

}  // namespace evrn

#endif  // EVRN_SEQUENCE_HPP
