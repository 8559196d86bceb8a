#ifndef EVRN_IMAGE_IO_HPP
#define EVRN_IMAGE_IO_HPP

#include <string>

#include "evrn/frame.hpp"

namespace evrn {

// Rec. 601 luma. Inputs are clamped to [0,1].
double to_luma(double r, double g, double b);

// Reads an 8-bit binary PGM (P5) or an 8-bit PNG (grayscale or RGB).
// Bytes map to intensities by v/255; RGB collapses through to_luma.
// Throws FormatError on anything else.
Frame load_frame(const std::string& path);

// Writes an 8-bit binary PGM (P5, maxval 255), round-half-up quantization.
void save_frame(const Frame& frame, const std::string& path);

}  // namespace evrn

#endif  // EVRN_IMAGE_IO_HPP
