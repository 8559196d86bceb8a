#include "evrn/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <stdexcept>

#include "evrn/errors.hpp"
#include "evrn/image_io.hpp"

namespace evrn {

namespace fs = std::filesystem;

void SequenceData::validate() const
{
  if (frames.size() < 2) {
    throw std::invalid_argument("sequence needs at least 2 frames");
  }
  for (const Frame& f : frames) {
    if (!f.same_dims(frames.front())) {
      throw std::invalid_argument("sequence frames differ in size");
    }
  }
  if (roi && (roi->height != frames.front().height || roi->width != frames.front().width)) {
    throw std::invalid_argument("sequence ROI mask size does not match frames");
  }
  if (fps <= 0.0) {
    throw std::invalid_argument("sequence fps must be positive");
  }
}

std::vector<std::string> list_frame_files(const std::string& dir)
{
  if (!fs::is_directory(dir)) {
    throw std::invalid_argument(dir + ": not a directory");
  }
  std::vector<std::string> files;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext != ".pgm" && ext != ".png") continue;
    if (name == "roi.pgm") continue;
    files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

SequenceData load_sequence(const std::string& dir, double fps)
{
  SequenceData seq;
  seq.fps = fps;
  for (const std::string& path : list_frame_files(dir)) {
    seq.frames.push_back(load_frame(path));
  }
  const fs::path roi_path = fs::path(dir) / "roi.pgm";
  if (fs::exists(roi_path)) {
    seq.roi = load_roi_mask(roi_path.string());
  }
  seq.validate();
  return seq;
}

RoiMask load_roi_mask(const std::string& path)
{
  const Frame f = load_frame(path);
  RoiMask mask(f.height, f.width);
  for (size_t i = 0; i < f.size(); ++i) {
    mask.data[i] = f.data[i] > 0.0 ? 1 : 0;
  }
  return mask;
}

void save_roi_mask(const RoiMask& mask, const std::string& path)
{
  Frame f(mask.height, mask.width);
  for (size_t i = 0; i < f.size(); ++i) {
    f.data[i] = mask.data[i] ? 1.0 : 0.0;
  }
  save_frame(f, path);
}

}  // namespace evrn
