#ifndef EVRN_PIPELINE_HPP
#define EVRN_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "evrn/adam.hpp"
#include "evrn/events.hpp"
#include "evrn/loss.hpp"
#include "evrn/metrics.hpp"
#include "evrn/network.hpp"
#include "evrn/quadtree.hpp"
#include "evrn/sequence.hpp"

namespace evrn {

// One training/evaluation instance at frame index t (t >= 1):
// input channels [deg_t, deg_{t-1}, E1..E4], target is the original f_t.
struct Sample {
  Tensor3 input;
  Frame target;
  Frame ebar;
};

// Degrades every frame at the budget, simulates events on the ORIGINAL
// frames (the event stream observes the true scene), bins them, and
// assembles one sample per consecutive frame pair.
std::vector<Sample> prepare(const SequenceData& seq, BitBudget budget, const SimConfig& sim,
                            double rho = 4.0);

struct TrainConfig {
  std::vector<uint64_t> budgets = {600};
  int crop = 64;
  int batch = 8;
  int iterations = 1000;
  uint64_t seed = 1;
  double fps = 25.0;
  double rho = 4.0;
  SimConfig sim;
  LossWeights loss;
  AdamConfig adam;
  int checkpoint_every = 500;
  std::string checkpoint_path = "model.evrn";
  std::string log_path;  // defaults to checkpoint_path + ".log.csv"

  void validate() const;
};

// key=value text file mirroring TrainConfig; '#' starts a comment.
TrainConfig parse_train_config(const std::string& path);

// Mini-batch crop training with the event-weighted objective and Adam.
// Writes the checkpoint (with optimizer state) and an iteration,loss CSV.
// Fully deterministic for a fixed config and fixed sequences.
void train(const TrainConfig& config, const std::vector<SequenceData>& sequences);

struct RestoreResult {
  std::vector<Frame> restored;  // one per t >= 1
  QualityReport degraded_report;
  QualityReport restored_report;
};

// Runs the full degrade + event + restore chain over a sequence in eval
// mode. `truth` (defaults to the sequence frames themselves) feeds the
// quality reports comparing both the degraded and the restored frames.
RestoreResult restore(const ModelParams& params, const SequenceData& seq, BitBudget budget,
                      const SimConfig& sim, double rho = 4.0,
                      const std::optional<CropRect>& roi_rect = std::nullopt,
                      const std::vector<Frame>* truth = nullptr);

// Side-by-side CSV for a restore run:
// frame_index,psnr_degraded,ssim_degraded,psnr_restored,ssim_restored and the
// four ROI columns (empty without a crop rectangle).
void write_restore_csv(const RestoreResult& result, const std::string& path);

// Frame-by-frame comparison of two equally sized frame sets.
QualityReport evaluate_frames(const std::vector<Frame>& a, const std::vector<Frame>& b,
                              const std::optional<CropRect>& roi_rect = std::nullopt);

}  // namespace evrn

#endif  // EVRN_PIPELINE_HPP
