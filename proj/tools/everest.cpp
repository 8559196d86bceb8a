#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "evrn/errors.hpp"
#include "evrn/image_io.hpp"
#include "evrn/metrics.hpp"
#include "evrn/pipeline.hpp"
#include "evrn/synth.hpp"

namespace fs = std::filesystem;
using namespace evrn;

namespace {

CropRect parse_rect(const std::string& s)
{
  CropRect rect;
  if (std::sscanf(s.c_str(), "%d,%d,%d,%d", &rect.x, &rect.y, &rect.w, &rect.h) != 4) {
    throw CLI::ValidationError("--roi-rect", "expected x,y,w,h");
  }
  return rect;
}

std::pair<int, int> parse_size(const std::string& s)
{
  int h = 0, w = 0;
  if (std::sscanf(s.c_str(), "%dx%d", &h, &w) != 2 || h <= 0 || w <= 0) {
    throw CLI::ValidationError("--size", "expected HxW, e.g. 64x64");
  }
  return {h, w};
}

std::string frame_name(size_t index)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06zu.pgm", index);
  return buf;
}

std::vector<Frame> load_dir_frames(const std::string& dir)
{
  std::vector<Frame> frames;
  for (const std::string& path : list_frame_files(dir)) {
    frames.push_back(load_frame(path));
  }
  if (frames.empty()) {
    throw std::invalid_argument(dir + ": no .pgm/.png frames found");
  }
  return frames;
}

void add_degrade(CLI::App& app)
{
  auto* cmd = app.add_subcommand("degrade", "Quadtree-compress frames under a bit budget");
  auto in = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto roi_path = std::make_shared<std::string>();
  auto budget = std::make_shared<uint64_t>(0);
  auto rho = std::make_shared<double>(4.0);
  cmd->add_option("--in", *in, "input frame directory")->required();
  cmd->add_option("--out", *out, "output directory")->required();
  cmd->add_option("--budget", *budget, "bit budget per frame")->required();
  cmd->add_option("--roi", *roi_path, "object mask PGM (default: <in>/roi.pgm if present)");
  cmd->add_option("--rho", *rho, "ROI priority multiplier");
  cmd->callback([=]() {
    std::optional<RoiMask> roi;
    if (!roi_path->empty()) {
      roi = load_roi_mask(*roi_path);
    } else if (fs::exists(fs::path(*in) / "roi.pgm")) {
      roi = load_roi_mask((fs::path(*in) / "roi.pgm").string());
    }
    fs::create_directories(*out);
    size_t n = 0;
    for (const std::string& path : list_frame_files(*in)) {
      const Frame f = load_frame(path);
      const Frame d = degrade(f, {*budget}, roi ? &*roi : nullptr, *rho);
      const std::string name = fs::path(path).stem().string() + ".pgm";
      save_frame(d, (fs::path(*out) / name).string());
      ++n;
    }
    std::cout << "degraded " << n << " frames at " << *budget << " bits\n";
  });
}

void add_simulate_events(CLI::App& app)
{
  auto* cmd = app.add_subcommand("simulate-events",
                                 "Generate threshold-crossing events for a sequence");
  auto in = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto threshold = std::make_shared<double>(0.15);
  auto log_eps = std::make_shared<double>(1e-3);
  auto fps = std::make_shared<double>(25.0);
  cmd->add_option("--in", *in, "input frame directory")->required();
  cmd->add_option("--out", *out, "output event file")->required();
  cmd->add_option("--threshold", *threshold, "contrast threshold (log intensity)");
  cmd->add_option("--log-eps", *log_eps, "log offset");
  cmd->add_option("--fps", *fps, "frame rate for timestamps");
  cmd->callback([=]() {
    const std::vector<Frame> frames = load_dir_frames(*in);
    if (frames.size() < 2) {
      throw std::invalid_argument("simulate-events: need at least 2 frames");
    }
    EventSimulator sim(SimConfig(*threshold, *log_eps));
    EventStream all;
    for (size_t t = 1; t < frames.size(); ++t) {
      const double t0 = (t - 1) / *fps, t1 = t / *fps;
      EventStream s = sim.step(frames[t - 1], frames[t], t0, t1);
      all.insert(all.end(), s.begin(), s.end());
    }
    save_events(all, *out);
    std::cout << "wrote " << all.size() << " events to " << *out << "\n";
  });
}

void add_synth(CLI::App& app)
{
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic grayscale sequence");
  auto kind = std::make_shared<std::string>("moving-squares");
  auto frames = std::make_shared<int>(50);
  auto size = std::make_shared<std::string>("64x64");
  auto seed = std::make_shared<uint64_t>(1);
  auto out = std::make_shared<std::string>();
  cmd->add_option("--kind", *kind, "moving-squares | drifting-gradient | texture-pan");
  cmd->add_option("--frames", *frames, "number of frames");
  cmd->add_option("--size", *size, "HxW");
  cmd->add_option("--seed", *seed, "random seed");
  cmd->add_option("--out", *out, "output directory")->required();
  cmd->callback([=]() {
    SynthOptions opt;
    opt.n_frames = *frames;
    std::tie(opt.height, opt.width) = parse_size(*size);
    opt.seed = *seed;
    const SequenceData seq = synth_sequence(parse_synth_kind(*kind), opt);
    fs::create_directories(*out);
    for (size_t i = 0; i < seq.frames.size(); ++i) {
      save_frame(seq.frames[i], (fs::path(*out) / frame_name(i)).string());
    }
    if (seq.roi) {
      save_roi_mask(*seq.roi, (fs::path(*out) / "roi.pgm").string());
    }
    std::cout << "wrote " << seq.frames.size() << " " << *kind << " frames to " << *out
              << "\n";
  });
}

void add_train(CLI::App& app)
{
  auto* cmd = app.add_subcommand("train", "Train the restoration network");
  auto config_path = std::make_shared<std::string>();
  auto data = std::make_shared<std::vector<std::string>>();
  auto out = std::make_shared<std::string>();
  cmd->add_option("--config", *config_path, "key=value training config")->required();
  cmd->add_option("--data", *data, "sequence directories")->required()->expected(-1);
  cmd->add_option("--out", *out, "checkpoint path (overrides config)");
  cmd->callback([=]() {
    TrainConfig cfg = parse_train_config(*config_path);
    if (!out->empty()) cfg.checkpoint_path = *out;
    std::vector<SequenceData> sequences;
    for (const std::string& dir : *data) {
      sequences.push_back(load_sequence(dir, cfg.fps));
    }
    train(cfg, sequences);
    std::cout << "checkpoint written to " << cfg.checkpoint_path << "\n";
  });
}

void add_restore(CLI::App& app)
{
  auto* cmd = app.add_subcommand(
      "restore", "Degrade a sequence, simulate events, and restore it with a checkpoint");
  auto model = std::make_shared<std::string>();
  auto in = std::make_shared<std::string>();
  auto truth = std::make_shared<std::string>();
  auto rect_str = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto report = std::make_shared<std::string>();
  auto budget = std::make_shared<uint64_t>(0);
  auto threshold = std::make_shared<double>(0.15);
  auto log_eps = std::make_shared<double>(1e-3);
  auto fps = std::make_shared<double>(25.0);
  auto rho = std::make_shared<double>(4.0);
  cmd->add_option("--model", *model, "checkpoint file")->required();
  cmd->add_option("--in", *in, "sequence directory (true frames)")->required();
  cmd->add_option("--truth", *truth, "ground-truth directory (defaults to --in)");
  cmd->add_option("--roi-rect", *rect_str, "report crop rectangle x,y,w,h");
  cmd->add_option("--out", *out, "directory for restored frames")->required();
  cmd->add_option("--report", *report, "CSV report path");
  cmd->add_option("--budget", *budget, "degradation bit budget per frame")->required();
  cmd->add_option("--threshold", *threshold, "event contrast threshold");
  cmd->add_option("--log-eps", *log_eps, "event log offset");
  cmd->add_option("--fps", *fps, "frame rate");
  cmd->add_option("--rho", *rho, "ROI priority multiplier");
  cmd->callback([=]() {
    const ModelParams params = load_checkpoint(*model);
    const SequenceData seq = load_sequence(*in, *fps);
    std::optional<std::vector<Frame>> truth_frames;
    if (!truth->empty()) truth_frames = load_dir_frames(*truth);
    std::optional<CropRect> rect;
    if (!rect_str->empty()) rect = parse_rect(*rect_str);

    const RestoreResult result =
        restore(params, seq, {*budget}, SimConfig(*threshold, *log_eps), *rho, rect,
                truth_frames ? &*truth_frames : nullptr);
    fs::create_directories(*out);
    for (size_t i = 0; i < result.restored.size(); ++i) {
      save_frame(result.restored[i], (fs::path(*out) / frame_name(i + 1)).string());
    }
    if (!report->empty()) {
      write_restore_csv(result, *report);
    }
    std::cout << report_summary(result.degraded_report, "degraded") << "\n";
    std::cout << report_summary(result.restored_report, "restored") << "\n";
  });
}

void add_evaluate(CLI::App& app)
{
  auto* cmd = app.add_subcommand("evaluate", "PSNR/SSIM between two frame directories");
  auto a = std::make_shared<std::string>();
  auto b = std::make_shared<std::string>();
  auto report = std::make_shared<std::string>();
  auto rect_str = std::make_shared<std::string>();
  cmd->add_option("--a", *a, "reference directory")->required();
  cmd->add_option("--b", *b, "test directory")->required();
  cmd->add_option("--report", *report, "CSV report path");
  cmd->add_option("--roi-rect", *rect_str, "report crop rectangle x,y,w,h");
  cmd->callback([=]() {
    std::optional<CropRect> rect;
    if (!rect_str->empty()) rect = parse_rect(*rect_str);
    const QualityReport rep =
        evaluate_frames(load_dir_frames(*a), load_dir_frames(*b), rect);
    if (!report->empty()) {
      write_report_csv(rep, *report);
    }
    std::cout << report_summary(rep, "a-vs-b") << "\n";
  });
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"EveRestNet pipeline: quadtree degradation, event simulation, restoration"};
  app.require_subcommand(1);
  add_degrade(app);
  add_simulate_events(app);
  add_synth(app);
  add_train(app);
  add_restore(app);
  add_evaluate(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
