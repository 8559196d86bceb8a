#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "evrn/errors.hpp"
#include "evrn/image_io.hpp"
#include "evrn/pipeline.hpp"
#include "evrn/synth.hpp"
#include "test_util.hpp"

using namespace evrn;
using test::TempDir;

namespace {

std::string slurp(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<double> read_loss_column(const std::string& path)
{
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> losses;
  while (std::getline(in, line)) {
    const size_t comma = line.find(',');
    losses.push_back(std::stod(line.substr(comma + 1)));
  }
  return losses;
}

SequenceData constant_sequence(int n_frames, int size, double value)
{
  SequenceData seq;
  for (int i = 0; i < n_frames; ++i) seq.frames.emplace_back(size, size, value);
  return seq;
}

}  // namespace

TEST_CASE("synthetic sequences are deterministic in the seed")
{
  for (SynthKind kind : {SynthKind::kMovingSquares, SynthKind::kDriftingGradient,
                         SynthKind::kTexturePan}) {
    SynthOptions opt;
    opt.n_frames = 4;
    opt.height = 32;
    opt.width = 40;
    opt.seed = 99;
    const SequenceData a = synth_sequence(kind, opt);
    const SequenceData b = synth_sequence(kind, opt);
    REQUIRE(a.frames.size() == 4);
    for (size_t t = 0; t < a.frames.size(); ++t) {
      for (size_t i = 0; i < a.frames[t].size(); ++i) {
        CHECK(a.frames[t].data[i] == b.frames[t].data[i]);
      }
    }
    opt.seed = 100;
    const SequenceData c = synth_sequence(kind, opt);
    bool any_diff = false;
    for (size_t i = 0; i < a.frames[0].size(); ++i) {
      any_diff |= a.frames[0].data[i] != c.frames[0].data[i];
    }
    CHECK(any_diff);
  }
}

TEST_CASE("moving squares translate by their velocity")
{
  SynthOptions opt;
  opt.n_frames = 3;
  opt.height = 48;
  opt.width = 48;
  opt.seed = 3;
  opt.n_squares = 1;
  opt.velocity = {{1, 0}};
  const SequenceData seq = synth_sequence(SynthKind::kMovingSquares, opt);
  REQUIRE(seq.roi.has_value());

  // Pixels strictly inside the object at time t shift by one column.
  const Frame& f0 = seq.frames[0];
  const Frame& f1 = seq.frames[1];
  int checked = 0;
  for (int y = 1; y < 47; ++y) {
    for (int x = 1; x < 46; ++x) {
      const double v = f0.at(y, x);
      const bool inside = v == f0.at(y, x + 1) && v == f0.at(y + 1, x) &&
                          v == f0.at(y - 1, x) && v == f0.at(y, x - 1) &&
                          seq.roi->at(y, x) == 1 && (v < 0.16 || v > 0.84);
      if (inside) {
        CHECK(f1.at(y, x + 1) == v);
        ++checked;
      }
    }
  }
  CHECK(checked > 16);
}

TEST_CASE("synthetic generator validates its options")
{
  SynthOptions opt;
  opt.height = 16;  // too small
  CHECK_THROWS_AS(synth_sequence(SynthKind::kMovingSquares, opt), std::invalid_argument);
  opt.height = 32;
  opt.n_frames = 1;
  CHECK_THROWS_AS(synth_sequence(SynthKind::kTexturePan, opt), std::invalid_argument);
  opt.n_frames = 2;
  CHECK_NOTHROW(synth_sequence(SynthKind::kDriftingGradient, opt));
  CHECK_THROWS_AS(parse_synth_kind("bouncing-balls"), std::invalid_argument);
}

TEST_CASE("prepare on a static sequence has silent event channels")
{
  const SequenceData seq = constant_sequence(2, 32, 128.0 / 255.0);
  const std::vector<Sample> samples = prepare(seq, {9}, SimConfig{});
  REQUIRE(samples.size() == 1);
  const Sample& s = samples[0];
  for (int c = 2; c < 6; ++c) {
    for (size_t i = 0; i < static_cast<size_t>(32 * 32); ++i) {
      CHECK(s.input.channel(c)[i] == 0.0);
    }
  }
  for (double v : s.ebar.data) CHECK(v == 0.0);
  // Constant frames survive degradation, so the target equals channel 0.
  for (size_t i = 0; i < s.target.size(); ++i) {
    CHECK(s.target.data[i] == s.input.channel(0)[i]);
  }
}

TEST_CASE("prepare yields one sample per consecutive pair")
{
  SynthOptions opt;
  opt.n_frames = 7;
  opt.height = 32;
  opt.width = 32;
  opt.seed = 8;
  const SequenceData seq = synth_sequence(SynthKind::kMovingSquares, opt);
  const std::vector<Sample> samples = prepare(seq, {400}, SimConfig{});
  CHECK(samples.size() == 6);
}

TEST_CASE("prepare matches independently recomputed pieces")
{
  SynthOptions opt;
  opt.n_frames = 5;
  opt.height = 32;
  opt.width = 32;
  opt.seed = 12;
  const SequenceData seq = synth_sequence(SynthKind::kMovingSquares, opt);
  const SimConfig sim;
  const BitBudget budget{500};
  const std::vector<Sample> samples = prepare(seq, budget, sim);

  // Re-simulate the whole event history with a fresh simulator and rebuild
  // the count maps; degraded channels recompute directly.
  EventSimulator replay(sim);
  const RoiMask* roi = seq.roi ? &*seq.roi : nullptr;
  for (size_t t = 1; t < seq.frames.size(); ++t) {
    const double t0 = seq.timestamp(t - 1), t1 = seq.timestamp(t);
    const EventStream stream = replay.step(seq.frames[t - 1], seq.frames[t], t0, t1);
    const Frame ebar = event_count_map(bin_events(stream, t0, t1, 32, 32));
    const Sample& s = samples[t - 1];
    for (size_t i = 0; i < ebar.size(); ++i) CHECK(ebar.data[i] == s.ebar.data[i]);

    const Frame deg_t = degrade(seq.frames[t], budget, roi);
    const Frame deg_p = degrade(seq.frames[t - 1], budget, roi);
    for (size_t i = 0; i < deg_t.size(); ++i) {
      CHECK(s.input.channel(0)[i] == deg_t.data[i]);
      CHECK(s.input.channel(1)[i] == deg_p.data[i]);
    }
  }
}

TEST_CASE("train on a constant sample keeps the loss at zero")
{
  TempDir dir("pipeline");
  TrainConfig cfg;
  cfg.budgets = {64};
  cfg.crop = 16;
  cfg.batch = 2;
  cfg.iterations = 8;
  cfg.seed = 5;
  cfg.loss = {0.0, 0.0};
  cfg.checkpoint_every = 0;
  cfg.checkpoint_path = dir.file("const.evrn");
  train(cfg, {constant_sequence(2, 32, 64.0 / 255.0)});
  const std::vector<double> losses = read_loss_column(cfg.checkpoint_path + ".log.csv");
  REQUIRE(losses.size() == 8);
  for (double l : losses) CHECK(l == 0.0);
}

TEST_CASE("training under plain SSE reduces the loss")
{
  TempDir dir("pipeline");
  SynthOptions opt;
  opt.n_frames = 6;
  opt.height = 32;
  opt.width = 32;
  opt.seed = 21;
  const SequenceData seq = synth_sequence(SynthKind::kMovingSquares, opt);

  TrainConfig cfg;
  cfg.budgets = {250};
  cfg.crop = 16;
  cfg.batch = 2;
  cfg.iterations = 150;
  cfg.seed = 9;
  cfg.loss = {0.0, 0.0};
  cfg.checkpoint_every = 0;
  cfg.checkpoint_path = dir.file("sse.evrn");
  train(cfg, {seq});

  const std::vector<double> losses = read_loss_column(cfg.checkpoint_path + ".log.csv");
  REQUIRE(losses.size() == 150);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 10; ++i) head += losses[i];
  for (int i = 0; i < 10; ++i) tail += losses[losses.size() - 1 - i];
  CHECK(tail < head);
  CHECK(tail < 0.7 * head);
}

TEST_CASE("training is deterministic in the seed")
{
  TempDir dir("pipeline");
  SynthOptions opt;
  opt.n_frames = 4;
  opt.height = 32;
  opt.width = 32;
  opt.seed = 31;
  const SequenceData seq = synth_sequence(SynthKind::kMovingSquares, opt);

  TrainConfig cfg;
  cfg.budgets = {300, 700};
  cfg.crop = 16;
  cfg.batch = 2;
  cfg.iterations = 12;
  cfg.seed = 77;
  cfg.checkpoint_every = 0;
  cfg.checkpoint_path = dir.file("a.evrn");
  train(cfg, {seq});
  TrainConfig cfg2 = cfg;
  cfg2.checkpoint_path = dir.file("b.evrn");
  train(cfg2, {seq});

  CHECK(slurp(dir.file("a.evrn")) == slurp(dir.file("b.evrn")));
  CHECK(slurp(dir.file("a.evrn") + ".log.csv") == slurp(dir.file("b.evrn") + ".log.csv"));

  TrainConfig cfg3 = cfg;
  cfg3.seed = 78;
  cfg3.checkpoint_path = dir.file("c.evrn");
  train(cfg3, {seq});
  CHECK(slurp(dir.file("a.evrn")) != slurp(dir.file("c.evrn")));
}

TEST_CASE("train validates its configuration")
{
  TrainConfig cfg;
  cfg.crop = 8;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.crop = 64;
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.iterations = 1;
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS_AS(train(cfg, {}), std::invalid_argument);
}

TEST_CASE("training aborts on a diverging objective")
{
  TempDir dir("pipeline");
  SynthOptions opt;
  opt.n_frames = 3;
  opt.height = 32;
  opt.width = 32;
  opt.seed = 41;
  const SequenceData seq = synth_sequence(SynthKind::kDriftingGradient, opt);
  TrainConfig cfg;
  cfg.budgets = {200};
  cfg.crop = 16;
  cfg.batch = 1;
  cfg.iterations = 60;
  cfg.seed = 1;
  cfg.adam.lr = 1e308;  // overflows the activations within a step or two
  cfg.checkpoint_every = 0;
  cfg.checkpoint_path = dir.file("diverge.evrn");
  CHECK_THROWS_AS(train(cfg, {seq}), std::runtime_error);
}

TEST_CASE("config files parse into TrainConfig")
{
  TempDir dir("pipeline");
  const std::string path = dir.file("train.cfg");
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "budgets = 250, 600, 1500\n";
    out << "crop=32\n";
    out << "batch = 4\n";
    out << "iterations = 2000\n";
    out << "seed = 7\n";
    out << "lambda_fid = 0.5\n";
    out << "lambda_tv = 0.05\n";
    out << "lr = 5e-4\n";
    out << "threshold = 0.2  # trailing comment\n";
    out << "checkpoint = out.evrn\n";
  }
  const TrainConfig cfg = parse_train_config(path);
  CHECK(cfg.budgets == std::vector<uint64_t>{250, 600, 1500});
  CHECK(cfg.crop == 32);
  CHECK(cfg.batch == 4);
  CHECK(cfg.iterations == 2000);
  CHECK(cfg.seed == 7);
  CHECK(cfg.loss.lambda_fid == 0.5);
  CHECK(cfg.loss.lambda_tv == 0.05);
  CHECK(cfg.adam.lr == 5e-4);
  CHECK(cfg.sim.threshold == 0.2);
  CHECK(cfg.checkpoint_path == "out.evrn");

  std::ofstream bad(dir.file("bad.cfg"));
  bad << "mystery_knob = 3\n";
  bad.close();
  CHECK_THROWS_AS(parse_train_config(dir.file("bad.cfg")), FormatError);
  std::ofstream bad2(dir.file("bad2.cfg"));
  bad2 << "crop = not-a-number\n";
  bad2.close();
  CHECK_THROWS_AS(parse_train_config(dir.file("bad2.cfg")), FormatError);
}

TEST_CASE("restore with the identity checkpoint reports equal columns")
{
  SynthOptions opt;
  opt.n_frames = 4;
  opt.height = 32;
  opt.width = 32;
  opt.seed = 51;
  const SequenceData seq = synth_sequence(SynthKind::kMovingSquares, opt);
  const ModelParams params = ModelParams::initialized(3);  // zero tail
  const RestoreResult result = restore(params, seq, {400}, SimConfig{});

  REQUIRE(result.restored.size() == 3);
  REQUIRE(result.degraded_report.rows.size() == 3);
  REQUIRE(result.restored_report.rows.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(result.degraded_report.rows[i].psnr_value ==
          result.restored_report.rows[i].psnr_value);
    CHECK(result.degraded_report.rows[i].ssim_value ==
          result.restored_report.rows[i].ssim_value);
  }

  // Degraded column equals an independent psnr of an independent degrade.
  const RoiMask* roi = seq.roi ? &*seq.roi : nullptr;
  for (size_t t = 1; t < seq.frames.size(); ++t) {
    const double expected = psnr(seq.frames[t], degrade(seq.frames[t], {400}, roi));
    CHECK(result.degraded_report.rows[t - 1].psnr_value == expected);
  }
}

TEST_CASE("restore fills ROI crop metrics when a rectangle is given")
{
  TempDir dir("pipeline");
  SynthOptions opt;
  opt.n_frames = 3;
  opt.height = 32;
  opt.width = 32;
  opt.seed = 52;
  const SequenceData seq = synth_sequence(SynthKind::kTexturePan, opt);
  const ModelParams params = ModelParams::initialized(4);
  const CropRect rect{4, 4, 16, 16};
  const RestoreResult result = restore(params, seq, {300}, SimConfig{}, 4.0, rect);
  for (const QualityRow& row : result.restored_report.rows) {
    REQUIRE(row.psnr_roi.has_value());
    REQUIRE(row.ssim_roi.has_value());
  }
  write_restore_csv(result, dir.file("report.csv"));
  std::ifstream in(dir.file("report.csv"));
  std::string header, row;
  std::getline(in, header);
  CHECK(header ==
        "frame_index,psnr_degraded,ssim_degraded,psnr_restored,ssim_restored,"
        "psnr_degraded_roi,ssim_degraded_roi,psnr_restored_roi,ssim_restored_roi");
  std::getline(in, row);
  CHECK(std::count(row.begin(), row.end(), ',') == 8);
  CHECK(row.substr(0, 2) == "1,");
}

TEST_CASE("eval-mode restoration is local: crops match full frames away from the halo")
{
  test::Rng rng(61);
  ModelParams params = ModelParams::initialized(11);
  for (double& v : params.tail.weights) v = rng.uniform(-0.3, 0.3);
  params.tail.bias[0] = 0.02;

  Tensor3 full(6, 48, 48);
  for (int c = 0; c < 2; ++c) {
    for (size_t i = 0; i < static_cast<size_t>(48 * 48); ++i) {
      full.channel(c)[i] = rng.uniform();
    }
  }
  for (int c = 2; c < 6; ++c) {
    for (size_t i = 0; i < static_cast<size_t>(48 * 48); ++i) {
      full.channel(c)[i] = static_cast<double>(static_cast<int>(rng.raw() % 3)) - 1.0;
    }
  }
  const int cx = 8, cy = 8, cs = 32;
  Tensor3 crop(6, cs, cs);
  for (int c = 0; c < 6; ++c) {
    for (int y = 0; y < cs; ++y) {
      for (int x = 0; x < cs; ++x) {
        crop.at(c, y, x) = full.at(c, cy + y, cx + x);
      }
    }
  }

  Network net(params);
  const Frame r_full = net.restore_frame(full);
  const Frame r_crop = net.restore_frame(crop);

  const int halo = 11;
  for (int y = halo; y < cs - halo; ++y) {
    for (int x = halo; x < cs - halo; ++x) {
      CHECK(r_crop.at(y, x) ==
            doctest::Approx(r_full.at(cy + y, cx + x)).epsilon(1e-10));
    }
  }

  // The loss restricted to the shared interior matches as well.
  const CropRect interior{halo, halo, cs - 2 * halo, cs - 2 * halo};
  Frame truth(48, 48);
  for (double& v : truth.data) v = rng.uniform();
  Frame ebar(48, 48);
  for (double& v : ebar.data) v = static_cast<double>(rng.raw() % 5);
  Frame truth_crop(cs, cs), ebar_crop(cs, cs);
  for (int y = 0; y < cs; ++y) {
    for (int x = 0; x < cs; ++x) {
      truth_crop.at(y, x) = truth.at(cy + y, cx + x);
      ebar_crop.at(y, x) = ebar.at(cy + y, cx + x);
    }
  }
  const Frame r_full_at_crop = crop_frame(r_full, {cx, cy, cs, cs});
  const LossWeights w;
  const double loss_full = total_loss(crop_frame(truth_crop, interior),
                                      crop_frame(r_full_at_crop, interior),
                                      crop_frame(ebar_crop, interior), w)
                               .value;
  const double loss_crop = total_loss(crop_frame(truth_crop, interior),
                                      crop_frame(r_crop, interior),
                                      crop_frame(ebar_crop, interior), w)
                               .value;
  CHECK(loss_crop == doctest::Approx(loss_full).epsilon(1e-9));
}

TEST_CASE("sequence directories load sorted frames with the ROI mask")
{
  TempDir dir("pipeline");
  SynthOptions opt;
  opt.n_frames = 3;
  opt.height = 32;
  opt.width = 32;
  opt.seed = 71;
  const SequenceData seq = synth_sequence(SynthKind::kMovingSquares, opt);
  char name[32];
  for (size_t i = 0; i < seq.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%06zu.pgm", i);
    save_frame(seq.frames[i], dir.file(name));
  }
  save_roi_mask(*seq.roi, dir.file("roi.pgm"));

  const SequenceData back = load_sequence(dir.path().string());
  REQUIRE(back.frames.size() == 3);
  REQUIRE(back.roi.has_value());
  for (size_t t = 0; t < 3; ++t) {
    const Frame q = test::quantized(seq.frames[t]);
    for (size_t i = 0; i < q.size(); ++i) CHECK(back.frames[t].data[i] == q.data[i]);
  }
  for (size_t i = 0; i < seq.roi->data.size(); ++i) {
    CHECK(back.roi->data[i] == seq.roi->data[i]);
  }

  CHECK_THROWS_AS(load_sequence(dir.file("missing")), std::invalid_argument);
}

TEST_CASE("evaluate_frames compares two frame lists")
{
  test::Rng rng(81);
  std::vector<Frame> a, b;
  for (int i = 0; i < 3; ++i) {
    a.push_back(test::random_frame(rng, 16, 16));
    b.push_back(a.back());
  }
  const QualityReport same = evaluate_frames(a, b);
  REQUIRE(same.rows.size() == 3);
  for (const QualityRow& row : same.rows) {
    CHECK(std::isinf(row.psnr_value));
    CHECK(row.ssim_value == 1.0);
  }
  b.pop_back();
  CHECK_THROWS_AS(evaluate_frames(a, b), std::invalid_argument);
}
