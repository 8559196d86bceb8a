#include "evrn/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "evrn/errors.hpp"

namespace evrn {

std::vector<Sample> prepare(const SequenceData& seq, BitBudget budget, const SimConfig& sim,
                            double rho)
{
  seq.validate();
  const RoiMask* roi = seq.roi ? &*seq.roi : nullptr;
  std::vector<Frame> degraded;
  degraded.reserve(seq.frames.size());
  for (const Frame& f : seq.frames) {
    degraded.push_back(degrade(f, budget, roi, rho));
  }

  EventSimulator simulator(sim);
  std::vector<Sample> samples;
  const int h = seq.frames.front().height;
  const int w = seq.frames.front().width;
  for (size_t t = 1; t < seq.frames.size(); ++t) {
    const double t0 = seq.timestamp(t - 1);
    const double t1 = seq.timestamp(t);
    const EventStream stream = simulator.step(seq.frames[t - 1], seq.frames[t], t0, t1);
    const EventFrameStack stack = bin_events(stream, t0, t1, h, w);

    Sample s;
    s.input = Tensor3(6, h, w);
    std::copy(degraded[t].data.begin(), degraded[t].data.end(), s.input.channel(0));
    std::copy(degraded[t - 1].data.begin(), degraded[t - 1].data.end(), s.input.channel(1));
    for (int b = 0; b < 4; ++b) {
      std::copy(stack.bins[b].data.begin(), stack.bins[b].data.end(),
                s.input.channel(2 + b));
    }
    s.target = seq.frames[t];
    s.ebar = event_count_map(stack);
    samples.push_back(std::move(s));
  }
  return samples;
}

void TrainConfig::validate() const
{
  if (budgets.empty()) throw std::invalid_argument("train config: no budgets");
  if (crop < 16) throw std::invalid_argument("train config: crop must be >= 16");
  if (batch < 1) throw std::invalid_argument("train config: batch must be >= 1");
  if (iterations < 1) throw std::invalid_argument("train config: iterations must be >= 1");
  if (fps <= 0.0) throw std::invalid_argument("train config: fps must be positive");
  if (checkpoint_path.empty()) {
    throw std::invalid_argument("train config: checkpoint path missing");
  }
}

TrainConfig parse_train_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw FormatError(path + ": cannot open config file");
  }
  TrainConfig cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const size_t eq = line.find('=');
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t\r");
      const size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    if (eq == std::string::npos) {
      if (!trim(line).empty()) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": expected key=value");
      }
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "budgets") {
        cfg.budgets.clear();
        std::istringstream vs(value);
        std::string tok;
        while (std::getline(vs, tok, ',')) {
          cfg.budgets.push_back(std::stoull(trim(tok)));
        }
      } else if (key == "crop") {
        cfg.crop = std::stoi(value);
      } else if (key == "batch") {
        cfg.batch = std::stoi(value);
      } else if (key == "iterations") {
        cfg.iterations = std::stoi(value);
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "fps") {
        cfg.fps = std::stod(value);
      } else if (key == "rho") {
        cfg.rho = std::stod(value);
      } else if (key == "threshold") {
        cfg.sim.threshold = std::stod(value);
      } else if (key == "log_eps") {
        cfg.sim.log_eps = std::stod(value);
      } else if (key == "lambda_fid") {
        cfg.loss.lambda_fid = std::stod(value);
      } else if (key == "lambda_tv") {
        cfg.loss.lambda_tv = std::stod(value);
      } else if (key == "lr") {
        cfg.adam.lr = std::stod(value);
      } else if (key == "beta1") {
        cfg.adam.beta1 = std::stod(value);
      } else if (key == "beta2") {
        cfg.adam.beta2 = std::stod(value);
      } else if (key == "adam_eps") {
        cfg.adam.eps = std::stod(value);
      } else if (key == "checkpoint_every") {
        cfg.checkpoint_every = std::stoi(value);
      } else if (key == "checkpoint") {
        cfg.checkpoint_path = value;
      } else if (key == "log") {
        cfg.log_path = value;
      } else {
        throw FormatError(path + ":" + std::to_string(line_no) + ": unknown key '" + key +
                          "'");
      }
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": bad value for '" + key +
                        "'");
    }
  }
  return cfg;
}

namespace {

class TrainRng {
 public:
  explicit TrainRng(uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  size_t pick(size_t n)
  {
    size_t k = static_cast<size_t>(uniform() * static_cast<double>(n));
    return k >= n ? n - 1 : k;
  }

 private:
  std::mt19937_64 gen_;
};

void crop_channels(const Sample& s, int y0, int x0, int ch, int cw, int b, Tensor4& x,
                   Frame& target, Frame& ebar)
{
  const int w = s.target.width;
  for (int c = 0; c < 6; ++c) {
    const double* src = s.input.channel(c);
    double* dst = x.at(b, c);
    for (int y = 0; y < ch; ++y) {
      const double* srow = src + static_cast<size_t>(y0 + y) * w + x0;
      std::copy(srow, srow + cw, dst + static_cast<size_t>(y) * cw);
    }
  }
  target = Frame(ch, cw);
  ebar = Frame(ch, cw);
  for (int y = 0; y < ch; ++y) {
    const double* trow = s.target.data.data() + static_cast<size_t>(y0 + y) * w + x0;
    const double* erow = s.ebar.data.data() + static_cast<size_t>(y0 + y) * w + x0;
    std::copy(trow, trow + cw, target.data.begin() + static_cast<size_t>(y) * cw);
    std::copy(erow, erow + cw, ebar.data.begin() + static_cast<size_t>(y) * cw);
  }
}

}  // namespace

void train(const TrainConfig& config, const std::vector<SequenceData>& sequences)
{
  config.validate();
  if (sequences.empty()) {
    throw std::invalid_argument("train: no sequences");
  }

  // Materialize the sample pool: every sequence at every budget.
  std::vector<Sample> pool;
  for (const SequenceData& seq : sequences) {
    SequenceData timed = seq;
    timed.fps = config.fps;
    for (uint64_t bits : config.budgets) {
      std::vector<Sample> samples = prepare(timed, BitBudget{bits}, config.sim, config.rho);
      for (Sample& s : samples) pool.push_back(std::move(s));
    }
  }
  if (pool.empty()) {
    throw std::invalid_argument("train: empty sample pool");
  }

  const int frame_h = pool.front().target.height;
  const int frame_w = pool.front().target.width;
  const int ch = std::min(config.crop, frame_h);
  const int cw = std::min(config.crop, frame_w);

  Network net(ModelParams::initialized(config.seed));
  std::vector<ParamView> params = trainable_views(net.params());
  size_t n_params = 0;
  for (const ParamView& v : params) n_params += v.size;
  Adam adam(n_params, config.adam);

  const std::string log_path =
      config.log_path.empty() ? config.checkpoint_path + ".log.csv" : config.log_path;
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) {
    throw std::runtime_error(log_path + ": cannot open for writing");
  }
  log << "iteration,loss\n";

  TrainRng rng(config.seed);
  Tensor4 x(config.batch, 6, ch, cw);
  std::vector<Frame> targets(config.batch), ebars(config.batch);

  for (int it = 1; it <= config.iterations; ++it) {
    for (int b = 0; b < config.batch; ++b) {
      const Sample& s = pool[rng.pick(pool.size())];
      const int y0 = static_cast<int>(rng.pick(frame_h - ch + 1));
      const int x0 = static_cast<int>(rng.pick(frame_w - cw + 1));
      crop_channels(s, y0, x0, ch, cw, b, x, targets[b], ebars[b]);
    }

    const Tensor4& y = net.forward(x, Mode::kTrain);
    double batch_loss = 0.0;
    Tensor4 upstream(config.batch, 1, ch, cw);
    Frame restored(ch, cw);
    for (int b = 0; b < config.batch; ++b) {
      const double* yp = y.at(b, 0);
      std::copy(yp, yp + restored.size(), restored.data.begin());
      const LossResult res = total_loss(targets[b], restored, ebars[b], config.loss);
      batch_loss += res.value;
      std::copy(res.grad.data.begin(), res.grad.data.end(), upstream.at(b, 0));
    }
    if (!std::isfinite(batch_loss)) {
      throw std::runtime_error("train: non-finite loss " + std::to_string(batch_loss) +
                               " at iteration " + std::to_string(it));
    }

    ModelParams grads = net.backward(upstream);
    const std::vector<ParamView> grad_views = trainable_views(grads);
    params = trainable_views(net.params());
    adam.step(params, grad_views);

    log << it << ',' << format_metric(batch_loss) << '\n';
    if (config.checkpoint_every > 0 && it % config.checkpoint_every == 0 &&
        it != config.iterations) {
      const AdamSnapshot snap = adam.snapshot();
      save_checkpoint(net.params(), config.checkpoint_path, &snap);
    }
  }

  const AdamSnapshot snap = adam.snapshot();
  save_checkpoint(net.params(), config.checkpoint_path, &snap);
}

RestoreResult restore(const ModelParams& params, const SequenceData& seq, BitBudget budget,
                      const SimConfig& sim, double rho,
                      const std::optional<CropRect>& roi_rect,
                      const std::vector<Frame>* truth)
{
  seq.validate();
  if (truth && truth->size() != seq.frames.size()) {
    throw std::invalid_argument("restore: ground-truth frame count mismatch");
  }
  const std::vector<Frame>& gt = truth ? *truth : seq.frames;

  const RoiMask* roi = seq.roi ? &*seq.roi : nullptr;
  std::vector<Frame> degraded;
  degraded.reserve(seq.frames.size());
  for (const Frame& f : seq.frames) {
    degraded.push_back(degrade(f, budget, roi, rho));
  }

  Network net(params);
  EventSimulator simulator(sim);
  const int h = seq.frames.front().height;
  const int w = seq.frames.front().width;

  RestoreResult result;
  for (size_t t = 1; t < seq.frames.size(); ++t) {
    const double t0 = seq.timestamp(t - 1);
    const double t1 = seq.timestamp(t);
    const EventStream stream = simulator.step(seq.frames[t - 1], seq.frames[t], t0, t1);
    const EventFrameStack stack = bin_events(stream, t0, t1, h, w);

    Tensor3 volume(6, h, w);
    std::copy(degraded[t].data.begin(), degraded[t].data.end(), volume.channel(0));
    std::copy(degraded[t - 1].data.begin(), degraded[t - 1].data.end(), volume.channel(1));
    for (int b = 0; b < 4; ++b) {
      std::copy(stack.bins[b].data.begin(), stack.bins[b].data.end(),
                volume.channel(2 + b));
    }
    Frame restored = net.restore_frame(volume);

    QualityRow deg_row, res_row;
    deg_row.frame_index = static_cast<int>(t);
    res_row.frame_index = static_cast<int>(t);
    deg_row.psnr_value = psnr(gt[t], degraded[t]);
    deg_row.ssim_value = ssim(gt[t], degraded[t]);
    res_row.psnr_value = psnr(gt[t], restored);
    res_row.ssim_value = ssim(gt[t], restored);
    if (roi_rect) {
      const Frame gt_crop = crop_frame(gt[t], *roi_rect);
      const Frame deg_crop = crop_frame(degraded[t], *roi_rect);
      const Frame res_crop = crop_frame(restored, *roi_rect);
      deg_row.psnr_roi = psnr(gt_crop, deg_crop);
      deg_row.ssim_roi = ssim(gt_crop, deg_crop);
      res_row.psnr_roi = psnr(gt_crop, res_crop);
      res_row.ssim_roi = ssim(gt_crop, res_crop);
    }
    result.degraded_report.rows.push_back(deg_row);
    result.restored_report.rows.push_back(res_row);
    result.restored.push_back(std::move(restored));
  }
  return result;
}

void write_restore_csv(const RestoreResult& result, const std::string& path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error(path + ": cannot open for writing");
  }
  out << "frame_index,psnr_degraded,ssim_degraded,psnr_restored,ssim_restored,"
         "psnr_degraded_roi,ssim_degraded_roi,psnr_restored_roi,ssim_restored_roi\n";
  for (size_t i = 0; i < result.restored_report.rows.size(); ++i) {
    const QualityRow& d = result.degraded_report.rows[i];
    const QualityRow& r = result.restored_report.rows[i];
    out << d.frame_index << ',' << format_metric(d.psnr_value) << ','
        << format_metric(d.ssim_value) << ',' << format_metric(r.psnr_value) << ','
        << format_metric(r.ssim_value) << ',';
    if (d.psnr_roi) out << format_metric(*d.psnr_roi);
    out << ',';
    if (d.ssim_roi) out << format_metric(*d.ssim_roi);
    out << ',';
    if (r.psnr_roi) out << format_metric(*r.psnr_roi);
    out << ',';
    if (r.ssim_roi) out << format_metric(*r.ssim_roi);
    out << '\n';
  }
}

QualityReport evaluate_frames(const std::vector<Frame>& a, const std::vector<Frame>& b,
                              const std::optional<CropRect>& roi_rect)
{
  if (a.size() != b.size()) {
    throw std::invalid_argument("evaluate: frame counts differ");
  }
  QualityReport report;
  for (size_t i = 0; i < a.size(); ++i) {
    QualityRow row;
    row.frame_index = static_cast<int>(i);
    row.psnr_value = psnr(a[i], b[i]);
    row.ssim_value = ssim(a[i], b[i]);
    if (roi_rect) {
      const Frame ca = crop_frame(a[i], *roi_rect);
      const Frame cb = crop_frame(b[i], *roi_rect);
      row.psnr_roi = psnr(ca, cb);
      row.ssim_roi = ssim(ca, cb);
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace evrn
