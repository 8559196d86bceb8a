#ifndef EVRN_ADAM_HPP
#define EVRN_ADAM_HPP

#include <cstdint>
#include <vector>

#include "evrn/param_view.hpp"

namespace evrn {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Serializable optimizer state, moments flattened in parameter-view order.
struct AdamSnapshot {
  uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

// Bias-corrected Adam over a fixed set of parameter views.
class Adam {
 public:
  explicit Adam(size_t n_params, AdamConfig cfg = AdamConfig{});

  // One update; `params` and `grads` must cover the same layout the
  // optimizer was sized for, in the same order every call.
  void step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads);

  uint64_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

  AdamSnapshot snapshot() const;
  void restore(const AdamSnapshot& snap);

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  uint64_t step_ = 0;
};

}  // namespace evrn

#endif  // EVRN_ADAM_HPP
