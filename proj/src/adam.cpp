#include "evrn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace evrn {

Adam::Adam(size_t n_params, AdamConfig cfg)
    : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0)
{
}

void Adam::step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads)
{
  if (params.size() != grads.size()) {
    throw std::invalid_argument("Adam::step: view count mismatch");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

  size_t offset = 0;
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != grads[i].size) {
      throw std::invalid_argument("Adam::step: shape mismatch in view " + params[i].name);
    }
    if (offset + params[i].size > m_.size()) {
      throw std::invalid_argument("Adam::step: views exceed optimizer size");
    }
    double* p = params[i].data;
    const double* g = grads[i].data;
    for (size_t j = 0; j < params[i].size; ++j) {
      double& m = m_[offset + j];
      double& v = v_[offset + j];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g[j];
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      p[j] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
    offset += params[i].size;
  }
  if (offset != m_.size()) {
    throw std::invalid_argument("Adam::step: views do not cover optimizer size");
  }
}

AdamSnapshot Adam::snapshot() const { return {step_, m_, v_}; }

void Adam::restore(const AdamSnapshot& snap)
{
  if (snap.m.size() != m_.size() || snap.v.size() != v_.size()) {
    throw std::invalid_argument("Adam::restore: snapshot size mismatch");
  }
  step_ = snap.step;
  m_ = snap.m;
  v_ = snap.v;
}

}  // namespace evrn
