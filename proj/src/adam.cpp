#include "adam.hpp"

#include <cmath>
#include <stdexcept>

namespace maskgan {

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  for (auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

double clip_global_norm(std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params)
    for (double g : p.grads()) sq += g * g;
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double s = max_norm / norm;
    for (auto& p : params)
      for (auto& g : p.grads()) g *= s;
  }
  return norm;
}

void Adam::step() {
  for (auto& p : params_)
    for (double g : p.grads())
      if (!std::isfinite(g))
        throw std::runtime_error("adam: non-finite gradient at step " +
                                 std::to_string(step_ + 1));
  clip_global_norm(params_, cfg_.clip_norm);
  ++step_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    auto vals = params_[pi].values();
    auto grads = params_[pi].grads();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < vals.size(); ++i) {
      double g = grads[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      vals[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    params_[pi].round_to_float32();
    params_[pi].zero_grad();
  }
}

}  // namespace maskgan
