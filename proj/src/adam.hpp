#pragma once

#include <vector>

#include "tensor.hpp"

namespace maskgan {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.99;  // exponential decay rates from the training setup
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // global-norm clip; <= 0 disables
};

// Adam with bias correction over a fixed parameter list. Parameters are
// rounded to float32 after every update so the checkpoint format is lossless.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg);

  // Applies one update from the accumulated grads, then zeroes them.
  // Throws on non-finite gradients.
  void step();

  long step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamConfig cfg_;
  long step_ = 0;
};

// clipped = g * min(1, c / ||g||), over the concatenation of all grads.
// Returns the pre-clip global norm.
double clip_global_norm(std::vector<Tensor>& params, double max_norm);

}  // namespace maskgan
