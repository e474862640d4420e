#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "models.hpp"

namespace maskgan {

enum class RewardScope { kMaskedOnly, kAllPositions };

// Full run configuration across the three training stages. Serializes to and
// from plain-text key=value lines ('#' starts a comment).
struct Config {
  uint64_t seed = 42;

  // model
  int vocab_max = 1000;
  int max_len = 20;
  int embed = 64;
  int hidden = 64;
  int layers = 2;
  double dropout = 0.1;
  bool share_gd_embeddings = true;

  // optimizer (Adam defaults follow the training setup: beta1 0.99)
  double beta1 = 0.99;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  double lm_lr = 1e-3;
  double infill_lr = 1e-3;
  double g_lr = 1e-4;
  double d_lr = 1e-3;
  double c_lr = 1e-3;

  // stage lengths
  int batch_size = 32;
  int lm_epochs = 10;
  int infill_epochs = 10;
  int d_pretrain_steps = 500;
  int gan_iters = 100;

  // adversarial training
  double gamma = 0.9;
  double mask_rate = 0.5;
  MaskRegime mask_regime = MaskRegime::kContiguous;
  int d_steps_per_g = 3;
  RewardScope reward_scope = RewardScope::kMaskedOnly;
  bool full_vocab_rewards = false;
  bool curriculum = false;
  double curriculum_threshold = 0.01;  // relative improvement
  int curriculum_window = 5;           // evaluations per plateau check
  double val_fraction = 0.1;

  ModelDims model_dims(int vocab_size) const {
    return ModelDims{vocab_size, embed, hidden, layers};
  }

  void set(const std::string& key, const std::string& value);
  void load_file(const std::string& path);
  std::string to_key_values() const;  // stable key order
  void validate() const;              // throws on out-of-range values
};

// Run manifest: config snapshot + stage bookkeeping, written before training
// mutates any state.
struct RunManifest {
  Config config;
  std::string stage;
  std::string version = "maskgan-0.1.0";
  std::vector<std::string> checkpoints;

  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

}  // namespace maskgan
