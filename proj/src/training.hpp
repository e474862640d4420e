#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adam.hpp"
#include "config.hpp"
#include "models.hpp"

namespace maskgan {

// r_t = log(score_t) at in-scope positions, 0 elsewhere. In-scope means
// within the valid length and, under masked-only scope, at a masked position.
// Throws if any counted score lies outside (0,1).
std::vector<std::vector<double>> compute_rewards(
    const std::vector<std::vector<double>>& scores,
    const std::vector<Mask>& masks, RewardScope scope,
    const std::vector<int>& valid_len);

// R_t = r_t + gamma * R_{t+1}, R_{T} = 0 past the end.
std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double gamma);

struct TrainStats {
  std::vector<double> epoch_losses;
  double final_val_ppl = 0.0;
};

// Stage 1: decoder-as-LM maximum likelihood with teacher forcing. Afterwards
// the trained decoder weights seed the encoder.
TrainStats pretrain_lm(Seq2SeqModel& model,
                       const std::vector<TokenSeq>& train,
                       const std::vector<TokenSeq>& val, const Config& cfg);

// Stage 2 (MaskMLE): cross-entropy of the true tokens at masked positions,
// teacher-forced, conditioned on m(x) through the encoder.
TrainStats pretrain_infill(Seq2SeqModel& model,
                           const std::vector<TokenSeq>& train,
                           const std::vector<TokenSeq>& val,
                           const Config& cfg);

// REINFORCE-with-baseline surrogate: descends -sum_t A_t log G(x_hat_t) over
// in-scope positions, advantages treated as constants. Advantages must be in
// rollout.advantages. Returns the surrogate value.
double generator_pg_step(Seq2SeqModel& gen, const RolloutBatch& rollout,
                         Adam& opt);

// Per-position binary cross-entropy: real batch all-1 targets, fake batch
// 1 at unmasked positions and 0 at masked ones. Returns the mean loss.
double discriminator_step(Seq2SeqModel& disc, const MaskedBatch& real,
                          const RolloutBatch& fake, Adam& opt);
// The loss tensor itself (graph attached); discriminator_step backs it up
// with an optimizer update.
Tensor discriminator_loss_tensor(const Seq2SeqModel& disc,
                                 const MaskedBatch& real,
                                 const RolloutBatch& fake);

// Squared error of the critic values against the Monte-Carlo returns at
// in-scope positions. Returns the MSE.
double critic_step(Seq2SeqModel& disc, const RolloutBatch& rollout,
                   Adam& opt);
// Undefined tensor when nothing is in scope.
Tensor critic_loss_tensor(const Seq2SeqModel& disc,
                          const RolloutBatch& rollout);

struct CurriculumState {
  int current_len = 0;
  int max_len = 0;  // clamp: never exceeds the corpus max
  int window_size = 5;
  double threshold = 0.01;  // relative improvement below this = plateau
  std::vector<double> window;
  int increments = 0;
};

// Appends the metric; on plateau over a full window, increments the length
// (clamped) and resets the window. Returns true when the length advanced.
bool curriculum_advance(CurriculumState& state, double recent_metric);

// Expected reward per position using the full generator distribution: for
// every candidate token v, substitute it at position t, score with D and mix
// by G(v). Guarded to vocab <= 64 (every candidate costs a D pass).
std::vector<double> full_vocab_rewards(
    const Seq2SeqModel& disc, const TokenSeq& composite,
    const MaskedSeq& context,
    const std::vector<std::vector<double>>& gen_dist,
    const std::vector<double>& scope);

// Warning (not an abort) when unique-quadgram diversity drops under 5%.
std::optional<std::string> check_mode_collapse(
    const std::vector<TokenSeq>& samples);
// Warning when validation perplexity exceeds 4x its value at GAN start.
std::optional<std::string> check_divergence(double start_val_ppl,
                                            double current_val_ppl);

struct IterMetrics {
  int iter = 0;
  double d_loss = 0.0;
  double g_surrogate = 0.0;
  double mean_reward = 0.0;
  double mean_advantage = 0.0;
  double critic_mse = 0.0;
  double sample_ppl = 0.0;  // nan when no frozen LM is supplied
  static std::string csv_header();
  std::string to_csv_row() const;
};

struct UpdateCounters {
  long d_updates = 0;
  long g_updates = 0;
  long critic_updates = 0;
};

struct GanResult {
  std::vector<IterMetrics> history;
  UpdateCounters counters;
  std::vector<std::string> warnings;
  double start_val_ppl = 0.0;
  double final_val_ppl = 0.0;
  int curriculum_increments = 0;
};

// Stage 3 (MaskGAN): pretrains D on current-generator samples vs real text,
// then alternates d_steps_per_g discriminator updates with one generator and
// one critic update per iteration. Divergence and mode collapse raise
// warnings, not aborts; a last-good checkpoint is kept when a path is given.
GanResult gan_train_loop(
    Seq2SeqModel& gen, Seq2SeqModel& disc,
    const std::vector<TokenSeq>& train, const std::vector<TokenSeq>& val,
    const Config& cfg, const Seq2SeqModel* frozen_lm = nullptr,
    const std::string& last_good_ckpt_path = "",
    const std::function<void(const IterMetrics&)>& on_iter = {});

}  // namespace maskgan
