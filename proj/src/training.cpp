#include "training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "checkpoint.hpp"
#include "eval.hpp"

namespace maskgan {

namespace {

Tensor weight_col(const std::vector<double>& w) {
  return Tensor::from(static_cast<int>(w.size()), 1, w);
}

std::vector<Tensor> lm_params(const Seq2SeqModel& m) {
  std::vector<Tensor> out{m.embedding, m.out_bias};
  for (const auto& l : m.decoder.layers()) {
    out.push_back(l.wx);
    out.push_back(l.wh);
    out.push_back(l.b);
  }
  return out;
}

std::vector<Tensor> critic_params(const Seq2SeqModel& disc) {
  std::vector<Tensor> out;
  for (auto& [name, t] : disc.named_params())
    if (name != "d_w" && name != "d_b") out.push_back(t);
  return out;
}

AdamConfig adam_cfg(const Config& cfg, double lr) {
  return AdamConfig{lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.clip_norm};
}

std::vector<TokenSeq> truncate_corpus(const std::vector<TokenSeq>& data,
                                      int max_len) {
  std::vector<TokenSeq> out;
  for (const auto& s : data) {
    TokenSeq t(s.begin(),
               s.begin() + std::min<size_t>(s.size(), max_len));
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> compute_rewards(
    const std::vector<std::vector<double>>& scores,
    const std::vector<Mask>& masks, RewardScope scope,
    const std::vector<int>& valid_len) {
  std::vector<std::vector<double>> rewards(scores.size());
  for (size_t b = 0; b < scores.size(); ++b) {
    rewards[b].assign(scores[b].size(), 0.0);
    for (size_t t = 0; t < scores[b].size(); ++t) {
      bool in_scope = static_cast<int>(t) < valid_len[b] &&
                      (scope == RewardScope::kAllPositions ||
                       masks[b].bits[t] == 0);
      if (!in_scope) continue;
      double s = scores[b][t];
      if (!(s > 0.0 && s < 1.0))
        throw std::invalid_argument("compute_rewards: score outside (0,1)");
      rewards[b][t] = std::log(s);
    }
  }
  return rewards;
}

std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double gamma) {
  if (gamma < 0.0 || gamma > 1.0)
    throw std::invalid_argument("discounted_returns: gamma outside [0,1]");
  std::vector<double> ret(rewards.size(), 0.0);
  double acc = 0.0;
  for (size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    ret[i] = acc;
  }
  return ret;
}

TrainStats pretrain_lm(Seq2SeqModel& model, const std::vector<TokenSeq>& train,
                       const std::vector<TokenSeq>& val, const Config& cfg) {
  Adam opt(lm_params(model), adam_cfg(cfg, cfg.lm_lr));
  Rng rng(cfg.seed);
  TrainStats stats;
  for (int epoch = 0; epoch < cfg.lm_epochs; ++epoch) {
    double epoch_loss = 0.0;
    long n_batches = 0;
    for (const Batch& batch : batch_iter(train, cfg.batch_size, rng.raw())) {
      int B = batch.size();
      LstmState state = model.decoder.initial_state(B);
      ForwardOptions fo{true, cfg.dropout, &rng};
      std::vector<int> prev(B, kPadId);
      Tensor total;
      long count = 0;
      for (int t = 0; t < batch.max_len; ++t) {
        Tensor logp = log_softmax_rows(lm_step(model, prev, state, fo));
        std::vector<int> target(B);
        std::vector<double> w(B, 0.0);
        for (int b = 0; b < B; ++b) {
          target[b] = batch.rows[b][t];
          if (t < batch.valid_len[b]) {
            w[b] = 1.0;
            ++count;
          }
        }
        Tensor term = sum(scale_rows(gather_cols(logp, target), weight_col(w)));
        total = t == 0 ? term : add(total, term);
        prev = target;  // teacher forcing
      }
      Tensor loss = scale(total, -1.0 / static_cast<double>(count));
      if (!std::isfinite(loss.item()))
        throw std::runtime_error("pretrain_lm: non-finite loss at step " +
                                 std::to_string(opt.step_count() + 1));
      backward(loss);
      opt.step();
      epoch_loss += loss.item();
      ++n_batches;
    }
    stats.epoch_losses.push_back(epoch_loss / std::max(1L, n_batches));
  }
  copy_decoder_weights_to_encoder(model);
  if (!val.empty())
    stats.final_val_ppl = validation_perplexity(model, val, PerplexityMode::kLm);
  return stats;
}

TrainStats pretrain_infill(Seq2SeqModel& model,
                           const std::vector<TokenSeq>& train,
                           const std::vector<TokenSeq>& val,
                           const Config& cfg) {
  Adam opt(model.params(), adam_cfg(cfg, cfg.infill_lr));
  Rng rng(cfg.seed + 1);
  TrainStats stats;
  for (int epoch = 0; epoch < cfg.infill_epochs; ++epoch) {
    double epoch_loss = 0.0;
    long n_batches = 0;
    for (const Batch& batch : batch_iter(train, cfg.batch_size, rng.raw())) {
      MaskedBatch mb =
          make_masked_batch(batch, cfg.mask_rate, cfg.mask_regime, rng);
      ForwardOptions fo{true, cfg.dropout, &rng};
      RolloutBatch ro =
          generator_fill(model, mb, FillMode::kTeacher, rng, &batch.rows, fo);
      Tensor total;
      long count = 0;
      for (int t = 0; t < ro.steps(); ++t) {
        for (int b = 0; b < ro.batch(); ++b)
          if (ro.scope[b][t] > 0.0) ++count;
        Tensor term =
            sum(scale_rows(ro.step_logps[t], weight_col([&] {
                  std::vector<double> w(ro.batch());
                  for (int b = 0; b < ro.batch(); ++b) w[b] = ro.scope[b][t];
                  return w;
                }())));
        total = t == 0 ? term : add(total, term);
      }
      if (count == 0) continue;  // rate 0: the objective is vacuous
      Tensor loss = scale(total, -1.0 / static_cast<double>(count));
      if (!std::isfinite(loss.item()))
        throw std::runtime_error("pretrain_infill: non-finite loss at step " +
                                 std::to_string(opt.step_count() + 1));
      backward(loss);
      opt.step();
      epoch_loss += loss.item();
      ++n_batches;
    }
    stats.epoch_losses.push_back(epoch_loss / std::max(1L, n_batches));
  }
  if (!val.empty())
    stats.final_val_ppl =
        validation_perplexity(model, val, PerplexityMode::kInfill,
                              cfg.mask_rate, cfg.mask_regime);
  return stats;
}

double generator_pg_step(Seq2SeqModel& gen, const RolloutBatch& rollout,
                         Adam& opt) {
  int B = rollout.batch();
  Tensor total;
  bool any = false;
  for (int t = 0; t < rollout.steps(); ++t) {
    std::vector<double> w(B, 0.0);
    bool nonzero = false;
    for (int b = 0; b < B; ++b) {
      if (rollout.scope[b][t] == 0.0) continue;
      double adv = rollout.advantages[b][t];
      if (!std::isfinite(adv))
        throw std::runtime_error("generator_pg_step: non-finite advantage");
      w[b] = adv;
      nonzero = true;
    }
    if (!nonzero) continue;
    Tensor term = sum(scale_rows(rollout.step_logps[t], weight_col(w)));
    total = any ? add(total, term) : term;
    any = true;
  }
  if (!any) return 0.0;
  // Descent on the negated surrogate; advantages are constants.
  Tensor loss = scale(total, -1.0 / static_cast<double>(B));
  backward(loss);
  opt.step();
  return loss.item();
}

Tensor discriminator_loss_tensor(const Seq2SeqModel& disc,
                                 const MaskedBatch& real,
                                 const RolloutBatch& fake) {
  DiscOutput real_out =
      discriminator_forward(disc, real.batch.rows, real);
  DiscOutput fake_out =
      discriminator_forward(disc, fake.composite, fake.input);
  int B = real.batch.size();
  Tensor total;
  bool any = false;
  long count = 0;
  auto accumulate = [&](const Tensor& score, const std::vector<double>& w_real,
                        const std::vector<double>& w_fake) {
    // -[w_real log s + w_fake log(1-s)]
    Tensor log_s = log_t(score);
    Tensor log_1ms =
        log_t(sub(Tensor::constant(score.rows(), 1, 1.0), score));
    Tensor term = add(sum(scale_rows(log_s, weight_col(w_real))),
                      sum(scale_rows(log_1ms, weight_col(w_fake))));
    total = any ? add(total, term) : term;
    any = true;
  };
  for (int t = 0; t < real.batch.max_len; ++t) {
    std::vector<double> w1(B, 0.0), w0(B, 0.0);
    for (int b = 0; b < B; ++b)
      if (t < real.batch.valid_len[b]) {
        w1[b] = 1.0;  // every real-sequence position is real
        ++count;
      }
    accumulate(real_out.scores[t], w1, w0);
  }
  for (int t = 0; t < fake.input.batch.max_len; ++t) {
    std::vector<double> w1(B, 0.0), w0(B, 0.0);
    for (int b = 0; b < B; ++b) {
      if (t >= fake.input.batch.valid_len[b]) continue;
      // unmasked positions of the composite are real tokens
      if (fake.input.masks[b].bits[t] == 1) w1[b] = 1.0;
      else w0[b] = 1.0;
      ++count;
    }
    accumulate(fake_out.scores[t], w1, w0);
  }
  return scale(total, -1.0 / static_cast<double>(count));
}

double discriminator_step(Seq2SeqModel& disc, const MaskedBatch& real,
                          const RolloutBatch& fake, Adam& opt) {
  Tensor loss = discriminator_loss_tensor(disc, real, fake);
  double value = loss.item();
  if (!std::isfinite(value))
    throw std::runtime_error("discriminator: non-finite loss");
  backward(loss);
  opt.step();
  return value;
}

Tensor critic_loss_tensor(const Seq2SeqModel& disc,
                          const RolloutBatch& rollout) {
  DiscOutput out =
      discriminator_forward(disc, rollout.composite, rollout.input);
  int B = rollout.batch();
  Tensor total;
  bool any = false;
  long count = 0;
  // iterate over D's per-position outputs: rollouts built outside
  // generator_fill (D/critic training on detached composites) carry no
  // step_logps
  int T = static_cast<int>(out.values.size());
  for (int t = 0; t < T; ++t) {
    std::vector<double> w(B, 0.0), target(B, 0.0);
    bool nonzero = false;
    for (int b = 0; b < B; ++b)
      if (rollout.scope[b][t] > 0.0) {
        w[b] = 1.0;
        target[b] = rollout.returns[b][t];
        nonzero = true;
        ++count;
      }
    if (!nonzero) continue;
    Tensor err = sub(out.values[t], Tensor::from(B, 1, target));
    Tensor term = sum(scale_rows(mul(err, err), weight_col(w)));
    total = any ? add(total, term) : term;
    any = true;
  }
  if (!any) return Tensor();  // nothing in scope
  return scale(total, 1.0 / static_cast<double>(count));
}

double critic_step(Seq2SeqModel& disc, const RolloutBatch& rollout,
                   Adam& opt) {
  Tensor loss = critic_loss_tensor(disc, rollout);
  if (!loss.defined()) return 0.0;  // nothing in scope: no-op
  double value = loss.item();
  if (!std::isfinite(value))
    throw std::runtime_error("critic: non-finite loss");
  backward(loss);
  opt.step();
  return value;
}

bool curriculum_advance(CurriculumState& state, double recent_metric) {
  state.window.push_back(recent_metric);
  if (static_cast<int>(state.window.size()) < state.window_size) return false;
  double first = state.window.front();
  double last = state.window.back();
  double improvement =
      (first - last) / std::max(1e-12, std::abs(first));
  state.window.erase(state.window.begin());
  if (improvement >= state.threshold) return false;
  if (state.current_len >= state.max_len) return false;
  ++state.current_len;
  ++state.increments;
  state.window.clear();
  return true;
}

std::vector<double> full_vocab_rewards(
    const Seq2SeqModel& disc, const TokenSeq& composite,
    const MaskedSeq& context,
    const std::vector<std::vector<double>>& gen_dist,
    const std::vector<double>& scope) {
  int V = disc.dims.vocab;
  if (V > 64)
    throw std::invalid_argument(
        "full_vocab_rewards: vocab exceeds the 64-token guard; use sampled "
        "rewards");
  int T = static_cast<int>(composite.size());
  std::vector<double> expected(T, 0.0);
  Batch ctx_batch;
  ctx_batch.rows.assign(V, context.original);
  ctx_batch.valid_len.assign(V, T);
  ctx_batch.max_len = T;
  std::vector<Mask> masks(V, context.mask);
  MaskedBatch mb = masked_batch_from(ctx_batch, masks);
  for (int t = 0; t < T; ++t) {
    if (scope[t] == 0.0) continue;
    std::vector<TokenSeq> variants(V, composite);
    for (int v = 0; v < V; ++v) variants[v][t] = v;
    DiscOutput out = discriminator_forward(disc, variants, mb);
    double acc = 0.0;
    for (int v = 0; v < V; ++v)
      acc += gen_dist[t][v] * std::log(out.scores[t].at(v, 0));
    expected[t] = acc;
  }
  return expected;
}

std::optional<std::string> check_mode_collapse(
    const std::vector<TokenSeq>& samples) {
  if (samples.empty() || samples[0].size() < 4) return std::nullopt;
  double pct = unique_ngram_pct(samples, 4);
  if (pct < 5.0) {
    std::ostringstream msg;
    msg << "mode collapse: unique quadgram diversity " << pct << "% < 5%";
    return msg.str();
  }
  return std::nullopt;
}

std::optional<std::string> check_divergence(double start_val_ppl,
                                            double current_val_ppl) {
  if (current_val_ppl > 4.0 * start_val_ppl) {
    std::ostringstream msg;
    msg << "divergence: validation perplexity " << current_val_ppl << " > 4x "
        << "starting value " << start_val_ppl;
    return msg.str();
  }
  return std::nullopt;
}

std::string IterMetrics::csv_header() {
  return "iter,d_loss,g_surrogate,mean_reward,mean_advantage,critic_mse,"
         "sample_ppl";
}

std::string IterMetrics::to_csv_row() const {
  std::ostringstream out;
  out << iter << ',' << d_loss << ',' << g_surrogate << ',' << mean_reward
      << ',' << mean_advantage << ',' << critic_mse << ',' << sample_ppl;
  return out.str();
}

GanResult gan_train_loop(
    Seq2SeqModel& gen, Seq2SeqModel& disc,
    const std::vector<TokenSeq>& train, const std::vector<TokenSeq>& val,
    const Config& cfg, const Seq2SeqModel* frozen_lm,
    const std::string& last_good_ckpt_path,
    const std::function<void(const IterMetrics&)>& on_iter) {
  if (cfg.full_vocab_rewards && gen.dims.vocab > 64)
    throw std::invalid_argument(
        "gan_train_loop: full-vocab rewards limited to vocab <= 64; use "
        "sampled rewards");
  GanResult result;
  Rng rng(cfg.seed + 2);
  Adam g_opt(gen.params(), adam_cfg(cfg, cfg.g_lr));
  Adam d_opt(disc.params(), adam_cfg(cfg, cfg.d_lr));
  Adam c_opt(critic_params(disc), adam_cfg(cfg, cfg.c_lr));

  int corpus_max_len = 0;
  for (const auto& s : train)
    corpus_max_len = std::max(corpus_max_len, static_cast<int>(s.size()));

  CurriculumState cur;
  cur.max_len = corpus_max_len;
  cur.current_len = cfg.curriculum ? std::min(4, corpus_max_len)
                                   : corpus_max_len;
  cur.window_size = cfg.curriculum_window;
  cur.threshold = cfg.curriculum_threshold;

  result.start_val_ppl =
      val.empty() ? 0.0
                  : validation_perplexity(gen, val, PerplexityMode::kInfill,
                                          cfg.mask_rate, cfg.mask_regime);

  std::vector<TokenSeq> data =
      cfg.curriculum ? truncate_corpus(train, cur.current_len) : train;
  std::vector<Batch> batches = batch_iter(data, cfg.batch_size, rng.raw());
  size_t batch_pos = 0;
  auto next_batch = [&]() -> const Batch& {
    if (batch_pos >= batches.size()) {
      batches = batch_iter(data, cfg.batch_size, rng.raw());
      batch_pos = 0;
    }
    return batches[batch_pos++];
  };

  auto sample_rollout = [&](const Batch& batch, bool record_dists) {
    MaskedBatch mb =
        make_masked_batch(batch, cfg.mask_rate, cfg.mask_regime, rng);
    return generator_fill(gen, mb, FillMode::kSample, rng, nullptr, {},
                          record_dists);
  };

  // Discriminator pretraining on current-generator samples vs real text.
  for (int step = 0; step < cfg.d_pretrain_steps; ++step) {
    const Batch& batch = next_batch();
    RolloutBatch ro = sample_rollout(batch, false);
    discriminator_step(disc, ro.input, ro, d_opt);
    ++result.counters.d_updates;
  }

  for (int iter = 1; iter <= cfg.gan_iters; ++iter) {
    try {
      IterMetrics m;
      m.iter = iter;
      for (int k = 0; k < cfg.d_steps_per_g; ++k) {
        const Batch& batch = next_batch();
        RolloutBatch ro = sample_rollout(batch, false);
        m.d_loss = discriminator_step(disc, ro.input, ro, d_opt);
        ++result.counters.d_updates;
      }

      const Batch& batch = next_batch();
      RolloutBatch ro = sample_rollout(batch, cfg.full_vocab_rewards);
      DiscOutput d_out = discriminator_forward(disc, ro.composite, ro.input);
      int B = ro.batch();
      int T = ro.steps();
      std::vector<std::vector<double>> scores(B, std::vector<double>(T));
      for (int t = 0; t < T; ++t)
        for (int b = 0; b < B; ++b) scores[b][t] = d_out.scores[t].at(b, 0);
      ro.rewards = compute_rewards(scores, ro.input.masks, cfg.reward_scope,
                                   ro.input.batch.valid_len);
      if (cfg.full_vocab_rewards) {
        for (int b = 0; b < B; ++b) {
          MaskedSeq ctx;
          ctx.original = ro.input.batch.rows[b];
          ctx.mask = ro.input.masks[b];
          ctx.masked = ro.input.masked[b];
          std::vector<std::vector<double>> dist_b(T);
          for (int t = 0; t < T; ++t) dist_b[t] = ro.dists[t][b];
          std::vector<double> exp_r = full_vocab_rewards(
              disc, ro.composite[b], ctx, dist_b, ro.scope[b]);
          for (int t = 0; t < T; ++t)
            if (ro.scope[b][t] > 0.0) ro.rewards[b][t] = exp_r[t];
        }
      }
      ro.returns.resize(B);
      ro.baselines.assign(B, std::vector<double>(T, 0.0));
      ro.advantages.assign(B, std::vector<double>(T, 0.0));
      double reward_sum = 0.0, adv_sum = 0.0;
      long scope_count = 0;
      for (int b = 0; b < B; ++b) {
        ro.returns[b] = discounted_returns(ro.rewards[b], cfg.gamma);
        for (int t = 0; t < T; ++t) {
          ro.baselines[b][t] = d_out.values[t].at(b, 0);
          ro.advantages[b][t] = ro.returns[b][t] - ro.baselines[b][t];
          if (ro.scope[b][t] > 0.0) {
            reward_sum += ro.rewards[b][t];
            adv_sum += ro.advantages[b][t];
            ++scope_count;
          }
        }
      }
      m.mean_reward = scope_count ? reward_sum / scope_count : 0.0;
      m.mean_advantage = scope_count ? adv_sum / scope_count : 0.0;

      m.g_surrogate = generator_pg_step(gen, ro, g_opt);
      ++result.counters.g_updates;
      m.critic_mse = critic_step(disc, ro, c_opt);
      ++result.counters.critic_updates;

      if (frozen_lm) {
        std::vector<TokenSeq> samples =
            sample_unconditional(gen, 32, corpus_max_len, rng);
        m.sample_ppl = sample_perplexity(samples, *frozen_lm).mean;
      } else {
        m.sample_ppl = std::nan("");
      }

      if (iter % 10 == 0 || iter == cfg.gan_iters) {
        std::vector<TokenSeq> samples =
            sample_unconditional(gen, 100, corpus_max_len, rng);
        if (auto w = check_mode_collapse(samples))
          result.warnings.push_back("iter " + std::to_string(iter) + ": " + *w);
        if (!val.empty()) {
          double vp =
              validation_perplexity(gen, val, PerplexityMode::kInfill,
                                    cfg.mask_rate, cfg.mask_regime);
          result.final_val_ppl = vp;
          if (auto w = check_divergence(result.start_val_ppl, vp))
            result.warnings.push_back("iter " + std::to_string(iter) + ": " +
                                      *w);
          if (cfg.curriculum && curriculum_advance(cur, vp)) {
            data = truncate_corpus(train, cur.current_len);
            batches = batch_iter(data, cfg.batch_size, rng.raw());
            batch_pos = 0;
          }
        }
      }

      result.history.push_back(m);
      if (on_iter) on_iter(m);
      if (!last_good_ckpt_path.empty())
        save_checkpoint(last_good_ckpt_path, "gan", gen, &disc);
    } catch (const std::exception& e) {
      // The previous iteration's checkpoint is the last good state.
      result.warnings.push_back("aborted at iter " + std::to_string(iter) +
                                ": " + e.what());
      throw;
    }
  }
  result.curriculum_increments = cur.increments;
  if (!val.empty() && result.final_val_ppl == 0.0)
    result.final_val_ppl =
        validation_perplexity(gen, val, PerplexityMode::kInfill,
                              cfg.mask_rate, cfg.mask_regime);
  return result;
}

}  // namespace maskgan
