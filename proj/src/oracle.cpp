#include "oracle.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace maskgan {
namespace oracle {

long EnumerableEnv::combos() const {
  long n = 1;
  for (int i = 0; i < masked_count(); ++i) n *= vocab;
  return n;
}

void EnumerableEnv::validate() const {
  if (vocab < 1 || vocab > 6)
    throw std::invalid_argument("oracle env: vocab must be in [1,6]");
  if (horizon < 1 || horizon > 4)
    throw std::invalid_argument("oracle env: horizon must be in [1,4]");
  if (static_cast<int>(base.size()) != horizon ||
      mask.length() != horizon)
    throw std::invalid_argument("oracle env: base/mask length mismatch");
  if (static_cast<long>(reward.size()) != combos())
    throw std::invalid_argument("oracle env: reward table size mismatch");
  for (const auto& row : reward)
    if (static_cast<int>(row.size()) != horizon)
      throw std::invalid_argument("oracle env: reward row length mismatch");
}

TokenSeq EnumerableEnv::fill_for_combo(long combo) const {
  TokenSeq seq = base;
  // mixed radix, first masked position most significant
  std::vector<int> positions;
  for (int t = 0; t < horizon; ++t)
    if (!mask.bits[t]) positions.push_back(t);
  for (size_t i = positions.size(); i-- > 0;) {
    seq[positions[i]] = static_cast<int>(combo % vocab);
    combo /= vocab;
  }
  return seq;
}

namespace {

MaskedBatch env_context(const EnumerableEnv& env) {
  Batch batch;
  batch.rows = {env.base};
  batch.valid_len = {env.horizon};
  batch.max_len = env.horizon;
  return masked_batch_from(batch, {env.mask});
}

}  // namespace

std::vector<double> enumerate_fill_probs(const Seq2SeqModel& policy,
                                         const EnumerableEnv& env) {
  env.validate();
  MaskedBatch ctx = env_context(env);
  Rng rng(0);
  std::vector<double> probs;
  for (long combo = 0; combo < env.combos(); ++combo) {
    std::vector<TokenSeq> teacher{env.fill_for_combo(combo)};
    RolloutBatch ro =
        generator_fill(policy, ctx, FillMode::kTeacher, rng, &teacher);
    double logp = 0.0;
    for (int t = 0; t < ro.steps(); ++t)
      if (ro.scope[0][t] > 0.0) logp += ro.step_logps[t].at(0, 0);
    probs.push_back(std::exp(logp));
  }
  return probs;
}

std::vector<double> exact_returns(const std::vector<double>& rewards,
                                  double gamma) {
  size_t T = rewards.size();
  std::vector<double> out(T, 0.0);
  for (size_t t = 0; t < T; ++t)
    for (size_t s = t; s < T; ++s)
      out[t] += std::pow(gamma, static_cast<double>(s - t)) * rewards[s];
  return out;
}

std::vector<double> exact_policy_gradient(
    const Seq2SeqModel& policy, const EnumerableEnv& env, double gamma,
    const std::vector<double>* baseline) {
  env.validate();
  if (baseline && static_cast<int>(baseline->size()) != env.horizon)
    throw std::invalid_argument("oracle: baseline length mismatch");
  MaskedBatch ctx = env_context(env);
  Rng rng(0);
  std::vector<Tensor> params = policy.params();
  for (auto& p : params) p.zero_grad();

  Tensor total;
  bool any = false;
  for (long combo = 0; combo < env.combos(); ++combo) {
    std::vector<TokenSeq> teacher{env.fill_for_combo(combo)};
    RolloutBatch ro =
        generator_fill(policy, ctx, FillMode::kTeacher, rng, &teacher);
    double logp = 0.0;
    for (int t = 0; t < ro.steps(); ++t)
      if (ro.scope[0][t] > 0.0) logp += ro.step_logps[t].at(0, 0);
    double p_seq = std::exp(logp);
    std::vector<double> returns = exact_returns(env.reward[combo], gamma);
    for (int t = 0; t < ro.steps(); ++t) {
      if (ro.scope[0][t] == 0.0) continue;
      double weight =
          p_seq * (returns[t] - (baseline ? (*baseline)[t] : 0.0));
      if (weight == 0.0) continue;
      Tensor term = scale(ro.step_logps[t], weight);
      total = any ? add(total, term) : term;
      any = true;
    }
  }
  std::vector<double> grads;
  if (any) backward(total);
  for (auto& p : params)
    grads.insert(grads.end(), p.grads().begin(), p.grads().end());
  for (auto& p : params) p.zero_grad();
  return grads;
}

SeqStats exact_seq_stats(const Seq2SeqModel& lm, int T) {
  double n_seq = std::pow(static_cast<double>(lm.dims.vocab),
                          static_cast<double>(T));
  if (n_seq > 1e6)
    throw std::invalid_argument("exact_seq_stats: vocab^T exceeds 1e6");
  int V = lm.dims.vocab;
  TokenSeq seq(T, 0);
  SeqStats stats;
  double total_p = 0.0;
  // odometer over all V^T sequences
  while (true) {
    LstmState state = lm.decoder.initial_state(1);
    double logp = 0.0;
    int prev = kPadId;
    for (int t = 0; t < T; ++t) {
      Tensor lp = log_softmax_rows(lm_step(lm, {prev}, state));
      logp += lp.at(0, seq[t]);
      prev = seq[t];
    }
    double p = std::exp(logp);
    total_p += p;
    if (p > 0.0) stats.entropy -= p * logp;
    int t = T - 1;
    while (t >= 0 && ++seq[t] == V) seq[t--] = 0;
    if (t < 0) break;
  }
  // total_p == 1 up to float error; normalize the entropy estimate
  stats.entropy /= total_p;
  stats.perplexity = std::exp(stats.entropy / static_cast<double>(T));
  return stats;
}

std::pair<long, long> brute_ngram(const std::vector<TokenSeq>& samples,
                                  int n) {
  std::vector<TokenSeq> grams;
  for (const auto& s : samples) {
    TokenSeq kept;
    for (int id : s)
      if (id != kPadId && id != kEosId) kept.push_back(id);
    if (static_cast<int>(kept.size()) < n) continue;
    for (size_t i = 0; i + n <= kept.size(); ++i)
      grams.emplace_back(kept.begin() + i, kept.begin() + i + n);
  }
  long total = static_cast<long>(grams.size());
  long distinct = 0;
  for (size_t i = 0; i < grams.size(); ++i) {
    bool seen_before = false;
    for (size_t j = 0; j < i; ++j)
      if (grams[j] == grams[i]) {
        seen_before = true;
        break;
      }
    if (!seen_before) ++distinct;
  }
  return {distinct, total};
}

}  // namespace oracle
}  // namespace maskgan
