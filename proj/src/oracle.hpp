#pragma once

#include <utility>
#include <vector>

#include "masking.hpp"
#include "models.hpp"

namespace maskgan {
namespace oracle {

// Tiny enumerable in-filling environment: every joint fill of the masked
// positions is listed exhaustively. Reward tables are indexed by the fill
// combination (mixed-radix over masked positions, first masked position most
// significant).
struct EnumerableEnv {
  int vocab = 0;    // <= 6
  int horizon = 0;  // <= 4
  TokenSeq base;    // original tokens, length horizon
  Mask mask;        // bits over base; zeros are the action positions
  // reward[combo][t]; combo enumerates fills of the masked positions
  std::vector<std::vector<double>> reward;

  int masked_count() const { return mask.masked_count(); }
  long combos() const;
  void validate() const;  // throws when not enumerable
  TokenSeq fill_for_combo(long combo) const;
};

// Exact policy gradient sum_seq P(seq) sum_t R_t(seq) d log G(x_hat_t), by
// exhaustive enumeration, flattened over policy.params() order. With a
// per-position baseline the weights become (R_t - b_t).
std::vector<double> exact_policy_gradient(
    const Seq2SeqModel& policy, const EnumerableEnv& env, double gamma,
    const std::vector<double>* baseline = nullptr);

// Per-sequence probability of each fill combination under the policy.
std::vector<double> enumerate_fill_probs(const Seq2SeqModel& policy,
                                         const EnumerableEnv& env);

// Direct double-loop sum_{s=t}^{T} gamma^{s-t} r_s.
std::vector<double> exact_returns(const std::vector<double>& rewards,
                                  double gamma);

struct SeqStats {
  double entropy = 0.0;     // nats, over whole sequences
  double perplexity = 0.0;  // exp(entropy / T)
};

// Enumerates all vocab^T sequences under the model's LM path. Guarded to
// vocab^T <= 1e6.
SeqStats exact_seq_stats(const Seq2SeqModel& lm, int T);

// Naive n-gram counting, sharing no code with the eval module.
// Returns (distinct count, total occurrences). Pad/eos are skipped to match
// the production metric's default.
std::pair<long, long> brute_ngram(const std::vector<TokenSeq>& samples, int n);

}  // namespace oracle
}  // namespace maskgan
