#pragma once

#include <string>
#include <vector>

#include "models.hpp"

namespace maskgan {

struct MetricsReport {
  double unique_bigram_pct = 0.0;
  double unique_trigram_pct = 0.0;
  double unique_quadgram_pct = 0.0;
  double geometric_ngram_score = 0.0;
  double sample_ppl_mean = 0.0;
  double sample_ppl_stderr = 0.0;
  double validation_ppl = 0.0;
  int sample_count = 0;
  int sample_len = 0;

  static std::string csv_header();
  std::string to_csv_row() const;
  std::string to_text() const;
};

// 100 * distinct n-grams / total n-gram occurrences, pooled over all samples.
// Pad (and eos unless include_eos) tokens never enter an n-gram.
double unique_ngram_pct(const std::vector<TokenSeq>& samples, int n,
                        bool include_eos = false);

// Geometric mean over n of the count of distinct generator n-grams that also
// occur in the reference corpus; zero if any count is zero.
double geometric_ngram_score(const std::vector<TokenSeq>& samples,
                             const std::vector<int>& ns,
                             const std::vector<TokenSeq>& reference,
                             bool include_eos = false);

struct PerplexityStat {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::vector<double> per_sample;
};

// exp(-(1/T) sum log P_LM(token)) per sample, under the frozen pretraining LM.
// Throws if any sample contains the pad token.
PerplexityStat sample_perplexity(const std::vector<TokenSeq>& samples,
                                 const Seq2SeqModel& frozen_lm);

enum class PerplexityMode { kLm, kInfill };

// Teacher-forced corpus perplexity. In infill mode the cross-entropy is
// averaged over masked positions only; masks are drawn deterministically from
// mask_seed so repeated evaluations are comparable.
double validation_perplexity(const Seq2SeqModel& model,
                             const std::vector<TokenSeq>& corpus,
                             PerplexityMode mode, double mask_rate = 0.5,
                             MaskRegime regime = MaskRegime::kContiguous,
                             uint64_t mask_seed = 12345);

MetricsReport build_report(const std::vector<TokenSeq>& samples,
                           const Seq2SeqModel& frozen_lm,
                           const std::vector<TokenSeq>& reference);

std::vector<TokenSeq> load_samples_file(const std::string& path,
                                        const Vocab& vocab, int max_len);

}  // namespace maskgan
