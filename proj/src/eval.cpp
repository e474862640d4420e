#include "eval.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace maskgan {

namespace {

// n-grams never span two samples; pad/eos are filtered per flags.
std::vector<TokenSeq> extract_ngrams(const std::vector<TokenSeq>& samples,
                                     int n, bool include_eos) {
  if (n < 1) throw std::invalid_argument("ngram: n must be >= 1");
  std::vector<TokenSeq> grams;
  for (const auto& s : samples) {
    TokenSeq filtered;
    for (int id : s) {
      if (id == kPadId) continue;
      if (id == kEosId && !include_eos) continue;
      filtered.push_back(id);
    }
    for (size_t i = 0; i + n <= filtered.size(); ++i)
      grams.emplace_back(filtered.begin() + i, filtered.begin() + i + n);
  }
  return grams;
}

}  // namespace

double unique_ngram_pct(const std::vector<TokenSeq>& samples, int n,
                        bool include_eos) {
  if (samples.empty())
    throw std::invalid_argument("unique_ngram_pct: empty sample set");
  auto grams = extract_ngrams(samples, n, include_eos);
  if (grams.empty())
    throw std::invalid_argument("unique_ngram_pct: samples shorter than n");
  std::set<TokenSeq> distinct(grams.begin(), grams.end());
  return 100.0 * static_cast<double>(distinct.size()) /
         static_cast<double>(grams.size());
}

double geometric_ngram_score(const std::vector<TokenSeq>& samples,
                             const std::vector<int>& ns,
                             const std::vector<TokenSeq>& reference,
                             bool include_eos) {
  if (reference.empty())
    throw std::invalid_argument("geometric_ngram_score: empty reference");
  if (ns.empty())
    throw std::invalid_argument("geometric_ngram_score: no n values");
  double log_sum = 0.0;
  for (int n : ns) {
    auto gen_grams = extract_ngrams(samples, n, include_eos);
    auto ref_grams = extract_ngrams(reference, n, include_eos);
    std::set<TokenSeq> ref_set(ref_grams.begin(), ref_grams.end());
    std::set<TokenSeq> matched;
    for (auto& g : gen_grams)
      if (ref_set.count(g)) matched.insert(std::move(g));
    if (matched.empty()) return 0.0;
    log_sum += std::log(static_cast<double>(matched.size()));
  }
  return std::exp(log_sum / static_cast<double>(ns.size()));
}

PerplexityStat sample_perplexity(const std::vector<TokenSeq>& samples,
                                 const Seq2SeqModel& frozen_lm) {
  if (samples.empty())
    throw std::invalid_argument("sample_perplexity: empty sample set");
  PerplexityStat stat;
  for (const auto& s : samples) {
    if (s.empty())
      throw std::invalid_argument("sample_perplexity: empty sample");
    for (int id : s)
      if (id == kPadId)
        throw std::invalid_argument("sample_perplexity: sample contains pad");
    LstmState state = frozen_lm.decoder.initial_state(1);
    double log_p = 0.0;
    int prev = kPadId;
    for (int id : s) {
      Tensor logits = lm_step(frozen_lm, {prev}, state);
      Tensor logp = log_softmax_rows(logits);
      log_p += logp.at(0, id);
      prev = id;
    }
    stat.per_sample.push_back(
        std::exp(-log_p / static_cast<double>(s.size())));
  }
  double sum = 0.0;
  for (double p : stat.per_sample) sum += p;
  stat.mean = sum / static_cast<double>(stat.per_sample.size());
  double sq = 0.0;
  for (double p : stat.per_sample) sq += (p - stat.mean) * (p - stat.mean);
  size_t n = stat.per_sample.size();
  stat.stderr_ =
      n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) / std::sqrt(n) : 0.0;
  return stat;
}

double validation_perplexity(const Seq2SeqModel& model,
                             const std::vector<TokenSeq>& corpus,
                             PerplexityMode mode, double mask_rate,
                             MaskRegime regime, uint64_t mask_seed) {
  if (corpus.empty())
    throw std::invalid_argument("validation_perplexity: empty corpus");
  double total_logp = 0.0;
  long total_count = 0;
  if (mode == PerplexityMode::kLm) {
    for (const auto& s : corpus) {
      LstmState state = model.decoder.initial_state(1);
      int prev = kPadId;
      for (int id : s) {
        Tensor logp = log_softmax_rows(lm_step(model, {prev}, state));
        total_logp += logp.at(0, id);
        ++total_count;
        prev = id;
      }
    }
  } else {
    Rng rng(mask_seed);
    std::vector<Batch> batches = batch_iter(corpus, 16, mask_seed);
    Rng fill_rng(mask_seed + 1);
    for (const auto& batch : batches) {
      MaskedBatch mb = make_masked_batch(batch, mask_rate, regime, rng);
      RolloutBatch ro = generator_fill(model, mb, FillMode::kTeacher, fill_rng,
                                       &batch.rows);
      for (int t = 0; t < ro.steps(); ++t)
        for (int b = 0; b < ro.batch(); ++b)
          if (ro.scope[b][t] > 0.0) {
            total_logp += ro.step_logps[t].at(b, 0);
            ++total_count;
          }
    }
  }
  if (total_count == 0) return 1.0;  // vacuous (nothing masked)
  return std::exp(-total_logp / static_cast<double>(total_count));
}

std::string MetricsReport::csv_header() {
  return "unique_bigram_pct,unique_trigram_pct,unique_quadgram_pct,"
         "geometric_ngram_score,sample_ppl_mean,sample_ppl_stderr,"
         "validation_ppl,sample_count,sample_len";
}

std::string MetricsReport::to_csv_row() const {
  std::ostringstream out;
  out << unique_bigram_pct << ',' << unique_trigram_pct << ','
      << unique_quadgram_pct << ',' << geometric_ngram_score << ','
      << sample_ppl_mean << ',' << sample_ppl_stderr << ',' << validation_ppl
      << ',' << sample_count << ',' << sample_len;
  return out.str();
}

std::string MetricsReport::to_text() const {
  std::ostringstream out;
  out << "samples:             " << sample_count << " x " << sample_len
      << " tokens\n"
      << "unique bigrams:      " << unique_bigram_pct << " %\n"
      << "unique trigrams:     " << unique_trigram_pct << " %\n"
      << "unique quadgrams:    " << unique_quadgram_pct << " %\n"
      << "geometric ngram:     " << geometric_ngram_score << "\n"
      << "sample perplexity:   " << sample_ppl_mean << " +- "
      << sample_ppl_stderr << "\n"
      << "validation ppl:      " << validation_ppl << "\n";
  return out.str();
}

MetricsReport build_report(const std::vector<TokenSeq>& samples,
                           const Seq2SeqModel& frozen_lm,
                           const std::vector<TokenSeq>& reference) {
  MetricsReport r;
  r.unique_bigram_pct = unique_ngram_pct(samples, 2);
  r.unique_trigram_pct = unique_ngram_pct(samples, 3);
  r.unique_quadgram_pct = unique_ngram_pct(samples, 4);
  r.geometric_ngram_score = geometric_ngram_score(samples, {2, 3, 4}, reference);
  PerplexityStat ppl = sample_perplexity(samples, frozen_lm);
  r.sample_ppl_mean = ppl.mean;
  r.sample_ppl_stderr = ppl.stderr_;
  r.validation_ppl =
      validation_perplexity(frozen_lm, reference, PerplexityMode::kLm);
  r.sample_count = static_cast<int>(samples.size());
  r.sample_len = samples.empty() ? 0 : static_cast<int>(samples[0].size());
  return r;
}

std::vector<TokenSeq> load_samples_file(const std::string& path,
                                        const Vocab& vocab, int max_len) {
  return load_corpus(path, vocab, max_len);
}

}  // namespace maskgan
