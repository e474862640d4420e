#pragma once

#include <string>
#include <utility>
#include <vector>

#include "checkpoint.hpp"
#include "config.hpp"
#include "eval.hpp"
#include "training.hpp"

namespace maskgan {

// Well-known file names inside a run directory.
struct RunPaths {
  std::string dir;
  explicit RunPaths(std::string d) : dir(std::move(d)) {}

  std::string manifest() const { return dir + "/manifest.txt"; }
  std::string vocab() const { return dir + "/vocab.txt"; }
  std::string lock() const { return dir + "/.lock"; }
  std::string checkpoint(const std::string& stage) const {
    return dir + "/" + stage + ".ckpt";
  }
  std::string last_good() const { return dir + "/last_good.ckpt"; }
  std::string metrics_csv() const { return dir + "/metrics.csv"; }
};

// Exclusive per-run-directory lock (O_CREAT | O_EXCL), released on scope
// exit. A second invocation on the same directory throws.
class RunLock {
 public:
  explicit RunLock(const RunPaths& paths);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::string path_;
};

struct StageResult {
  TrainStats stats;
  std::vector<std::string> warnings;
};

struct GanStageResult {
  GanResult result;
  std::vector<std::string> warnings;
};

// Deterministic shuffle-then-split; the same seed and data always produce the
// same partition.
std::pair<std::vector<TokenSeq>, std::vector<TokenSeq>> split_train_val(
    const std::vector<TokenSeq>& data, double val_fraction, uint64_t seed);

void cmd_build_vocab(const std::string& corpus_path, const Config& cfg,
                     const RunPaths& paths);

StageResult cmd_pretrain_lm(const std::string& corpus_path, const Config& cfg,
                            const RunPaths& paths, bool force);

StageResult cmd_pretrain_infill(const std::string& corpus_path,
                                const Config& cfg, const RunPaths& paths,
                                bool force);

GanStageResult cmd_train_gan(const std::string& corpus_path, const Config& cfg,
                             const RunPaths& paths, bool force);

struct SampleRequest {
  std::string mode = "unconditional";  // "unconditional" | "conditional"
  int count = 1;
  int length = 20;
  std::string text;  // conditional context; "_" marks a blank
  uint64_t seed = 42;
};

// Returns one decoded line per sample. Conditional mode fills the blanks and
// renders each fill as [[token]].
std::vector<std::string> sample_with(const LoadedCheckpoint& ckpt,
                                     const Vocab& vocab,
                                     const SampleRequest& req);
std::vector<std::string> cmd_sample(const std::string& ckpt_path,
                                    const std::string& vocab_path,
                                    const SampleRequest& req);

MetricsReport cmd_evaluate(const std::string& samples_path,
                           const std::string& lm_ckpt_path,
                           const std::string& reference_path,
                           const std::string& vocab_path, int max_len);

// Runs the numerics verification suite. Returns 0 on pass, 1 on failure;
// report_out (when given) receives the per-check report text.
int cmd_gradcheck(std::string* report_out = nullptr);

}  // namespace maskgan
