#include "pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "checkpoint.hpp"
#include "gradcheck.hpp"

namespace maskgan {

RunLock::RunLock(const RunPaths& paths) : path_(paths.lock()) {
  std::filesystem::create_directories(paths.dir);
  int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw std::runtime_error("run directory '" + paths.dir +
                             "' is locked by another invocation (" + path_ +
                             " exists)");
  ::close(fd);
}

RunLock::~RunLock() { ::unlink(path_.c_str()); }

namespace {

void require_file(const std::string& path, const std::string& prior_stage) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("missing " + path + ": run " + prior_stage +
                             " first");
}

// Manifest handling: a pre-existing manifest with a different config is an
// error unless forced; the manifest for the new stage is written before any
// training starts.
void write_manifest(const RunPaths& paths, const Config& cfg,
                    const std::string& stage,
                    const std::vector<std::string>& checkpoints, bool force,
                    std::vector<std::string>* warnings) {
  if (std::filesystem::exists(paths.manifest())) {
    RunManifest prev = RunManifest::load(paths.manifest());
    if (prev.config.to_key_values() != cfg.to_key_values()) {
      if (!force)
        throw std::runtime_error(
            "config differs from the run manifest in " + paths.manifest() +
            "; pass --force to override");
      if (warnings)
        warnings->push_back("config differs from the existing run manifest; "
                            "continuing under --force");
    }
  }
  RunManifest manifest;
  manifest.config = cfg;
  manifest.stage = stage;
  manifest.checkpoints = checkpoints;
  manifest.save(paths.manifest());
}

LoadedCheckpoint load_stage_checkpoint(const RunPaths& paths,
                                       const std::string& stage,
                                       const std::string& prior_cmd) {
  require_file(paths.checkpoint(stage), prior_cmd);
  LoadedCheckpoint ckpt = load_checkpoint(paths.checkpoint(stage));
  if (ckpt.stage != stage)
    throw std::runtime_error(paths.checkpoint(stage) + " holds a '" +
                             ckpt.stage + "' checkpoint, expected '" + stage +
                             "'");
  return ckpt;
}

}  // namespace

std::pair<std::vector<TokenSeq>, std::vector<TokenSeq>> split_train_val(
    const std::vector<TokenSeq>& data, double val_fraction, uint64_t seed) {
  std::vector<TokenSeq> shuffled = data;
  Rng rng(seed ^ 0x5eedULL);
  rng.shuffle(shuffled);
  size_t n_val = static_cast<size_t>(val_fraction *
                                     static_cast<double>(shuffled.size()));
  if (n_val == 0 && shuffled.size() > 1) n_val = 1;
  std::vector<TokenSeq> val(shuffled.begin(), shuffled.begin() + n_val);
  std::vector<TokenSeq> train(shuffled.begin() + n_val, shuffled.end());
  return {std::move(train), std::move(val)};
}

void cmd_build_vocab(const std::string& corpus_path, const Config& cfg,
                     const RunPaths& paths) {
  cfg.validate();
  RunLock lock(paths);
  Vocab vocab = build_vocab_file(corpus_path, cfg.vocab_max);
  vocab.save(paths.vocab());
  write_manifest(paths, cfg, "vocab", {}, /*force=*/true, nullptr);
}

StageResult cmd_pretrain_lm(const std::string& corpus_path, const Config& cfg,
                            const RunPaths& paths, bool force) {
  cfg.validate();
  RunLock lock(paths);
  require_file(paths.vocab(), "build-vocab");
  StageResult out;
  // checkpoint entries are dir-relative so identical runs in different
  // directories produce identical manifests
  write_manifest(paths, cfg, "lm", {"lm.ckpt"}, force, &out.warnings);

  Vocab vocab = Vocab::load(paths.vocab());
  std::vector<TokenSeq> corpus = load_corpus(corpus_path, vocab, cfg.max_len);
  auto [train, val] = split_train_val(corpus, cfg.val_fraction, cfg.seed);

  Rng rng(cfg.seed);
  Seq2SeqModel model = Seq2SeqModel::create(cfg.model_dims(vocab.size()),
                                            ModelRole::kGenerator, rng);
  out.stats = pretrain_lm(model, train, val, cfg);
  copy_decoder_weights_to_encoder(model);
  save_checkpoint(paths.checkpoint("lm"), "lm", model);
  return out;
}

StageResult cmd_pretrain_infill(const std::string& corpus_path,
                                const Config& cfg, const RunPaths& paths,
                                bool force) {
  cfg.validate();
  RunLock lock(paths);
  require_file(paths.vocab(), "build-vocab");
  StageResult out;
  write_manifest(paths, cfg, "mle", {"lm.ckpt", "mle.ckpt"}, force,
                 &out.warnings);

  LoadedCheckpoint lm = load_stage_checkpoint(paths, "lm", "pretrain-lm");
  Vocab vocab = Vocab::load(paths.vocab());
  std::vector<TokenSeq> corpus = load_corpus(corpus_path, vocab, cfg.max_len);
  auto [train, val] = split_train_val(corpus, cfg.val_fraction, cfg.seed);

  out.stats = pretrain_infill(lm.generator, train, val, cfg);
  save_checkpoint(paths.checkpoint("mle"), "mle", lm.generator);
  return out;
}

GanStageResult cmd_train_gan(const std::string& corpus_path, const Config& cfg,
                             const RunPaths& paths, bool force) {
  cfg.validate();
  RunLock lock(paths);
  require_file(paths.vocab(), "build-vocab");
  GanStageResult out;
  write_manifest(paths, cfg, "gan", {"lm.ckpt", "mle.ckpt", "gan.ckpt"},
                 force, &out.warnings);

  LoadedCheckpoint mle = load_stage_checkpoint(paths, "mle", "pretrain-infill");
  LoadedCheckpoint lm = load_stage_checkpoint(paths, "lm", "pretrain-lm");
  Vocab vocab = Vocab::load(paths.vocab());
  std::vector<TokenSeq> corpus = load_corpus(corpus_path, vocab, cfg.max_len);
  auto [train, val] = split_train_val(corpus, cfg.val_fraction, cfg.seed);

  Seq2SeqModel& gen = mle.generator;
  Rng rng(cfg.seed + 1);
  Seq2SeqModel disc =
      cfg.share_gd_embeddings
          ? Seq2SeqModel::create_shared_embedding(gen.dims, gen.embedding, rng)
          : Seq2SeqModel::create(gen.dims, ModelRole::kDiscriminator, rng);

  std::ofstream csv(paths.metrics_csv());
  if (!csv) throw std::runtime_error("cannot write " + paths.metrics_csv());
  csv << IterMetrics::csv_header() << '\n';
  auto on_iter = [&csv](const IterMetrics& m) {
    csv << m.to_csv_row() << '\n';
    csv.flush();
  };

  out.result = gan_train_loop(gen, disc, train, val, cfg, &lm.generator,
                              paths.last_good(), on_iter);
  for (const auto& w : out.result.warnings) out.warnings.push_back(w);
  save_checkpoint(paths.checkpoint("gan"), "gan", gen, &disc);
  return out;
}

std::vector<std::string> sample_with(const LoadedCheckpoint& ckpt,
                                     const Vocab& vocab,
                                     const SampleRequest& req) {
  if (vocab.size() != ckpt.dims.vocab)
    throw std::runtime_error("vocab size does not match the checkpoint");
  Rng rng(req.seed);
  std::vector<std::string> lines;

  if (req.mode == "unconditional") {
    if (req.length < 1) throw std::invalid_argument("--length must be >= 1");
    std::vector<TokenSeq> samples =
        sample_unconditional(ckpt.generator, req.count, req.length, rng);
    for (const auto& s : samples) lines.push_back(decode(s, vocab));
    return lines;
  }
  if (req.mode != "conditional")
    throw std::invalid_argument("--mode must be unconditional or conditional");

  // "_" marks a blank per the usual infilling rendering.
  std::istringstream in(req.text);
  TokenSeq base;
  std::vector<uint8_t> bits;
  std::string tok;
  while (in >> tok) {
    if (tok == "_") {
      base.push_back(kPadId);
      bits.push_back(0);
    } else {
      base.push_back(vocab.id(tok));
      bits.push_back(1);
    }
  }
  if (base.empty()) throw std::invalid_argument("conditional text is empty");

  Batch batch;
  batch.max_len = static_cast<int>(base.size());
  batch.valid_len.assign(req.count, batch.max_len);
  batch.rows.assign(req.count, base);
  Mask mask;
  mask.bits = bits;
  MaskedBatch mb =
      masked_batch_from(batch, std::vector<Mask>(req.count, mask));
  ForwardOptions fo;
  fo.ban_sample_ids = {kPadId, kMaskId};
  RolloutBatch ro =
      generator_fill(ckpt.generator, mb, FillMode::kSample, rng, nullptr, fo);
  for (int b = 0; b < ro.batch(); ++b) {
    std::string line;
    for (size_t t = 0; t < ro.composite[b].size(); ++t) {
      if (!line.empty()) line += ' ';
      const std::string& word = vocab.token(ro.composite[b][t]);
      line += bits[t] ? word : "[[" + word + "]]";
    }
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> cmd_sample(const std::string& ckpt_path,
                                    const std::string& vocab_path,
                                    const SampleRequest& req) {
  require_file(ckpt_path, "a training stage");
  require_file(vocab_path, "build-vocab");
  LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  Vocab vocab = Vocab::load(vocab_path);
  return sample_with(ckpt, vocab, req);
}

MetricsReport cmd_evaluate(const std::string& samples_path,
                           const std::string& lm_ckpt_path,
                           const std::string& reference_path,
                           const std::string& vocab_path, int max_len) {
  require_file(lm_ckpt_path, "pretrain-lm");
  require_file(vocab_path, "build-vocab");
  LoadedCheckpoint lm = load_checkpoint(lm_ckpt_path);
  Vocab vocab = Vocab::load(vocab_path);
  if (vocab.size() != lm.dims.vocab)
    throw std::runtime_error("vocab size does not match the LM checkpoint");
  std::vector<TokenSeq> samples = load_samples_file(samples_path, vocab,
                                                    max_len);
  std::vector<TokenSeq> reference = load_corpus(reference_path, vocab,
                                                max_len);
  return build_report(samples, lm.generator, reference);
}

int cmd_gradcheck(std::string* report_out) {
  std::vector<GradCheckResult> results = run_gradcheck_suite();
  if (report_out) *report_out = gradcheck_report(results);
  return gradcheck_worst(results) < 1e-4 ? 0 : 1;
}

}  // namespace maskgan
