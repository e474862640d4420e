// Acceptance gate: one pass/fail line per criterion, exit nonzero on any
// failure. Tolerances are pinned in-line next to each check.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "eval.hpp"
#include "gradcheck.hpp"
#include "oracle.hpp"
#include "pipeline.hpp"
#include "training.hpp"

using namespace maskgan;

namespace {

struct Criterion {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path + ">";
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Deep copy through the checkpoint format (tensor handles are shared
// otherwise).
Seq2SeqModel clone_model(const Seq2SeqModel& m, const std::string& tmp) {
  save_checkpoint(tmp, "lm", m);
  Seq2SeqModel copy = load_checkpoint(tmp).generator;
  std::filesystem::remove(tmp);
  return copy;
}

MaskedBatch env_batch(const oracle::EnumerableEnv& env) {
  Batch b;
  b.rows = {env.base};
  b.valid_len = {env.horizon};
  b.max_len = env.horizon;
  return masked_batch_from(b, {env.mask});
}

// ---- criterion 1: gradient correctness -------------------------------------
Criterion criterion1() {
  Criterion c;
  auto results = run_gradcheck_suite();
  double worst = gradcheck_worst(results);
  c.pass = worst < 1e-4;
  std::ostringstream d;
  d << results.size() << " checks, worst max_rel_err = " << worst
    << " (bar 1e-4)";
  for (const auto& r : results)
    if (r.max_rel_err >= 1e-4) d << "; FAILING: " << r.name;
  c.detail = d.str();
  return c;
}

// ---- criterion 2: return equivalence ---------------------------------------
Criterion criterion2() {
  Criterion c;
  Rng rng(1002);
  const double gammas[] = {0.0, 0.5, 0.9, 1.0};
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    int T = 1 + rng.uniform_int(16);
    double gamma = gammas[rng.uniform_int(4)];
    std::vector<double> rewards(T);
    for (auto& r : rewards) r = rng.uniform(-5, 5);
    auto fast = discounted_returns(rewards, gamma);
    auto exact = oracle::exact_returns(rewards, gamma);
    for (int t = 0; t < T; ++t)
      worst = std::max(worst, std::abs(fast[t] - exact[t]));
  }
  c.pass = worst <= 1e-12;
  std::ostringstream d;
  d << "10000 vectors (T in 1..16, gamma in {0,.5,.9,1}), worst |diff| = "
    << worst << " (bar 1e-12)";
  c.detail = d.str();
  return c;
}

// ---- criterion 3: estimator validity ---------------------------------------
Criterion criterion3() {
  Criterion c;
  const double gamma = 0.9;
  Rng model_rng(1003);
  Seq2SeqModel policy = Seq2SeqModel::create(ModelDims{3, 4, 4, 1},
                                             ModelRole::kGenerator, model_rng);
  oracle::EnumerableEnv env;
  env.vocab = 3;
  env.horizon = 2;
  env.base = {1, 2};
  env.mask = Mask::from_string("00");
  env.reward.resize(9);
  Rng reward_rng(1004);
  for (auto& row : env.reward)
    row = {reward_rng.uniform(-1, 1), reward_rng.uniform(-1, 1)};

  std::vector<Tensor> params = policy.params();
  size_t P = 0;
  for (const auto& p : params) P += p.size();

  std::vector<double> probs = oracle::enumerate_fill_probs(policy, env);
  MaskedBatch ctx = env_batch(env);

  // per-combo, per-step score-function gradients (the rollout space has only
  // 9 outcomes, so the Monte-Carlo draw reduces to a categorical sample)
  std::vector<std::array<std::vector<double>, 2>> g(9);
  for (long combo = 0; combo < 9; ++combo) {
    for (int t = 0; t < 2; ++t) {
      std::vector<TokenSeq> teacher{env.fill_for_combo(combo)};
      Rng rr(0);
      RolloutBatch ro =
          generator_fill(policy, ctx, FillMode::kTeacher, rr, &teacher);
      for (auto& p : params) p.zero_grad();
      backward(ro.step_logps[t]);
      auto& vec = g[combo][t];
      vec.reserve(P);
      for (auto& p : params)
        vec.insert(vec.end(), p.grads().begin(), p.grads().end());
      for (auto& p : params) p.zero_grad();
    }
  }

  std::vector<std::array<double, 2>> R(9);
  for (long combo = 0; combo < 9; ++combo) {
    auto ret = oracle::exact_returns(env.reward[combo], gamma);
    R[combo] = {ret[0], ret[1]};
  }
  // near-optimal constant baseline: b_t = E[R_t]
  double b[2] = {0.0, 0.0};
  for (long combo = 0; combo < 9; ++combo)
    for (int t = 0; t < 2; ++t) b[t] += probs[combo] * R[combo][t];

  std::vector<double> exact = oracle::exact_policy_gradient(policy, env, gamma);
  std::vector<double> bl{b[0], b[1]};
  std::vector<double> exact_b =
      oracle::exact_policy_gradient(policy, env, gamma, &bl);
  double invariance = 0.0;
  for (size_t i = 0; i < P; ++i)
    invariance = std::max(invariance, std::abs(exact[i] - exact_b[i]));

  const long N = 50000;
  std::vector<double> sum0(P, 0), sq0(P, 0), sumb(P, 0), sqb(P, 0);
  std::vector<double> sumd(P, 0), sqd(P, 0);
  Rng mc_rng(1005);
  std::vector<double> x0(P), xb(P);
  for (long i = 0; i < N; ++i) {
    int combo = mc_rng.categorical(probs);
    for (size_t p = 0; p < P; ++p) {
      x0[p] = R[combo][0] * g[combo][0][p] + R[combo][1] * g[combo][1][p];
      xb[p] = (R[combo][0] - b[0]) * g[combo][0][p] +
              (R[combo][1] - b[1]) * g[combo][1][p];
      sum0[p] += x0[p];
      sq0[p] += x0[p] * x0[p];
      sumb[p] += xb[p];
      sqb[p] += xb[p] * xb[p];
      double d = x0[p] - xb[p];
      sumd[p] += d;
      sqd[p] += d * d;
    }
  }

  auto sigma_check = [&](const std::vector<double>& sum,
                         const std::vector<double>& sq,
                         const std::vector<double>& target) {
    double worst = 0.0;
    for (size_t p = 0; p < P; ++p) {
      double mean = sum[p] / N;
      double var = std::max(0.0, sq[p] / N - mean * mean);
      double stderr_ = std::sqrt(var / N);
      double z = std::abs(mean - target[p]) / (3.0 * stderr_ + 1e-12);
      worst = std::max(worst, z);
    }
    return worst;  // <= 1 means every component is inside 3 stderr
  };

  double z0 = sigma_check(sum0, sq0, exact);
  double zb = sigma_check(sumb, sqb, exact);
  double zd = sigma_check(sumd, sqd, std::vector<double>(P, 0.0));

  double var0 = 0.0, varb = 0.0;
  for (size_t p = 0; p < P; ++p) {
    double m0 = sum0[p] / N, mb = sumb[p] / N;
    var0 += std::max(0.0, sq0[p] / N - m0 * m0);
    varb += std::max(0.0, sqb[p] / N - mb * mb);
  }

  c.pass = z0 <= 1.0 && zb <= 1.0 && zd <= 1.0 && varb < var0 &&
           invariance <= 1e-10;
  std::ostringstream d;
  d << "50000 rollouts over " << P << " components; worst |z|/3: no-baseline "
    << z0 << ", baseline " << zb << ", paired-diff " << zd
    << " (all must be <= 1); total variance " << var0 << " -> " << varb
    << " (strict reduction, ratio " << varb / var0
    << "); oracle baseline-invariance " << invariance << " (bar 1e-10)";
  c.detail = d.str();
  return c;
}

// ---- criterion 4: in-filling learnability (alphabet task) ------------------
Criterion criterion4() {
  Criterion c;
  SyntheticTaskSpec task;
  task.kind = SyntheticTaskSpec::Kind::kAlphabetOrder;
  task.vocab_size = 12;
  task.seq_len = 8;
  std::vector<TokenSeq> train = gen_alphabet_task(task, 600, 2001);
  std::vector<TokenSeq> held_out = gen_alphabet_task(task, 120, 2002);
  int vocab = kNumSpecials + task.vocab_size;

  Config cfg;
  cfg.seed = 2003;
  cfg.embed = cfg.hidden = 32;
  cfg.layers = 1;
  cfg.dropout = 0.0;
  cfg.batch_size = 32;
  cfg.lm_epochs = 10;
  cfg.infill_epochs = 40;
  cfg.mask_rate = 0.4;
  cfg.d_pretrain_steps = 30;
  cfg.gan_iters = 10;
  cfg.validate();

  Rng rng(cfg.seed);
  Seq2SeqModel gen = Seq2SeqModel::create(cfg.model_dims(vocab),
                                          ModelRole::kGenerator, rng);
  pretrain_lm(gen, train, held_out, cfg);
  pretrain_infill(gen, train, held_out, cfg);
  Seq2SeqModel disc = Seq2SeqModel::create_shared_embedding(
      cfg.model_dims(vocab), gen.embedding, rng);
  gan_train_loop(gen, disc, train, held_out, cfg);

  // held-out in-fill accuracy: greedy fills vs the ground truth
  long correct = 0, total = 0;
  Rng mask_rng(2004);
  Rng fill_rng(2005);
  for (const Batch& batch : batch_iter(held_out, 32, 2006)) {
    MaskedBatch mb =
        make_masked_batch(batch, cfg.mask_rate, MaskRegime::kContiguous,
                          mask_rng);
    RolloutBatch ro = generator_fill(gen, mb, FillMode::kGreedy, fill_rng);
    for (int bi = 0; bi < ro.batch(); ++bi)
      for (int t = 0; t < ro.steps(); ++t)
        if (ro.scope[bi][t] > 0.0) {
          ++total;
          if (ro.composite[bi][t] == batch.rows[bi][t]) ++correct;
        }
  }
  double acc = static_cast<double>(correct) / static_cast<double>(total);
  c.pass = acc >= 0.95;
  std::ostringstream d;
  d << "alphabet task (vocab " << vocab << ", len 8, rate 0.4 contiguous): "
    << "held-out in-fill accuracy " << 100.0 * acc << "% (" << correct << "/"
    << total << ", bar 95%)";
  c.detail = d.str();
  return c;
}

// ---- criteria 5 and 6 share the Markov-chain setup --------------------------
struct MarkovArtifacts {
  bool ready = false;
  PerplexityStat mle_ppl, gan_ppl;
  std::vector<TokenSeq> mle_samples, gan_samples, reference;
};

MarkovArtifacts markov_run() {
  MarkovArtifacts art;
  SyntheticTaskSpec task;
  task.kind = SyntheticTaskSpec::Kind::kMarkovChain;
  task.vocab_size = 6;
  task.seq_len = 12;
  task.initial.assign(6, 1.0 / 6.0);
  task.transition.assign(6, std::vector<double>(6, 0.0));
  for (int i = 0; i < 6; ++i) {
    task.transition[i][(i + 1) % 6] = 0.55;
    task.transition[i][(i + 2) % 6] = 0.20;
    task.transition[i][i] = 0.15;
    task.transition[i][(i + 3) % 6] = 0.10;
  }
  std::vector<TokenSeq> corpus = gen_markov_corpus(task, 900, 3001);
  std::vector<TokenSeq> val(corpus.begin(), corpus.begin() + 100);
  std::vector<TokenSeq> train(corpus.begin() + 100, corpus.end());
  art.reference = val;
  int vocab = kNumSpecials + task.vocab_size;

  Config cfg;
  cfg.seed = 3002;
  cfg.embed = cfg.hidden = 16;
  cfg.layers = 1;
  cfg.dropout = 0.0;
  cfg.batch_size = 32;
  cfg.lm_epochs = 12;
  cfg.infill_epochs = 3;
  cfg.mask_rate = 0.5;
  cfg.validate();

  Rng rng(cfg.seed);
  Seq2SeqModel gen = Seq2SeqModel::create(cfg.model_dims(vocab),
                                          ModelRole::kGenerator, rng);
  pretrain_lm(gen, train, val, cfg);
  Seq2SeqModel frozen_lm = clone_model(gen, "acc5_lm.ckpt");

  pretrain_infill(gen, train, val, cfg);
  Seq2SeqModel mle = clone_model(gen, "acc5_mle.ckpt");

  // adversarial stage at rate 1: the free-running regime the samples are
  // drawn in
  Config gan_cfg = cfg;
  gan_cfg.mask_rate = 1.0;
  gan_cfg.gamma = 0.5;
  gan_cfg.g_lr = 5e-4;
  gan_cfg.d_pretrain_steps = 100;
  gan_cfg.gan_iters = 80;
  gan_cfg.validate();
  Seq2SeqModel disc = Seq2SeqModel::create_shared_embedding(
      cfg.model_dims(vocab), gen.embedding, rng);
  gan_train_loop(gen, disc, train, val, gan_cfg);

  Rng s_rng_a(3003), s_rng_b(3004);
  art.mle_samples = sample_unconditional(mle, 1000, task.seq_len, s_rng_a);
  art.gan_samples = sample_unconditional(gen, 1000, task.seq_len, s_rng_b);
  art.mle_ppl = sample_perplexity(art.mle_samples, frozen_lm);
  art.gan_ppl = sample_perplexity(art.gan_samples, frozen_lm);
  art.ready = true;
  return art;
}

Criterion criterion5(const MarkovArtifacts& art) {
  Criterion c;
  double gap = art.mle_ppl.mean - art.gan_ppl.mean;
  double pooled = std::sqrt(art.mle_ppl.stderr_ * art.mle_ppl.stderr_ +
                            art.gan_ppl.stderr_ * art.gan_ppl.stderr_);
  c.pass = art.gan_ppl.mean <= art.mle_ppl.mean && gap > 2.0 * pooled;
  std::ostringstream d;
  d << "Markov chain, 1000 unconditional samples each, frozen-LM sample ppl: "
    << "MaskGAN " << art.gan_ppl.mean << " +- " << art.gan_ppl.stderr_
    << " vs MaskMLE " << art.mle_ppl.mean << " +- " << art.mle_ppl.stderr_
    << "; gap " << gap << " vs 2*pooled stderr " << 2.0 * pooled;
  c.detail = d.str();
  return c;
}

Criterion criterion6(const MarkovArtifacts& art) {
  Criterion c;
  // machinery: production metric vs brute-force oracle on fuzzed sets
  Rng rng(1006);
  long mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<TokenSeq> samples;
    int n_samples = 1 + rng.uniform_int(8);
    for (int i = 0; i < n_samples; ++i) {
      TokenSeq s(2 + rng.uniform_int(9));
      for (auto& t : s) t = rng.uniform_int(9);  // pad/eos included
      samples.push_back(s);
    }
    for (int n = 2; n <= 4; ++n) {
      auto [distinct, total] = oracle::brute_ngram(samples, n);
      if (total == 0) continue;
      double expect = 100.0 * static_cast<double>(distinct) /
                      static_cast<double>(total);
      if (unique_ngram_pct(samples, n) != expect) ++mismatches;
    }
  }

  std::ostringstream d;
  d << "1000 fuzzed sets: " << mismatches
    << " mismatches vs brute-force (must be 0)";
  if (art.ready) {
    double gq = unique_ngram_pct(art.gan_samples, 4);
    d << "; Markov diversity report (unique %, n=2/3/4): MaskGAN "
      << unique_ngram_pct(art.gan_samples, 2) << "/"
      << unique_ngram_pct(art.gan_samples, 3) << "/" << gq << ", MaskMLE "
      << unique_ngram_pct(art.mle_samples, 2) << "/"
      << unique_ngram_pct(art.mle_samples, 3) << "/"
      << unique_ngram_pct(art.mle_samples, 4)
      << "; qualitative signature (GAN quadgram <= MLE quadgram): "
      << (gq <= unique_ngram_pct(art.mle_samples, 4) ? "observed"
                                                     : "not observed")
      << " (recorded, not gated)";
  }
  c.pass = mismatches == 0 && art.ready;
  c.detail = d.str();
  return c;
}

// ---- criterion 7: protocol fidelity ----------------------------------------
Criterion criterion7() {
  Criterion c;
  AdamConfig adam;
  bool adam_ok = adam.beta1 == 0.99 && adam.beta2 == 0.999;
  Config defaults;
  bool cfg_ok = defaults.beta1 == 0.99 && defaults.beta2 == 0.999 &&
                defaults.d_steps_per_g == 3;

  Rng rng(1007);
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 24; ++i) {
    TokenSeq s(5);
    for (auto& t : s) t = 4 + rng.uniform_int(3);
    corpus.push_back(s);
  }
  Config cfg;
  cfg.seed = 1008;
  cfg.embed = cfg.hidden = 6;
  cfg.layers = 1;
  cfg.batch_size = 8;
  cfg.dropout = 0.0;
  cfg.d_pretrain_steps = 4;
  cfg.gan_iters = 5;  // d_steps_per_g stays at the default of 3
  Rng model_rng(1009);
  ModelDims dims = cfg.model_dims(7);
  Seq2SeqModel gen = Seq2SeqModel::create(dims, ModelRole::kGenerator,
                                          model_rng);
  Seq2SeqModel disc = Seq2SeqModel::create_shared_embedding(
      dims, gen.embedding, model_rng);
  GanResult result = gan_train_loop(gen, disc, corpus, {}, cfg);
  long expected_d = cfg.d_pretrain_steps + 3L * cfg.gan_iters;
  bool counters_ok = result.counters.d_updates == expected_d &&
                     result.counters.g_updates == cfg.gan_iters &&
                     result.counters.critic_updates == cfg.gan_iters;
  c.pass = adam_ok && cfg_ok && counters_ok;
  std::ostringstream d;
  d << "Adam beta1/beta2 = " << adam.beta1 << "/" << adam.beta2
    << " (need 0.99/0.999); counters over " << cfg.gan_iters
    << " iterations: D " << result.counters.d_updates << " (expect "
    << expected_d << " = " << cfg.d_pretrain_steps << " pretrain + 3/iter), G "
    << result.counters.g_updates << ", critic "
    << result.counters.critic_updates;
  c.detail = d.str();
  return c;
}

// ---- criterion 8: reproducibility -------------------------------------------
Criterion criterion8() {
  Criterion c;
  std::string corpus_path = "acc8_corpus.txt";
  {
    std::ofstream out(corpus_path);
    Rng rng(1010);
    const char* toks[] = {"a", "b", "c", "d"};
    for (int i = 0; i < 32; ++i) {
      for (int t = 0; t < 6; ++t) out << toks[rng.uniform_int(4)] << ' ';
      out << '\n';
    }
  }
  Config cfg;
  cfg.seed = 1011;
  cfg.embed = cfg.hidden = 8;
  cfg.layers = 1;
  cfg.batch_size = 8;
  cfg.dropout = 0.1;  // dropout draws must be reproducible too
  cfg.lm_epochs = 2;
  cfg.infill_epochs = 1;
  cfg.d_pretrain_steps = 2;
  cfg.gan_iters = 2;

  auto run = [&](const std::string& dir) {
    std::filesystem::remove_all(dir);
    RunPaths paths(dir);
    cmd_build_vocab(corpus_path, cfg, paths);
    cmd_pretrain_lm(corpus_path, cfg, paths, false);
    cmd_pretrain_infill(corpus_path, cfg, paths, false);
    cmd_train_gan(corpus_path, cfg, paths, false);
    return paths;
  };
  RunPaths a = run("acc8_run_a");
  RunPaths b = run("acc8_run_b");

  bool manifest_same = file_bytes(a.manifest()) == file_bytes(b.manifest());
  bool lm_same =
      file_bytes(a.checkpoint("lm")) == file_bytes(b.checkpoint("lm"));
  bool mle_same =
      file_bytes(a.checkpoint("mle")) == file_bytes(b.checkpoint("mle"));
  bool gan_same =
      file_bytes(a.checkpoint("gan")) == file_bytes(b.checkpoint("gan"));

  // round-trip bit-exactness of the final artifact
  LoadedCheckpoint loaded = load_checkpoint(a.checkpoint("gan"));
  std::string resaved = "acc8_resave.ckpt";
  save_checkpoint(resaved, loaded.stage, loaded.generator,
                  loaded.discriminator ? &*loaded.discriminator : nullptr);
  bool roundtrip = file_bytes(resaved) == file_bytes(a.checkpoint("gan"));

  std::filesystem::remove(resaved);
  std::filesystem::remove(corpus_path);
  std::filesystem::remove_all(a.dir);
  std::filesystem::remove_all(b.dir);

  c.pass = manifest_same && lm_same && mle_same && gan_same && roundtrip;
  std::ostringstream d;
  d << "identical manifests -> byte-identical artifacts: manifest "
    << (manifest_same ? "yes" : "NO") << ", lm " << (lm_same ? "yes" : "NO")
    << ", mle " << (mle_same ? "yes" : "NO") << ", gan "
    << (gan_same ? "yes" : "NO") << "; save->load->save round-trip bit-exact: "
    << (roundtrip ? "yes" : "NO");
  c.detail = d.str();
  return c;
}

// ---- criterion 9: failure-mode regression -----------------------------------
Criterion criterion9() {
  Criterion c;
  // planted degenerate sampler: one sequence repeated
  std::vector<TokenSeq> degenerate(100, TokenSeq{4, 5, 6, 7, 4, 5, 6, 7});
  double quad = unique_ngram_pct(degenerate, 4);
  auto collapse = check_mode_collapse(degenerate);
  auto diverged = check_divergence(10.0, 41.0);  // > 4x start
  auto healthy = check_divergence(10.0, 39.0);

  // the monitors surface as warnings: a training run carries them in the
  // result instead of throwing
  Rng rng(1012);
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 16; ++i) {
    TokenSeq s(6);
    for (auto& t : s) t = 4 + rng.uniform_int(3);
    corpus.push_back(s);
  }
  Config cfg;
  cfg.seed = 1013;
  cfg.embed = cfg.hidden = 6;
  cfg.layers = 1;
  cfg.batch_size = 8;
  cfg.dropout = 0.0;
  cfg.d_pretrain_steps = 2;
  cfg.gan_iters = 10;  // hits the iter-10 monitor checkpoint
  Rng model_rng(1014);
  ModelDims dims = cfg.model_dims(7);
  Seq2SeqModel gen = Seq2SeqModel::create(dims, ModelRole::kGenerator,
                                          model_rng);
  Seq2SeqModel disc = Seq2SeqModel::create_shared_embedding(
      dims, gen.embedding, model_rng);
  bool no_abort = true;
  GanResult result;
  try {
    result = gan_train_loop(gen, disc, corpus,
                            {corpus.begin(), corpus.begin() + 4}, cfg);
  } catch (...) {
    no_abort = false;
  }

  c.pass = quad < 5.0 && collapse.has_value() && diverged.has_value() &&
           !healthy.has_value() && no_abort;
  std::ostringstream d;
  d << "planted degenerate sampler: unique quadgram " << quad
    << "% (< 5), flagged: " << (collapse ? "yes" : "NO")
    << "; divergence at 4.1x start flagged: " << (diverged ? "yes" : "NO")
    << ", 3.9x not flagged: " << (!healthy ? "yes" : "NO")
    << "; monitored GAN run completed without aborting: "
    << (no_abort ? "yes" : "NO") << " (" << result.warnings.size()
    << " warnings recorded)";
  c.detail = d.str();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  // optional args: criterion numbers to run (default all)
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto selected = [&](int id) {
    return only.empty() || std::count(only.begin(), only.end(), id) > 0;
  };

  struct Entry {
    int id;
    const char* name;
    std::function<Criterion()> fn;
  };

  MarkovArtifacts markov;
  std::vector<Entry> entries = {
      {1, "gradient correctness", criterion1},
      {2, "return equivalence", criterion2},
      {3, "estimator validity", criterion3},
      {4, "in-filling learnability", criterion4},
      {5, "sample quality (MaskGAN vs MaskMLE)",
       [&] {
         if (!markov.ready) markov = markov_run();
         return criterion5(markov);
       }},
      {6, "diversity metrics",
       [&] {
         if (!markov.ready) markov = markov_run();
         return criterion6(markov);
       }},
      {7, "protocol fidelity", criterion7},
      {8, "reproducibility", criterion8},
      {9, "failure-mode regression", criterion9},
  };

  int failures = 0;
  for (auto& e : entries) {
    if (!selected(e.id)) continue;
    Criterion c;
    auto start = std::chrono::steady_clock::now();
    try {
      c = e.fn();
    } catch (const std::exception& ex) {
      c.pass = false;
      c.detail = std::string("exception: ") + ex.what();
    }
    c.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
    std::printf("%s [%d] %s: %s (%.1fs)\n", c.pass ? "PASS" : "FAIL", e.id,
                e.name, c.detail.c_str(), c.seconds);
    std::fflush(stdout);
    if (!c.pass) ++failures;
  }
  if (failures) std::printf("%d criteria FAILED\n", failures);
  else std::printf("all 9 criteria passed\n");
  return failures == 0 ? 0 : 1;
}
