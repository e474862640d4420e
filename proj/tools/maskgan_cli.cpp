#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "maskgan/capi.h"

namespace {

struct ConfigDeleter {
  void operator()(mg_config* c) const { mg_config_free(c); }
};
using ConfigPtr = std::unique_ptr<mg_config, ConfigDeleter>;

[[noreturn]] void die() {
  std::fprintf(stderr, "error: %s\n", mg_last_error());
  std::exit(1);
}

void check(int rc) {
  if (rc != MG_OK) die();
}

// Flag overrides beat the config file, which beats the defaults.
struct Overrides {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> kv;

  ConfigPtr build() const {
    ConfigPtr cfg(mg_config_new());
    if (!cfg) die();
    if (!config_path.empty())
      check(mg_config_load_file(cfg.get(), config_path.c_str()));
    for (const auto& [k, v] : kv)
      check(mg_config_set(cfg.get(), k.c_str(), v.c_str()));
    return cfg;
  }
};

// Registers the shared training flags on a subcommand; every flag simply
// queues a key=value override.
void add_config_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path, "key=value config file");
  auto kv = [&ov](const std::string& key) {
    return [&ov, key](const std::string& v) { ov.kv.emplace_back(key, v); };
  };
  cmd->add_option_function<std::string>("--seed", kv("seed"), "rng seed");
  cmd->add_option_function<std::string>("--mask-rate", kv("mask_rate"),
                                        "fraction of tokens masked");
  cmd->add_option_function<std::string>("--gamma", kv("gamma"),
                                        "reward discount factor");
  cmd->add_option_function<std::string>("--d-steps", kv("d_steps_per_g"),
                                        "discriminator updates per generator "
                                        "update");
  cmd->add_option_function<std::string>(
      "--reward-scope", kv("reward_scope"),
      "masked-only or all-positions");
  cmd->add_option_function<std::string>(
      "--full-vocab-rewards", kv("full_vocab_rewards"),
      "expected rewards over the full vocabulary (true/false)");
  cmd->add_option_function<std::string>("--curriculum", kv("curriculum"),
                                        "length curriculum (true/false)");
}

void print_and_free(char* text) {
  if (!text) return;
  std::fputs(text, stdout);
  mg_string_free(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MaskGAN text in-filling: pretraining, adversarial training, "
               "sampling and evaluation"};
  app.require_subcommand(1);

  std::string corpus, run_dir, ckpt, vocab, mode = "unconditional", text;
  std::string samples, reference;
  int length = 20, count = 1, max_len = 64;
  unsigned long long sample_seed = 42;
  bool force = false;
  Overrides ov;

  auto* build = app.add_subcommand("build-vocab",
                                   "build the vocabulary from a corpus");
  build->add_option("corpus", corpus, "training corpus, one sequence per line")
      ->required();
  build->add_option("--out", run_dir, "run directory")->required();
  add_config_flags(build, ov);

  auto add_stage = [&](const char* name, const char* desc) {
    auto* cmd = app.add_subcommand(name, desc);
    cmd->add_option("corpus", corpus, "training corpus")->required();
    cmd->add_option("--out", run_dir, "run directory")->required();
    cmd->add_flag("--force", force,
                  "proceed despite a config/manifest mismatch");
    add_config_flags(cmd, ov);
    return cmd;
  };
  auto* lm = add_stage("pretrain-lm", "stage 1: language-model pretraining");
  auto* infill = add_stage("pretrain-infill",
                           "stage 2: masked in-filling MLE pretraining");
  auto* gan = add_stage("train-gan", "stage 3: adversarial training");

  auto* sample = app.add_subcommand("sample", "generate text from a "
                                              "checkpoint");
  sample->add_option("--ckpt", ckpt, "model checkpoint")->required();
  sample->add_option("--vocab", vocab, "vocabulary file")->required();
  sample->add_option("--mode", mode, "unconditional or conditional");
  sample->add_option("--length", length, "sequence length (unconditional)");
  sample->add_option("--count", count, "number of samples");
  sample->add_option("--seed", sample_seed, "rng seed");
  sample->add_option("--text", text,
                     "conditional context, '_' marks a blank");

  auto* eval = app.add_subcommand("evaluate",
                                  "score a sample file against a frozen LM");
  eval->add_option("--samples", samples, "newline-separated samples file")
      ->required();
  eval->add_option("--ckpt", ckpt, "frozen LM checkpoint")->required();
  eval->add_option("--reference", reference, "reference corpus")->required();
  eval->add_option("--vocab", vocab, "vocabulary file")->required();
  eval->add_option("--max-len", max_len, "truncation length");

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference verification of the numerics");

  CLI11_PARSE(app, argc, argv);

  if (build->parsed()) {
    check(mg_build_vocab(ov.build().get(), corpus.c_str(), run_dir.c_str()));
  } else if (lm->parsed()) {
    check(mg_pretrain_lm(ov.build().get(), corpus.c_str(), run_dir.c_str(),
                         force));
  } else if (infill->parsed()) {
    check(mg_pretrain_infill(ov.build().get(), corpus.c_str(),
                             run_dir.c_str(), force));
  } else if (gan->parsed()) {
    check(mg_train_gan(ov.build().get(), corpus.c_str(), run_dir.c_str(),
                       force));
  } else if (sample->parsed()) {
    mg_model* model = mg_model_open(ckpt.c_str(), vocab.c_str());
    if (!model) die();
    char* out = nullptr;
    int rc = mode == "conditional"
                 ? mg_sample_conditional(model, text.c_str(), count,
                                         sample_seed, &out)
                 : mg_sample_unconditional(model, count, length, sample_seed,
                                           &out);
    mg_model_close(model);
    check(rc);
    print_and_free(out);
  } else if (eval->parsed()) {
    char* out = nullptr;
    check(mg_evaluate(samples.c_str(), ckpt.c_str(), reference.c_str(),
                      vocab.c_str(), max_len, &out));
    print_and_free(out);
  } else if (gradcheck->parsed()) {
    char* out = nullptr;
    int rc = mg_gradcheck(&out);
    print_and_free(out);
    if (rc != MG_OK) die();
  }
  return 0;
}
