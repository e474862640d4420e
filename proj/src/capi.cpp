#include "maskgan/capi.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <sstream>
#include <string>

#include "pipeline.hpp"

struct mg_config {
  maskgan::Config cfg;
};

struct mg_model {
  maskgan::LoadedCheckpoint ckpt;
  maskgan::Vocab vocab;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs f, translating exceptions into MG_ERROR + mg_last_error().
template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return MG_INVALID_ARG;
  } catch (const std::exception& e) {
    set_error(e.what());
    return MG_ERROR;
  } catch (...) {
    set_error("unknown error");
    return MG_ERROR;
  }
}

int emit_lines(const std::vector<std::string>& lines, char** out_text) {
  std::string joined;
  for (const auto& l : lines) {
    joined += l;
    joined += '\n';
  }
  *out_text = dup_string(joined);
  return *out_text ? MG_OK : MG_ERROR;
}

}  // namespace

extern "C" {

const char* mg_version(void) { return "maskgan-0.1.0"; }

const char* mg_last_error(void) { return g_last_error.c_str(); }

mg_config* mg_config_new(void) { return new (std::nothrow) mg_config(); }

void mg_config_free(mg_config* cfg) { delete cfg; }

int mg_config_load_file(mg_config* cfg, const char* path) {
  if (!cfg || !path) {
    set_error("null argument");
    return MG_INVALID_ARG;
  }
  return guarded([&] {
    cfg->cfg.load_file(path);
    return MG_OK;
  });
}

int mg_config_set(mg_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) {
    set_error("null argument");
    return MG_INVALID_ARG;
  }
  return guarded([&] {
    cfg->cfg.set(key, value);
    return MG_OK;
  });
}

int mg_build_vocab(const mg_config* cfg, const char* corpus_path,
                   const char* run_dir) {
  if (!cfg || !corpus_path || !run_dir) {
    set_error("null argument");
    return MG_INVALID_ARG;
  }
  return guarded([&] {
    maskgan::cmd_build_vocab(corpus_path, cfg->cfg,
                             maskgan::RunPaths(run_dir));
    return MG_OK;
  });
}

int mg_pretrain_lm(const mg_config* cfg, const char* corpus_path,
                   const char* run_dir, int force) {
  if (!cfg || !corpus_path || !run_dir) {
    set_error("null argument");
    return MG_INVALID_ARG;
  }
  return guarded([&] {
    maskgan::cmd_pretrain_lm(corpus_path, cfg->cfg, maskgan::RunPaths(run_dir),
                             force != 0);
    return MG_OK;
  });
}

int mg_pretrain_infill(const mg_config* cfg, const char* corpus_path,
                       const char* run_dir, int force) {
  if (!cfg || !corpus_path || !run_dir) {
    set_error("null argument");
    return MG_INVALID_ARG;
  }
  return guarded([&] {
    maskgan::cmd_pretrain_infill(corpus_path, cfg->cfg,
                                 maskgan::RunPaths(run_dir), force != 0);
    return MG_OK;
  });
}

int mg_train_gan(const mg_config* cfg, const char* corpus_path,
                 const char* run_dir, int force) {
  if (!cfg || !corpus_path || !run_dir) {
    set_error("null argument");
    return MG_INVALID_ARG;
  }
  return guarded([&] {
    maskgan::cmd_train_gan(corpus_path, cfg->cfg, maskgan::RunPaths(run_dir),
                           force != 0);
    return MG_OK;
  });
}

mg_model* mg_model_open(const char* ckpt_path, const char* vocab_path) {
  if (!ckpt_path || !vocab_path) {
    set_error("null argument");
    return nullptr;
  }
  try {
    auto model = std::make_unique<mg_model>(
        mg_model{maskgan::load_checkpoint(ckpt_path),
                 maskgan::Vocab::load(vocab_path)});
    if (model->vocab.size() != model->ckpt.dims.vocab)
      throw std::runtime_error("vocab size does not match the checkpoint");
    return model.release();
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  }
}

void mg_model_close(mg_model* model) { delete model; }

int mg_sample_unconditional(const mg_model* model, int count, int length,
                            uint64_t seed, char** out_text) {
  if (!model || !out_text) {
    set_error("null argument");
    return MG_INVALID_ARG;
  }
  return guarded([&] {
    maskgan::SampleRequest req;
    req.mode = "unconditional";
    req.count = count;
    req.length = length;
    req.seed = seed;
    return emit_lines(maskgan::sample_with(model->ckpt, model->vocab, req),
                      out_text);
  });
}

int mg_sample_conditional(const mg_model* model, const char* text, int count,
                          uint64_t seed, char** out_text) {
  if (!model || !text || !out_text) {
    set_error("null argument");
    return MG_INVALID_ARG;
  }
  return guarded([&] {
    maskgan::SampleRequest req;
    req.mode = "conditional";
    req.count = count;
    req.text = text;
    req.seed = seed;
    return emit_lines(maskgan::sample_with(model->ckpt, model->vocab, req),
                      out_text);
  });
}

int mg_evaluate(const char* samples_path, const char* lm_ckpt_path,
                const char* reference_path, const char* vocab_path,
                int max_len, char** out_text) {
  if (!samples_path || !lm_ckpt_path || !reference_path || !vocab_path ||
      !out_text) {
    set_error("null argument");
    return MG_INVALID_ARG;
  }
  return guarded([&] {
    maskgan::MetricsReport report = maskgan::cmd_evaluate(
        samples_path, lm_ckpt_path, reference_path, vocab_path, max_len);
    std::ostringstream out;
    out << report.to_text() << '\n'
        << maskgan::MetricsReport::csv_header() << '\n'
        << report.to_csv_row() << '\n';
    *out_text = dup_string(out.str());
    return *out_text ? MG_OK : MG_ERROR;
  });
}

int mg_gradcheck(char** out_text) {
  return guarded([&] {
    std::string report;
    int rc = maskgan::cmd_gradcheck(&report);
    if (out_text) {
      *out_text = dup_string(report);
      if (!*out_text) return MG_ERROR;
    }
    if (rc != 0) {
      set_error("gradient check failed");
      return MG_ERROR;
    }
    return MG_OK;
  });
}

void mg_string_free(char* s) { std::free(s); }

}  // extern "C"
