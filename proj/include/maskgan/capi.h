#ifndef MASKGAN_CAPI_H
#define MASKGAN_CAPI_H

/* C interface to the MaskGAN in-filling library.
 *
 * All functions returning int use MG_OK (0) for success. On any other
 * return value, mg_last_error() describes the failure; the message is
 * thread-local and valid until the next failing call on the same thread.
 * Strings returned through char** out-parameters are heap-allocated and
 * must be released with mg_string_free().
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  MG_OK = 0,
  MG_ERROR = 1,          /* runtime failure, see mg_last_error() */
  MG_INVALID_ARG = 2     /* bad argument (null handle, bad value) */
};

typedef struct mg_config mg_config;
typedef struct mg_model mg_model;

const char* mg_version(void);
const char* mg_last_error(void);

/* ---- configuration ---- */

/* Fresh config with library defaults. Never fails. */
mg_config* mg_config_new(void);
void mg_config_free(mg_config* cfg);
/* Plain-text key=value file, '#' comments. */
int mg_config_load_file(mg_config* cfg, const char* path);
int mg_config_set(mg_config* cfg, const char* key, const char* value);

/* ---- pipeline stages ----
 * run_dir is created on demand and holds the vocab, manifest, checkpoints
 * and metrics. Each stage requires the artifacts of the previous one and
 * fails with a message naming the missing stage. force != 0 overrides a
 * config/manifest mismatch.
 */
int mg_build_vocab(const mg_config* cfg, const char* corpus_path,
                   const char* run_dir);
int mg_pretrain_lm(const mg_config* cfg, const char* corpus_path,
                   const char* run_dir, int force);
int mg_pretrain_infill(const mg_config* cfg, const char* corpus_path,
                       const char* run_dir, int force);
int mg_train_gan(const mg_config* cfg, const char* corpus_path,
                 const char* run_dir, int force);

/* ---- sampling ---- */

mg_model* mg_model_open(const char* ckpt_path, const char* vocab_path);
void mg_model_close(mg_model* model);

/* count samples of the given length, newline separated. */
int mg_sample_unconditional(const mg_model* model, int count, int length,
                            uint64_t seed, char** out_text);
/* text is a whitespace-tokenized line with "_" marking blanks; each fill is
 * rendered as [[token]]. */
int mg_sample_conditional(const mg_model* model, const char* text, int count,
                          uint64_t seed, char** out_text);

/* ---- evaluation and verification ---- */

/* Newline-separated samples file scored against a frozen LM checkpoint and a
 * reference corpus; out_text receives the human-readable report followed by
 * the CSV header and row. */
int mg_evaluate(const char* samples_path, const char* lm_ckpt_path,
                const char* reference_path, const char* vocab_path,
                int max_len, char** out_text);

/* Finite-difference verification of all ops and composed losses. MG_OK when
 * every check passes; out_text (optional) receives the per-check report. */
int mg_gradcheck(char** out_text);

void mg_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* MASKGAN_CAPI_H */
