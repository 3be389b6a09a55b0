/* ftsqa — full-time supervised bidirectional GRU toolkit for factoid QA.
 *
 * C API of the shared library. All functions return an ftsqa_status; on
 * any non-zero status a human-readable message is available through
 * ftsqa_last_error() (thread-local). Objects are opaque handles owned by
 * the library and released with their _free function. Strings returned
 * through char** out-parameters are released with ftsqa_string_free().
 */
#ifndef FTSQA_H
#define FTSQA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef FTSQA_BUILD
#    define FTSQA_API __declspec(dllexport)
#  else
#    define FTSQA_API __declspec(dllimport)
#  endif
#else
#  define FTSQA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ftsqa_status {
  FTSQA_OK = 0,
  FTSQA_ERR_INVALID_ARGUMENT = 1, /* bad parameter / bad config value   */
  FTSQA_ERR_IO = 2,               /* unreadable or unwritable file      */
  FTSQA_ERR_PARSE = 3,            /* malformed file contents            */
  FTSQA_ERR_SHAPE = 4,            /* tensor dimension mismatch          */
  FTSQA_ERR_NUMERIC = 5,          /* non-finite value encountered       */
  FTSQA_ERR_STATE = 6             /* operation invalid for this handle  */
} ftsqa_status;

typedef struct ftsqa_config ftsqa_config;   /* run configuration        */
typedef struct ftsqa_dataset ftsqa_dataset; /* tokenized QA dataset     */
typedef struct ftsqa_model ftsqa_model;     /* trained model + vocab    */

/* Message for the most recent failure on this thread; never NULL. */
FTSQA_API const char* ftsqa_last_error(void);

FTSQA_API void ftsqa_string_free(char* s);

/* ---- configuration ----
 * Keys and defaults mirror the `key = value` config file format; see the
 * project README for the full key list. Precedence is caller-controlled:
 * later ftsqa_config_set calls override earlier values and file loads.
 */
FTSQA_API ftsqa_config* ftsqa_config_new(void);
FTSQA_API void ftsqa_config_free(ftsqa_config* cfg);
FTSQA_API ftsqa_status ftsqa_config_set(ftsqa_config* cfg, const char* key,
                                        const char* value);
FTSQA_API ftsqa_status ftsqa_config_load_file(ftsqa_config* cfg,
                                              const char* path);
/* Fully resolved configuration (defaults included) as `key = value` lines. */
FTSQA_API ftsqa_status ftsqa_config_dump(const ftsqa_config* cfg, char** out);

/* ---- datasets ---- */
FTSQA_API ftsqa_status ftsqa_dataset_load(const char* path,
                                          ftsqa_dataset** out);
FTSQA_API ftsqa_status ftsqa_dataset_save(const ftsqa_dataset* ds,
                                          const char* path);
FTSQA_API ftsqa_status ftsqa_dataset_synth(int32_t n_answers,
                                           int32_t q_per_answer,
                                           int32_t signature_len,
                                           int32_t noise_len, uint64_t seed,
                                           ftsqa_dataset** out);
FTSQA_API ftsqa_status ftsqa_dataset_filter_min_count(const ftsqa_dataset* ds,
                                                      int32_t min_count,
                                                      ftsqa_dataset** out);
FTSQA_API ftsqa_status ftsqa_dataset_split(const ftsqa_dataset* ds,
                                           uint64_t seed,
                                           ftsqa_dataset** train,
                                           ftsqa_dataset** validation,
                                           ftsqa_dataset** test);
FTSQA_API int32_t ftsqa_dataset_num_questions(const ftsqa_dataset* ds);
FTSQA_API int32_t ftsqa_dataset_num_answers(const ftsqa_dataset* ds);
FTSQA_API void ftsqa_dataset_free(ftsqa_dataset* ds);

/* ---- training ----
 * Trains on `train`, tracking per-epoch validation accuracy on
 * `validation` (pass NULL to fall back to the training split). Writes
 * metrics.jsonl, config.resolved, best.ckpt and final.ckpt under out_dir
 * and returns the best-on-validation model.
 */
FTSQA_API ftsqa_status ftsqa_train(const ftsqa_config* cfg,
                                   const ftsqa_dataset* train,
                                   const ftsqa_dataset* validation,
                                   const char* out_dir, ftsqa_model** out);

/* ---- models / checkpoints ---- */
FTSQA_API ftsqa_status ftsqa_model_load(const char* path, ftsqa_model** out);
FTSQA_API ftsqa_status ftsqa_model_save(const ftsqa_model* m,
                                        const char* path);
FTSQA_API void ftsqa_model_free(ftsqa_model* m);

/* ---- inference ----
 * method is "innerp" or "lr". The "lr" method fits a logistic-regression
 * head on lr_train (required for "lr", ignored for "innerp").
 */
FTSQA_API ftsqa_status ftsqa_evaluate(const ftsqa_model* m,
                                      const ftsqa_dataset* data,
                                      const char* method,
                                      const ftsqa_dataset* lr_train,
                                      double* accuracy);
/* Per-question predictions as TSV:
 * question_index \t true_answer \t predicted_answer \t top5_ids */
FTSQA_API ftsqa_status ftsqa_predict(const ftsqa_model* m,
                                     const ftsqa_dataset* data,
                                     const char* method,
                                     const ftsqa_dataset* lr_train,
                                     const char* out_path);

/* ---- gradient verification ----
 * Compares the analytic backward pass against central differences on
 * random desk-scale instances of the configured variant/loss. Returns a
 * per-tensor report; *pass is 1 when every tensor is within tolerance.
 */
FTSQA_API ftsqa_status ftsqa_gradcheck(const ftsqa_config* cfg,
                                       double tolerance, int32_t instances,
                                       char** report, int32_t* pass);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FTSQA_H */
