/* Copyright 2026 The faithdec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FAITHDEC_FAITHDEC_H_
#define FAITHDEC_FAITHDEC_H_

/* C interface to faithdec.
 *
 * Objects are opaque handles created and destroyed by the library. Every
 * fallible call returns an fd_status; on failure fd_last_error() describes
 * the problem (per thread, valid until the next call on that thread).
 * Configuration goes in as JSON text and results come back as JSON text
 * allocated by the library; release those with fd_string_free().
 *
 * Every entry point that involves randomness takes an explicit seed, which
 * overrides the corresponding seed fields of the JSON configuration and is
 * echoed into the returned reports.
 */

#include <stdint.h>

#if defined(_WIN32)
#if defined(FAITHDEC_BUILDING_LIBRARY)
#define FAITHDEC_API __declspec(dllexport)
#else
#define FAITHDEC_API __declspec(dllimport)
#endif
#else
#define FAITHDEC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fd_status {
  FD_OK = 0,
  FD_ERR_USAGE = 1,   /* null handle, bad argument */
  FD_ERR_CONFIG = 2,  /* invalid configuration or input file */
  FD_ERR_RUNTIME = 3  /* divergence, I/O failure, internal error */
} fd_status;

typedef struct fd_corpus fd_corpus;
typedef struct fd_model fd_model;

FAITHDEC_API const char* fd_version(void);
FAITHDEC_API const char* fd_last_error(void);
FAITHDEC_API void fd_string_free(char* s);

/* Corpus. `seed` becomes the corpus seed. */
FAITHDEC_API fd_status fd_corpus_generate(const char* config_json, uint64_t seed,
                                          fd_corpus** out);
FAITHDEC_API fd_status fd_corpus_load(const char* dir, fd_corpus** out);
FAITHDEC_API fd_status fd_corpus_save(const fd_corpus* corpus, const char* dir);
/* {"vocab_size", "train", "dev", "test", "reference_precision"} */
FAITHDEC_API fd_status fd_corpus_describe(const fd_corpus* corpus, char** out_json);
FAITHDEC_API void fd_corpus_free(fd_corpus* corpus);

/* Model. Training initializes from `seed` and shuffles with it.
 * out_json (optional) receives {"config", "epoch_losses"}. */
FAITHDEC_API fd_status fd_model_train(const fd_corpus* corpus, const char* config_json,
                                      uint64_t seed, fd_model** out, char** out_json);
FAITHDEC_API fd_status fd_model_load(const fd_corpus* corpus, const char* path,
                                     fd_model** out);
FAITHDEC_API fd_status fd_model_save(const fd_model* model, const char* path);
FAITHDEC_API uint64_t fd_model_calls(const fd_model* model);
FAITHDEC_API void fd_model_free(fd_model* model);

/* Decodes a split with one recipe.
 * config: {"recipe", "decode", "split", "limit", "scorers", "trace"}.
 * out_jsonl: one line per document with the summary, its scores, the
 * candidate list (with ranking scores for ranking recipes) and, when "trace"
 * is true and the recipe uses lookahead, the per-step trace.
 * out_report_json: a one-row experiment report. Either output may be NULL. */
FAITHDEC_API fd_status fd_decode(const fd_model* model, const fd_corpus* corpus,
                                 const char* config_json, uint64_t seed,
                                 char** out_jsonl, char** out_report_json);

/* One distillation round from `teacher`. `seed` drives teacher decoding and
 * the student's batch order. config: distill config plus optional "scorers"
 * and "eval_split". */
FAITHDEC_API fd_status fd_distill(const fd_model* teacher, const fd_corpus* corpus,
                                  const char* config_json, uint64_t seed,
                                  fd_model** out_student, char** out_labels_jsonl,
                                  char** out_report_json);

/* Iterative distillation over config "iterations" rounds; returns the last
 * student and a distill report with one block of rows per round. */
FAITHDEC_API fd_status fd_iterate(const fd_model* teacher, const fd_corpus* corpus,
                                  const char* config_json, uint64_t seed,
                                  fd_model** out_student, char** out_report_json);

/* Least-squares fit of a composite metric from CSV text (metric columns
 * followed by "label"). out_json: {"weights", "intercept", "mse", "rows"}. */
FAITHDEC_API fd_status fd_fit_composite(const char* csv_text, char** out_json);

/* Experiment report: one row per recipe. config: {"recipes", "scorers",
 * "decode", "split", "limit"}. */
FAITHDEC_API fd_status fd_run_experiment(const fd_model* model, const fd_corpus* corpus,
                                         const char* config_json, uint64_t seed,
                                         char** out_report_json);

/* Sweep report. config: experiment fields plus "axis" (beam_size, top_p,
 * lookahead_weight, alpha), "values" and optional "base" recipe. With
 * "tune": true on the lookahead_weight axis, returns the dev-split weight
 * search instead. */
FAITHDEC_API fd_status fd_sweep(const fd_model* model, const fd_corpus* corpus,
                                const char* config_json, uint64_t seed,
                                char** out_report_json);

/* Profiling reports. config "kind": "timing" (recipes, repeats), "max_top"
 * (beam_sizes, scorers) or "prefix" (recipe, document index, scorers). */
FAITHDEC_API fd_status fd_profile(const fd_model* model, const fd_corpus* corpus,
                                  const char* config_json, uint64_t seed,
                                  char** out_report_json);

/* Validates a report JSON against its schema and renders it as CSV. */
FAITHDEC_API fd_status fd_report_csv(const char* report_json, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif  // FAITHDEC_FAITHDEC_H_
