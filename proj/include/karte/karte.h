/*
Copyright 2026 The Karte Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef KARTE_KARTE_H
#define KARTE_KARTE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KARTE_API __declspec(dllexport)
#elif defined(__GNUC__)
#define KARTE_API __attribute__((visibility("default")))
#else
#define KARTE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status; on failure karte_last_error()
 * describes it until the next call on the same thread. Strings handed out
 * through char** parameters are owned by the caller and released with
 * karte_free_string(). */
typedef enum karte_status {
    KARTE_OK = 0,
    KARTE_ERR_INVALID_ARGUMENT = 1,
    KARTE_ERR_SHAPE = 2,
    KARTE_ERR_IO = 3,
    KARTE_ERR_FORMAT = 4,
    KARTE_ERR_NUMERIC = 5,
    KARTE_ERR_STATE = 6,
    KARTE_ERR_INTERNAL = 7
} karte_status;

typedef struct karte_config karte_config;
typedef struct karte_model karte_model;
typedef struct karte_trace karte_trace;

/* Receives progress lines (training epochs, dataset summaries). */
typedef void (*karte_log_fn)(const char* line, void* user);

KARTE_API const char* karte_version(void);
KARTE_API const char* karte_last_error(void);
KARTE_API const char* karte_status_name(karte_status status);
KARTE_API void karte_free_string(char* s);
KARTE_API void karte_set_log_callback(karte_log_fn fn, void* user);

/* ---- configuration ---------------------------------------------------- */

/* Desk-scale defaults. */
KARTE_API karte_status karte_config_new(karte_config** out);
/* 224 input, 14x14x2048 annotation grid, 256 hidden units. */
KARTE_API karte_status karte_config_new_paper_scale(karte_config** out);
KARTE_API void karte_config_free(karte_config* cfg);
/* Unknown keys are rejected. */
KARTE_API karte_status karte_config_set(karte_config* cfg, const char* key, const char* value);
KARTE_API karte_status karte_config_load_file(karte_config* cfg, const char* path);
KARTE_API karte_status karte_config_get(const karte_config* cfg, const char* key, char** value);
/* Resolved configuration as key=value lines. */
KARTE_API karte_status karte_config_dump(const karte_config* cfg, char** text);

/* ---- pipeline --------------------------------------------------------- */

/* Writes images/, manifest.tsv and report.txt under out_dir. */
KARTE_API karte_status karte_synth_data(const karte_config* cfg, size_t count, const char* out_dir, char** report);
/* Classification pre-training of the encoder; needs a labelled manifest. */
KARTE_API karte_status karte_pretrain(const karte_config* cfg, const char* manifest, const char* out_checkpoint,
                                      char** summary);
/* pretrained may be NULL. Writes best.kcpt, final.kcpt, train_log.tsv,
 * split manifests, vocab.txt, config.txt and dataset.txt. */
KARTE_API karte_status karte_train(const karte_config* cfg, const char* manifest, const char* out_dir,
                                   const char* pretrained, char** summary);

KARTE_API karte_status karte_model_load(const char* checkpoint, karte_model** out);
KARTE_API void karte_model_free(karte_model* model);
/* Resolved config, vocabulary size and decode length cap. */
KARTE_API karte_status karte_model_info(const karte_model* model, char** text);

/* beam 0 uses the model's configured beam. trace may be NULL. */
KARTE_API karte_status karte_predict(const karte_model* model, const char* image, size_t beam, char** finding,
                                     double* log_prob, karte_trace** trace);

/* Evaluation report ("key: value" lines). With out_dir, also writes
 * report.txt, report.tsv, predictions.tsv and traces/. */
KARTE_API karte_status karte_evaluate(const karte_model* model, const char* manifest, size_t beam,
                                      int abnormal_only, const char* out_dir, char** report);

/* One PNG per trace step plus a summed map; listing names the files. */
KARTE_API karte_status karte_visualize(const char* trace, const char* image, const char* out_dir, char** listing);

/* Finite-difference suite; *passed is 1 when every check is within 1e-4. */
KARTE_API karte_status karte_gradcheck(uint64_t seed, char** report, int* passed);

/* ---- attention traces ------------------------------------------------- */

KARTE_API karte_status karte_trace_read(const char* path, karte_trace** out);
KARTE_API karte_status karte_trace_write(const karte_trace* trace, const char* path);
KARTE_API size_t karte_trace_steps(const karte_trace* trace);
KARTE_API size_t karte_trace_positions(const karte_trace* trace);
KARTE_API karte_status karte_trace_weight(const karte_trace* trace, size_t step, size_t position, double* out);
KARTE_API void karte_trace_free(karte_trace* trace);

#ifdef __cplusplus
}
#endif

#endif
