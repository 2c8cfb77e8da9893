/*
 * Copyright (c) 2026, The MVBind Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the MVBind music-video binding engine.
 *
 * Every object is an opaque handle created by an mvb_*_create/load/...
 * function and released with the matching mvb_*_free. Fallible calls return
 * an mvb_status; on failure mvb_last_error() describes the problem for the
 * calling thread. Strings returned as `char*` are owned by the caller and
 * released with mvb_string_free; `const char*` results are borrowed from
 * their handle.
 */
#ifndef MVBIND_MVBIND_H_
#define MVBIND_MVBIND_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MVBIND_BUILDING)
#define MVB_API __declspec(dllexport)
#else
#define MVB_API __declspec(dllimport)
#endif
#else
#define MVB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mvb_status {
  MVB_OK = 0,
  MVB_ERR_INVALID_ARGUMENT = 1,
  MVB_ERR_IO = 2,
  MVB_ERR_BAD_MAGIC = 3,
  MVB_ERR_UNSUPPORTED_VERSION = 4,
  MVB_ERR_TRUNCATED = 5,
  MVB_ERR_TRAILING_DATA = 6,
  MVB_ERR_DUPLICATE_ID = 7,
  MVB_ERR_NON_FINITE = 8,
  MVB_ERR_NO_COMMON_IDS = 9,
  MVB_ERR_SHAPE_MISMATCH = 10,
  MVB_ERR_ZERO_NORM = 11,
  MVB_ERR_FORMAT = 12,
  MVB_ERR_DIVERGENCE = 13,
  MVB_ERR_INTERNAL = 14
} mvb_status;

typedef enum mvb_direction { MVB_VIDEO_TO_AUDIO = 0, MVB_AUDIO_TO_VIDEO = 1 } mvb_direction;

typedef enum mvb_modality { MVB_MODALITY_VIDEO = 0, MVB_MODALITY_AUDIO = 1 } mvb_modality;

typedef struct mvb_embeddings mvb_embeddings;
typedef struct mvb_dataset mvb_dataset;
typedef struct mvb_model mvb_model;
typedef struct mvb_history mvb_history;
typedef struct mvb_report mvb_report;
typedef struct mvb_index mvb_index;
typedef struct mvb_result mvb_result;

MVB_API const char* mvb_version(void);
MVB_API const char* mvb_status_name(mvb_status status);
/* Message for the most recent failure on this thread; "" if none. */
MVB_API const char* mvb_last_error(void);
MVB_API void mvb_string_free(char* s);

/* Seed for a named consumer, derived from one user seed. */
MVB_API uint64_t mvb_derive_seed(uint64_t seed, const char* label);

/* ---- embeddings (MVBE binary or .tsv) ---------------------------------- */

MVB_API mvb_status mvb_embeddings_create(const char* const* ids, size_t count, uint32_t dim,
                                         const float* data, mvb_embeddings** out);
MVB_API mvb_status mvb_embeddings_load(const char* path, mvb_embeddings** out);
MVB_API mvb_status mvb_embeddings_save(const mvb_embeddings* m, const char* path);
MVB_API void mvb_embeddings_free(mvb_embeddings* m);
MVB_API size_t mvb_embeddings_count(const mvb_embeddings* m);
MVB_API uint32_t mvb_embeddings_dim(const mvb_embeddings* m);
MVB_API const char* mvb_embeddings_id(const mvb_embeddings* m, size_t row);
MVB_API const float* mvb_embeddings_row(const mvb_embeddings* m, size_t row);
MVB_API mvb_status mvb_embeddings_find(const mvb_embeddings* m, const char* id, size_t* row);

/* ---- paired datasets --------------------------------------------------- */

MVB_API mvb_status mvb_dataset_pair(const mvb_embeddings* video, const mvb_embeddings* audio,
                                    mvb_dataset** out);
/* Loads both files and pairs them by id. */
MVB_API mvb_status mvb_dataset_load(const char* video_path, const char* audio_path,
                                    mvb_dataset** out);
MVB_API mvb_status mvb_dataset_save(const mvb_dataset* d, const char* video_path,
                                    const char* audio_path);
MVB_API mvb_status mvb_dataset_split(const mvb_dataset* d, size_t n_val, uint64_t seed,
                                     mvb_dataset** train, mvb_dataset** val);
MVB_API mvb_status mvb_dataset_synthetic(size_t n_pairs, size_t latent_dim, double noise,
                                         uint64_t seed, uint32_t dim, mvb_dataset** out);
MVB_API size_t mvb_dataset_count(const mvb_dataset* d);
MVB_API const char* mvb_dataset_id(const mvb_dataset* d, size_t row);
MVB_API void mvb_dataset_free(mvb_dataset* d);

/* ---- model: two projection heads + temperature ------------------------- */

typedef struct mvb_model_config {
  uint32_t d_in_video;
  uint32_t d_in_audio;
  uint32_t d_hid;
  uint32_t d_out;
  double temperature;
  double dropout_p;
  double bn_momentum;
  double bn_eps;
  uint64_t seed;
} mvb_model_config;

typedef struct mvb_train_config {
  uint32_t batch_size;
  uint32_t epochs;
  double lr;
  uint64_t seed;
  int shuffle;
  uint32_t eval_every; /* epochs between monitor evaluations; 0 disables */
} mvb_train_config;

MVB_API void mvb_model_config_default(mvb_model_config* cfg);
MVB_API void mvb_train_config_default(mvb_train_config* cfg);

MVB_API mvb_status mvb_model_create(const mvb_model_config* cfg, mvb_model** out);
/* Checkpoint (MVBM) I/O; includes optimizer state and training config. */
MVB_API mvb_status mvb_model_load(const char* path, mvb_model** out);
MVB_API mvb_status mvb_model_save(const mvb_model* model, const char* path);
MVB_API void mvb_model_free(mvb_model* model);
MVB_API uint64_t mvb_model_step(const mvb_model* model);
MVB_API double mvb_model_temperature(const mvb_model* model);

/* Trains in place. `monitor` may be NULL; when given and eval_every > 0,
 * Recall@{1,5,10} (video to audio) is recorded on it every eval_every
 * epochs. The training loop itself never reads the monitor set. */
MVB_API mvb_status mvb_model_train(mvb_model* model, const mvb_dataset* train,
                                   const mvb_train_config* cfg, const mvb_dataset* monitor,
                                   mvb_history** out);
MVB_API size_t mvb_history_steps(const mvb_history* h);
MVB_API double mvb_history_loss(const mvb_history* h, size_t step);
MVB_API size_t mvb_history_eval_count(const mvb_history* h);
MVB_API const mvb_report* mvb_history_eval(const mvb_history* h, size_t i, uint32_t* epoch);
/* "step<TAB>loss" table. */
MVB_API char* mvb_history_tsv(const mvb_history* h);
MVB_API void mvb_history_free(mvb_history* h);

/* Eval-mode projection of raw features through one modality's head. */
MVB_API mvb_status mvb_model_project(const mvb_model* model, const mvb_embeddings* raw,
                                     mvb_modality modality, mvb_embeddings** out);

/* ---- evaluation -------------------------------------------------------- */

MVB_API mvb_status mvb_model_evaluate(const mvb_model* model, const mvb_dataset* val,
                                      const int* ks, size_t n_ks, mvb_direction direction,
                                      mvb_report** out);
MVB_API size_t mvb_report_size(const mvb_report* r);
MVB_API int mvb_report_k(const mvb_report* r, size_t i);
MVB_API double mvb_report_recall(const mvb_report* r, size_t i);
MVB_API size_t mvb_report_queries(const mvb_report* r);
/* "K<TAB>recall_pct" table, one decimal. */
MVB_API char* mvb_report_tsv(const mvb_report* r);
/* Single-line JSON record. */
MVB_API char* mvb_report_record(const mvb_report* r);
MVB_API void mvb_report_free(mvb_report* r);

/* ---- retrieval --------------------------------------------------------- */

MVB_API mvb_status mvb_index_build(const mvb_embeddings* projected, mvb_index** out);
MVB_API void mvb_index_free(mvb_index* idx);
MVB_API mvb_status mvb_index_query(const mvb_index* idx, const float* query, size_t dim, size_t k,
                                   mvb_result** out);
MVB_API size_t mvb_result_count(const mvb_result* r);
MVB_API const char* mvb_result_id(const mvb_result* r, size_t i);
MVB_API float mvb_result_score(const mvb_result* r, size_t i);
MVB_API void mvb_result_free(mvb_result* r);

/* ---- black-border cropping --------------------------------------------- */

typedef struct mvb_border_params {
  double borderless_std;
  double edge_magnitude;
  double edge_fraction;
  int32_t black_threshold;
  double contrast_margin;
  int32_t nms_radius;
  double search_fraction;
  double min_area_fraction;
} mvb_border_params;

/* left/top inclusive, right/bottom exclusive. */
typedef struct mvb_crop_rect {
  int32_t left;
  int32_t top;
  int32_t right;
  int32_t bottom;
} mvb_crop_rect;

MVB_API void mvb_border_params_default(mvb_border_params* p);
/* `frames` holds n pointers to width*height 8-bit gray rasters. */
MVB_API mvb_status mvb_crop_detect_gray(const uint8_t* const* frames, size_t n, int32_t width,
                                        int32_t height, const mvb_border_params* params,
                                        mvb_crop_rect* out);
/* PGM (P5) or PPM (P6) frames; color frames are reduced to luma. */
MVB_API mvb_status mvb_crop_detect_files(const char* const* paths, size_t n,
                                         const mvb_border_params* params, mvb_crop_rect* out);
MVB_API mvb_status mvb_image_info(const char* path, int32_t* width, int32_t* height,
                                  int32_t* channels);
MVB_API mvb_status mvb_crop_apply_file(const char* in_path, const mvb_crop_rect* rect,
                                       const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* MVBIND_MVBIND_H_ */
