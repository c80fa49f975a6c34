/*
 * stam - spatio-temporal anomaly detection for crowded-scene video.
 *
 * C API of the shared library. All functions return a stam_status; any
 * non-STAM_OK result leaves a human-readable detail message retrievable
 * with stam_last_error_message() (thread-local). Objects are opaque
 * handles created and destroyed by the library.
 */

#ifndef STAM_H
#define STAM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define STAM_API __declspec(dllexport)
#else
#define STAM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum stam_status {
  STAM_OK = 0,
  STAM_ERR_NULL_ARGUMENT = 1,
  STAM_ERR_INVALID_ARGUMENT = 2,  /* bad parameters, invalid spec/config values */
  STAM_ERR_IO = 3,                /* file cannot be opened, read or written */
  STAM_ERR_FORMAT = 4,            /* bad magic/header/version, truncated or non-finite data */
  STAM_ERR_DIMENSION_MISMATCH = 5,
  STAM_ERR_GEOMETRY_MISMATCH = 6, /* model/config/test grids disagree */
  STAM_ERR_INSUFFICIENT_DATA = 7, /* empty training set, missing masks, degenerate scores */
  STAM_ERR_INTERNAL = 8
} stam_status;

STAM_API const char* stam_status_name(stam_status status);

/* Detail message of the last failing call on this thread; empty string if
 * none. The pointer stays valid until the next failing call on the thread. */
STAM_API const char* stam_last_error_message(void);

STAM_API void stam_version(int* major, int* minor, int* patch);

/* ------------------------------------------------------------------ */
/* Configuration                                                       */

typedef struct stam_config stam_config;

/* Built-in defaults. */
STAM_API stam_status stam_config_create(stam_config** out);
/* Parse a [section] key=value run-config file; unknown keys are rejected. */
STAM_API stam_status stam_config_load(const char* path, stam_config** out);
/* Override one value, addressed as "section.key", e.g. "detector.k". */
STAM_API stam_status stam_config_set(stam_config* config, const char* section_dot_key,
                                     const char* value);
/* Canonical text form. Writes up to *length bytes into buffer and stores the
 * full length (including the terminating NUL) back into *length; returns
 * STAM_ERR_INVALID_ARGUMENT if the buffer was too small. */
STAM_API stam_status stam_config_dump(const stam_config* config, char* buffer, size_t* length);
STAM_API void stam_config_free(stam_config* config);

/* ------------------------------------------------------------------ */
/* Flow fields and frames                                              */

typedef struct stam_flow stam_flow;
typedef struct stam_frame stam_frame;

/* Middlebury .flo file (little-endian float32). */
STAM_API stam_status stam_flow_read(const char* path, stam_flow** out);
STAM_API stam_status stam_flow_write(const stam_flow* flow, const char* path);
/* u and v are row-major width*height arrays. */
STAM_API stam_status stam_flow_create(int32_t width, int32_t height, const float* u,
                                      const float* v, stam_flow** out);
STAM_API stam_status stam_flow_dims(const stam_flow* flow, int32_t* width, int32_t* height);
/* Borrowed pointers into the handle, valid until stam_flow_free. */
STAM_API stam_status stam_flow_data(const stam_flow* flow, const float** u, const float** v);
STAM_API void stam_flow_free(stam_flow* flow);

/* Binary PGM (P5, maxval 255). */
STAM_API stam_status stam_frame_read(const char* path, stam_frame** out);
STAM_API stam_status stam_frame_dims(const stam_frame* frame, int32_t* width, int32_t* height);
STAM_API stam_status stam_frame_data(const stam_frame* frame, const uint8_t** intensity);
STAM_API void stam_frame_free(stam_frame* frame);

/* Dense optical flow between two equally sized frames (Horn-Schunck with a
 * fixed iteration count; deterministic). Component magnitudes are clamped
 * to +-clamp. */
STAM_API stam_status stam_flow_estimate(const stam_frame* prev, const stam_frame* next,
                                        int32_t iterations, double alpha, double clamp,
                                        stam_flow** out);

/* ------------------------------------------------------------------ */
/* Trained models                                                      */

typedef struct stam_model stam_model;

STAM_API stam_status stam_model_load(const char* path, stam_model** out);
STAM_API stam_status stam_model_save(const stam_model* model, const char* path);
typedef struct stam_model_info {
  int32_t cols, rows;
  int32_t patch_w, patch_h;
  int32_t frames_per_clip;
  int32_t bins_magnitude, bins_angle;
  double r_max;
  int32_t locations;
  int32_t min_histograms; /* smallest per-location history */
} stam_model_info;
STAM_API stam_status stam_model_get_info(const stam_model* model, stam_model_info* out);
STAM_API void stam_model_free(stam_model* model);

/* ------------------------------------------------------------------ */
/* Pipeline commands (the CLI verbs)                                   */
/*                                                                     */
/* Each command reads its inputs and writes its outputs at the paths   */
/* named in the config. threads <= 0 selects the hardware thread       */
/* count; results are bitwise identical for every thread count.        */

/* Estimate .flo fields for every consecutive frame pair under
 * paths.frames_dir into paths.flows_dir. */
STAM_API stam_status stam_run_flow(const stam_config* config, int32_t threads);

/* Train on all sequences under paths.flows_dir and write paths.model_file.
 * Optionally returns the trained model (pass NULL to skip). */
STAM_API stam_status stam_run_train(const stam_config* config, int32_t threads,
                                    stam_model** out_model);

/* Detect over paths.flows_dir with paths.model_file; write per-frame masks
 * and scores.csv under paths.output_dir. */
STAM_API stam_status stam_run_detect(const stam_config* config, int32_t threads);

/* Score the detections in paths.output_dir against the ground truth; write
 * metrics.csv and events.csv there. */
STAM_API stam_status stam_run_eval(const stam_config* config, int32_t threads);

/* Re-run detection for each K and write sweep.csv (K,EER_frame,EER_pixel).
 * k_values may be NULL to use the config's [sweep] k_values list. */
STAM_API stam_status stam_run_sweep(const stam_config* config, const int32_t* k_values,
                                    size_t k_count, int32_t threads);

/* Generate a synthetic scene dataset (flows/, masks/, index.csv, events.csv)
 * from a scene spec file. */
STAM_API stam_status stam_run_synth(const char* scene_path, const char* out_dir,
                                    int32_t threads);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* STAM_H */
