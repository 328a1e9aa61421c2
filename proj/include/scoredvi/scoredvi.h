// Copyright 2026 The scoredvi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCOREDVI_SCOREDVI_H_
#define SCOREDVI_SCOREDVI_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SDVI_EXPORT __declspec(dllexport)
#elif defined(__GNUC__)
#define SDVI_EXPORT __attribute__((visibility("default")))
#else
#define SDVI_EXPORT
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdvi_status {
  SDVI_OK = 0,
  SDVI_ERR_ARGUMENT = 1,
  SDVI_ERR_DOMAIN = 2,
  SDVI_ERR_IO = 3,
  SDVI_ERR_FORMAT = 4,
  SDVI_ERR_NUMERIC = 5,
  SDVI_ERR_ORACLE = 6,
  SDVI_ERR_CONFIG = 7,
  SDVI_ERR_INTERNAL = 8
} sdvi_status;

/* Message for the most recent failure on the calling thread ("" if none). */
SDVI_EXPORT const char* sdvi_last_error(void);
SDVI_EXPORT const char* sdvi_status_name(sdvi_status status);
SDVI_EXPORT const char* sdvi_version(void);

/* ---- images ------------------------------------------------------------ */

/* C x H x W, row-major doubles. */
typedef struct sdvi_image sdvi_image;

/* data may be NULL (zero-filled). */
SDVI_EXPORT sdvi_status sdvi_image_create(int channels, int height, int width, const double* data,
                                          sdvi_image** out);
/* PNG, binary PGM/PPM (8-bit) or SDVI1 tensor. */
SDVI_EXPORT sdvi_status sdvi_image_load(const char* path, sdvi_image** out);
/* Format by extension: .png .pgm .ppm (quantized) or .sdvi (verbatim). */
SDVI_EXPORT sdvi_status sdvi_image_save(const sdvi_image* img, const char* path);
SDVI_EXPORT sdvi_status sdvi_tensor_save(const sdvi_image* img, const char* path);
SDVI_EXPORT sdvi_status sdvi_image_shape(const sdvi_image* img, int* channels, int* height, int* width);
/* Borrowed pointer, valid until the image is freed. */
SDVI_EXPORT const double* sdvi_image_data(const sdvi_image* img);
SDVI_EXPORT void sdvi_image_free(sdvi_image* img);

SDVI_EXPORT sdvi_status sdvi_psnr(const sdvi_image* a, const sdvi_image* b, double* out);
SDVI_EXPORT sdvi_status sdvi_ssim(const sdvi_image* a, const sdvi_image* b, double* out);

/* ---- noise level --------------------------------------------------------- */

/* Noise std on the 0-255 scale; the image must be at least 32x32. */
SDVI_EXPORT sdvi_status sdvi_estimate_noise(const sdvi_image* img, double* delta);
SDVI_EXPORT double sdvi_lambda_weight(double delta, double l1, double l2, double gamma);

/* ---- configuration -------------------------------------------------------- */

typedef struct sdvi_config sdvi_config;

/* Defaults; no oracle set. */
SDVI_EXPORT sdvi_status sdvi_config_create(sdvi_config** out);
/* "key = value" file; K, M, T and oracle are required. */
SDVI_EXPORT sdvi_status sdvi_config_load(const char* path, sdvi_config** out);
SDVI_EXPORT sdvi_status sdvi_config_set(sdvi_config* cfg, const char* key, const char* value);
/* Copies the value (NUL-terminated, truncated to size) into buf. *needed, if
 * non-NULL, receives the full length including the terminator. */
SDVI_EXPORT sdvi_status sdvi_config_get(const sdvi_config* cfg, const char* key, char* buf, size_t size,
                                        size_t* needed);
SDVI_EXPORT sdvi_status sdvi_config_validate(const sdvi_config* cfg);
SDVI_EXPORT sdvi_status sdvi_config_clone(const sdvi_config* cfg, sdvi_config** out);
SDVI_EXPORT void sdvi_config_free(sdvi_config* cfg);

/* ---- denoising ------------------------------------------------------------ */

typedef struct sdvi_breakdown {
  int iteration;
  double L1;
  double L2_entropy;
  double L3;
  double L4;
  double L5;
  double lambda;
  double total;
} sdvi_breakdown;

typedef struct sdvi_result sdvi_result;

/* Called once per iteration; return nonzero to keep going, 0 to abort the run
 * (reported as SDVI_ERR_ARGUMENT). */
typedef int (*sdvi_progress_fn)(const sdvi_breakdown* b, void* user);

SDVI_EXPORT sdvi_status sdvi_denoise(const sdvi_config* cfg, const sdvi_image* noisy, sdvi_progress_fn progress,
                                     void* user, sdvi_result** out);
/* New images owned by the caller. */
SDVI_EXPORT sdvi_status sdvi_result_mean(const sdvi_result* r, sdvi_image** out);
SDVI_EXPORT sdvi_status sdvi_result_variance(const sdvi_result* r, sdvi_image** out);
/* Mixture weights of component k (0-based). */
SDVI_EXPORT sdvi_status sdvi_result_pi(const sdvi_result* r, int k, sdvi_image** out);
SDVI_EXPORT double sdvi_result_delta(const sdvi_result* r);
SDVI_EXPORT double sdvi_result_lambda(const sdvi_result* r);
SDVI_EXPORT size_t sdvi_result_history_length(const sdvi_result* r);
SDVI_EXPORT sdvi_status sdvi_result_history(const sdvi_result* r, size_t i, sdvi_breakdown* out);
/* CSV "iter,L1,L2ent,L3,L4,L5,lambda,total". */
SDVI_EXPORT sdvi_status sdvi_result_write_log(const sdvi_result* r, const char* path);
SDVI_EXPORT void sdvi_result_free(sdvi_result* r);

/* ---- synthesis ------------------------------------------------------------ */

/* scene: constant | ramp | checker | smooth-random.
 * noise: awgn:sigma=s | correlated:sigma=s,ksize=n | signal:a=a,b=b |
 *        nonuniform:lo=v,hi=v.
 * prior_s2 <= 0 means no prior draw (clean = scene).
 * Writes <dir>/<name>_clean.png, <name>_noisy.png, <name>_clean.sdvi,
 * <name>_noisy.sdvi and the sidecar <name>.txt. */
SDVI_EXPORT sdvi_status sdvi_synth_write(const char* dir, const char* name, const char* scene, int height,
                                         int width, const char* noise, double prior_s2, uint64_t seed);
/* Reads a sidecar and writes its noise description in canonical form. */
SDVI_EXPORT sdvi_status sdvi_sidecar_noise(const char* path, char* buf, size_t size, size_t* needed);

/* ---- self test ------------------------------------------------------------ */

typedef void (*sdvi_selftest_fn)(const char* suite, const char* check, int passed, const char* detail,
                                 void* user);

/* suite NULL or "" runs all. sigma2_per_sigma selects the d/d sigma form of the sigma2
 * gradient. *all_passed receives 1 when every check passed. */
SDVI_EXPORT sdvi_status sdvi_selftest(const char* suite, int sigma2_per_sigma, sdvi_selftest_fn report, void* user,
                                      int* all_passed);

#ifdef __cplusplus
}
#endif

#endif  // SCOREDVI_SCOREDVI_H_
