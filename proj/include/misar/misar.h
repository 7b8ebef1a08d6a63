/* SPDX-License-Identifier: Apache-2.0
 *
 * misar - sparse MIMO FMCW ISAR simulation, calibration and imaging toolkit
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MISAR_MISAR_H
#define MISAR_MISAR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MISAR_BUILD_SHARED)
#define MISAR_API __declspec(dllexport)
#else
#define MISAR_API __declspec(dllimport)
#endif
#else
#define MISAR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as command-line exit codes. */
typedef enum misar_status {
    MISAR_OK = 0,
    MISAR_ERR_USAGE = 2,
    MISAR_ERR_CONFIG = 3,
    MISAR_ERR_DATA_FORMAT = 4,
    MISAR_ERR_NUMERICAL = 5,
    MISAR_ERR_IO = 6,
    MISAR_ERR_INTERNAL = 7
} misar_status;

typedef struct misar_config misar_config;
typedef struct misar_geometry misar_geometry;
typedef struct misar_cube misar_cube;
typedef struct misar_calibration misar_calibration;
typedef struct misar_trajectory misar_trajectory;
typedef struct misar_image misar_image;

MISAR_API const char* misar_version(void);
/* Message of the last failed call on this thread ("" if none). */
MISAR_API const char* misar_last_error(void);
/* Releases strings returned through char** out-parameters. */
MISAR_API void misar_string_free(char* s);

/* ---- configuration: flat "section.key = value" text ---- */
MISAR_API misar_status misar_config_new(misar_config** out);
MISAR_API misar_status misar_config_load(const char* path, misar_config** out);
MISAR_API misar_status misar_config_parse(const char* text, misar_config** out);
MISAR_API misar_status misar_config_set(misar_config* cfg, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated); MISAR_ERR_CONFIG if absent. */
MISAR_API misar_status misar_config_get(const misar_config* cfg, const char* key, char* buf, size_t size);
MISAR_API void misar_config_free(misar_config* cfg);

/* ---- array geometry ---- */
MISAR_API misar_status misar_geometry_create(const misar_config* cfg, misar_geometry** out);
/* Antenna i: Tx 0..7, Rx 8..23. */
MISAR_API misar_status misar_geometry_antenna(const misar_geometry* g, int antenna, double xyz[3]);
MISAR_API misar_status misar_geometry_fingerprint(const misar_geometry* g, char hex[65]);
MISAR_API void misar_geometry_free(misar_geometry* g);

/* ---- waveform ---- */
MISAR_API misar_status misar_burst_duration(const misar_config* cfg, int n_channels, double* seconds);
MISAR_API misar_status misar_range_bin_spacing(const misar_config* cfg, int upsample, double* meters);

/* ---- raw data cubes ---- */
/* Simulates the experiment's collection in memory (no files written). */
MISAR_API misar_status misar_cube_simulate(const misar_config* cfg, misar_cube** out);
MISAR_API misar_status misar_cube_read(const char* path, misar_cube** out);
MISAR_API misar_status misar_cube_write(const misar_cube* cube, const char* path);
MISAR_API misar_status misar_cube_dims(const misar_cube* cube, int* n_bursts, int* n_channels, int* n_samples);
/* Interleaved (re, im) copy of one pulse; buf holds 2 * n_samples doubles. */
MISAR_API misar_status misar_cube_pulse(const misar_cube* cube, int burst, int channel, double* buf, size_t n);
MISAR_API misar_status misar_cube_digest(const misar_cube* cube, char hex[65]);
MISAR_API misar_status misar_cube_add_noise(const misar_cube* cube, double snr_db, uint64_t seed, misar_cube** out);
MISAR_API void misar_cube_free(misar_cube* cube);

/* ---- calibration solutions ---- */
MISAR_API misar_status misar_calibration_identity(const misar_geometry* g, misar_calibration** out);
MISAR_API misar_status misar_calibration_read(const char* path, misar_calibration** out);
MISAR_API misar_status misar_calibration_write(const misar_calibration* c, const char* path);
/* Estimated amplitude, phase (rad), delay (s) and offset (m) of antenna i. */
MISAR_API misar_status misar_calibration_antenna(const misar_calibration* c, int antenna, double* amplitude,
                                                 double* phase, double* delay, double offset[3]);
MISAR_API void misar_calibration_free(misar_calibration* c);

/* ---- trajectories ---- */
MISAR_API misar_status misar_trajectory_read(const char* path, misar_trajectory** out);
MISAR_API misar_status misar_trajectory_constant_velocity(const double start[3], const double velocity[3], double t0,
                                                          double t1, misar_trajectory** out);
MISAR_API misar_status misar_trajectory_position(const misar_trajectory* t, double time, double xyz[3]);
MISAR_API void misar_trajectory_free(misar_trajectory* t);

/* ---- images ---- */
/* Back-projection on the config's voxel grid and imaging options. The
 * calibration may be NULL (no compensation). workers < 1 selects
 * MISAR_WORKERS or the hardware concurrency. */
MISAR_API misar_status misar_image_backproject(const misar_cube* cube, const misar_geometry* g,
                                               const misar_calibration* calib, const misar_trajectory* traj,
                                               const misar_config* cfg, int workers, misar_image** out);
MISAR_API misar_status misar_image_read(const char* path, misar_image** out);
MISAR_API misar_status misar_image_write(const misar_image* image, const char* path);
MISAR_API misar_status misar_image_dims(const misar_image* image, int dims[3]);
MISAR_API misar_status misar_image_magnitude(const misar_image* image, int ix, int iy, int iz, double* value);
MISAR_API misar_status misar_image_digest(const misar_image* image, char hex[65]);
MISAR_API void misar_image_free(misar_image* image);

/* ---- analysis ---- */
typedef struct misar_psf {
    double peak_position[3]; /* m */
    int peak_index[3];
    double peak_db;
    double widths[3]; /* -3 dB, m */
    double psl_db;
} misar_psf;

MISAR_API misar_status misar_psf_metrics(const misar_image* image, misar_psf* out);
/* "key = value" report of the PSF, plus a before/after comparison when
 * `before` is not NULL. Free with misar_string_free. */
MISAR_API misar_status misar_metrics_report(const misar_image* image, const misar_image* before, char** report);

/* ---- experiment stages (artifacts under experiment.out) ---- */
MISAR_API misar_status misar_stage_simulate(const misar_config* cfg, char** summary);
MISAR_API misar_status misar_stage_scan(const misar_config* cfg, char** summary);
MISAR_API misar_status misar_stage_calibrate(const misar_config* cfg, const char* scan_csv, char** summary);
/* measurements_csv may be NULL: measurements are simulated from the truth. */
MISAR_API misar_status misar_stage_track(const misar_config* cfg, const char* measurements_csv, char** summary);
/* calib_path and track_path may be NULL: no compensation / truth trajectory. */
MISAR_API misar_status misar_stage_image(const misar_config* cfg, const char* cube_path, const char* calib_path,
                                         const char* track_path, char** summary);
MISAR_API misar_status misar_run_experiment(const misar_config* cfg, char** report);

/* Back-projection throughput for each worker count on the config's grid.
 * Writes CSV text: workers,seconds,voxel_pulses_per_s,speedup. */
MISAR_API misar_status misar_bench(const misar_config* cfg, const int* workers, size_t n_counts, char** csv);

#ifdef __cplusplus
}
#endif

#endif /* MISAR_MISAR_H */
