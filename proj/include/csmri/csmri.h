#ifndef CSMRI_H
#define CSMRI_H

/* C interface to the csmri shared library: opaque handles, status codes and a
   thread-local last-error message. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(CSMRI_BUILDING)
#define CSMRI_API __declspec(dllexport)
#else
#define CSMRI_API __declspec(dllimport)
#endif
#else
#define CSMRI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum csmri_status
{
  CSMRI_OK = 0,
  CSMRI_ERR_INVALID_ARGUMENT = 1,
  CSMRI_ERR_SHAPE_MISMATCH = 2,
  CSMRI_ERR_IO = 3,
  CSMRI_ERR_DIVERGED = 4,
  CSMRI_ERR_NOT_FOUND = 5,
  CSMRI_ERR_INTERNAL = 6
} csmri_status;

typedef struct csmri_manifest csmri_manifest;
typedef struct csmri_volume csmri_volume;

typedef struct csmri_recon_summary
{
  int iterations;
  double final_residual;
  double final_rel_err; /* against the simulated truth, NaN if unavailable */
} csmri_recon_summary;

/* Library version string. */
CSMRI_API const char *csmri_version(void);
/* Short machine-readable name of a status ("invalid_argument", ...). */
CSMRI_API const char *csmri_status_name(csmri_status s);
/* Message of the last failing call on this thread ("" if none). */
CSMRI_API const char *csmri_last_error(void);

CSMRI_API csmri_status csmri_manifest_load(const char *path, csmri_manifest **out);
/* Built-in defaults; relative paths resolve against the working directory. */
CSMRI_API csmri_status csmri_manifest_default(csmri_manifest **out);
CSMRI_API void csmri_manifest_free(csmri_manifest *m);
CSMRI_API csmri_status csmri_manifest_set_output(csmri_manifest *m, const char *dir);
CSMRI_API csmri_status csmri_manifest_set_noise_seed(csmri_manifest *m, uint64_t seed);
/* Number of retrospective factors and, per index, the factor and its reported undersampling R. */
CSMRI_API csmri_status csmri_manifest_factor_count(const csmri_manifest *m, size_t *out);
CSMRI_API csmri_status csmri_manifest_factor(const csmri_manifest *m, size_t index, int *factor, double *undersampling);
/* Text form of the manifest; copies at most `capacity` bytes including the terminator and
   stores the full length (without terminator) in *needed. */
CSMRI_API csmri_status csmri_manifest_format(const csmri_manifest *m, char *buffer, size_t capacity, size_t *needed);
/* Resolved run directory, same buffer convention as csmri_manifest_format. */
CSMRI_API csmri_status csmri_manifest_output_dir(const csmri_manifest *m, char *buffer, size_t capacity, size_t *needed);

CSMRI_API csmri_status csmri_simulate(const csmri_manifest *m, double *noise_sigma);
CSMRI_API csmri_status csmri_reconstruct(const csmri_manifest *m, const char *variant, int factor,
                                         csmri_recon_summary *summary);
/* Writes results.csv and slice panels; *rows receives the table row count. */
CSMRI_API csmri_status csmri_evaluate(const csmri_manifest *m, size_t *rows);
CSMRI_API csmri_status csmri_sweep(const csmri_manifest *m, int threads, size_t *rows);
/* variant "truth" selects the phantom; slice index < 0 picks the center slice. */
CSMRI_API csmri_status csmri_export_slice(const csmri_manifest *m, const char *variant, int factor,
                                          const char *out_path, int slice_index);

CSMRI_API csmri_status csmri_volume_load(const char *path, csmri_volume **out);
CSMRI_API void csmri_volume_free(csmri_volume *v);
CSMRI_API csmri_status csmri_volume_dims(const csmri_volume *v, int dims[3]);
CSMRI_API csmri_status csmri_relative_error(const csmri_volume *rec, const csmri_volume *ref, double *out);
/* axis: 0 = x, 1 = y, 2 = z */
CSMRI_API csmri_status csmri_haarpsi(const csmri_volume *rec, const csmri_volume *ref, int axis, double *out);

#ifdef __cplusplus
}
#endif

#endif
