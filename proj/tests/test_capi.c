/* Exercises the shared library through its C header only. */

#include "csmri/csmri.h"

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

int main(int argc, char **argv)
{
  if (argc < 2) {
    fprintf(stderr, "usage: %s SCRATCH_DIR\n", argv[0]);
    return 2;
  }
  char const *dir = argv[1];
  char path[8192];

  EXPECT(strlen(csmri_version()) > 0);
  EXPECT(strcmp(csmri_status_name(CSMRI_ERR_NOT_FOUND), "not_found") == 0);
  EXPECT(strcmp(csmri_status_name(CSMRI_OK), "ok") == 0);

  /* errors carry a category and a thread-local message */
  csmri_manifest *m = NULL;
  EXPECT(csmri_manifest_load("/nonexistent/manifest.txt", &m) == CSMRI_ERR_NOT_FOUND);
  EXPECT(m == NULL);
  EXPECT(strstr(csmri_last_error(), "manifest") != NULL);
  EXPECT(csmri_manifest_default(NULL) == CSMRI_ERR_INVALID_ARGUMENT);

  snprintf(path, sizeof path, "%s/bad.txt", dir);
  FILE *f = fopen(path, "w");
  fputs("coils = many\n", f);
  fclose(f);
  EXPECT(csmri_manifest_load(path, &m) == CSMRI_ERR_INVALID_ARGUMENT);

  snprintf(path, sizeof path, "%s/run.txt", dir);
  f = fopen(path, "w");
  fputs("grid = 16 16 16\nspacing = 6 6 6\ncoils = 2\nn_read = 16\nphase_extent = 16\nn_lines = 4\n"
        "n_radial = 16\nfactors = 1,2\nvariants = itSENSE,WaveCS\noutput = out\n",
        f);
  fclose(f);
  EXPECT(csmri_manifest_load(path, &m) == CSMRI_OK);
  EXPECT(strcmp(csmri_last_error(), "") == 0);

  size_t n = 0;
  EXPECT(csmri_manifest_factor_count(m, &n) == CSMRI_OK && n == 2);
  int factor = 0;
  double r1 = 0, r2 = 0;
  EXPECT(csmri_manifest_factor(m, 0, &factor, &r1) == CSMRI_OK && factor == 1);
  EXPECT(csmri_manifest_factor(m, 1, &factor, &r2) == CSMRI_OK && factor == 2);
  EXPECT(fabs(r2 - 2 * r1) < 1e-12);
  EXPECT(csmri_manifest_factor(m, 2, &factor, &r1) == CSMRI_ERR_INVALID_ARGUMENT);

  /* buffer convention: the needed length is reported, output is truncated and terminated */
  size_t need = 0;
  char small[8];
  EXPECT(csmri_manifest_format(m, small, sizeof small, &need) == CSMRI_OK);
  EXPECT(need > sizeof small && strlen(small) == sizeof small - 1);
  char *text = malloc(need + 1);
  EXPECT(csmri_manifest_format(m, text, need + 1, &need) == CSMRI_OK && strlen(text) == need);
  EXPECT(strstr(text, "factors = 1,2") != NULL);
  free(text);
  char out_dir[4096];
  EXPECT(csmri_manifest_output_dir(m, out_dir, sizeof out_dir, &need) == CSMRI_OK);
  EXPECT(strstr(out_dir, "out") != NULL);

  csmri_recon_summary s;
  EXPECT(csmri_reconstruct(m, "itSENSE", 1, &s) == CSMRI_ERR_NOT_FOUND);
  double sigma = 0;
  EXPECT(csmri_simulate(m, &sigma) == CSMRI_OK && sigma > 0);
  EXPECT(csmri_reconstruct(m, "SENSE", 1, &s) == CSMRI_ERR_INVALID_ARGUMENT);
  EXPECT(strstr(csmri_last_error(), "3DShearCS") != NULL);
  EXPECT(csmri_reconstruct(m, "WaveCS", 0, &s) == CSMRI_ERR_INVALID_ARGUMENT);

  size_t rows = 0;
  EXPECT(csmri_sweep(m, 2, &rows) == CSMRI_OK && rows == 4);

  snprintf(path, sizeof path, "%s/recon/itSENSE_f1.csvol", out_dir);
  csmri_volume *ref = NULL, *rec = NULL;
  EXPECT(csmri_volume_load(path, &ref) == CSMRI_OK);
  snprintf(path, sizeof path, "%s/recon/WaveCS_f2.csvol", out_dir);
  EXPECT(csmri_volume_load(path, &rec) == CSMRI_OK);
  int dims[3] = {0, 0, 0};
  EXPECT(csmri_volume_dims(rec, dims) == CSMRI_OK && dims[0] == 16 && dims[2] == 16);
  double v = -1;
  EXPECT(csmri_relative_error(ref, ref, &v) == CSMRI_OK && v == 0.0);
  EXPECT(csmri_relative_error(rec, ref, &v) == CSMRI_OK && v > 0.0 && v < 1.0);
  EXPECT(csmri_haarpsi(ref, ref, 2, &v) == CSMRI_OK && fabs(v - 1.0) < 1e-12);
  EXPECT(csmri_haarpsi(rec, ref, 3, &v) == CSMRI_ERR_INVALID_ARGUMENT);
  csmri_volume_free(rec);
  csmri_volume_free(ref);
  EXPECT(csmri_volume_load("/nonexistent.csvol", &rec) != CSMRI_OK);

  snprintf(path, sizeof path, "%s/truth.pgm", dir);
  EXPECT(csmri_export_slice(m, "truth", 1, path, -1) == CSMRI_OK);
  EXPECT(csmri_export_slice(m, "WaveCS", 2, path, 99) == CSMRI_ERR_INVALID_ARGUMENT);

  EXPECT(csmri_manifest_set_output(m, "elsewhere") == CSMRI_OK);
  EXPECT(csmri_evaluate(m, &rows) == CSMRI_ERR_NOT_FOUND);
  csmri_manifest_free(m);
  csmri_manifest_free(NULL);

  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
