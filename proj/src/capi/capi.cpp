#include "csmri/csmri.h"

#include "csmri/io.hpp"
#include "csmri/metrics.hpp"
#include "csmri/pipeline.hpp"

#include <cmath>
#include <algorithm>
#include <cstring>
#include <limits>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

struct csmri_manifest
{
  csmri::RunManifest m;
};

struct csmri_volume
{
  csmri::ComplexVolume v;
};

namespace {

thread_local std::string last_error;

csmri_status to_status(csmri::ErrorCategory c)
{
  switch (c) {
  case csmri::ErrorCategory::invalid_argument:
    return CSMRI_ERR_INVALID_ARGUMENT;
  case csmri::ErrorCategory::shape_mismatch:
    return CSMRI_ERR_SHAPE_MISMATCH;
  case csmri::ErrorCategory::io:
    return CSMRI_ERR_IO;
  case csmri::ErrorCategory::diverged:
    return CSMRI_ERR_DIVERGED;
  case csmri::ErrorCategory::not_found:
    return CSMRI_ERR_NOT_FOUND;
  case csmri::ErrorCategory::internal:
    return CSMRI_ERR_INTERNAL;
  }
  return CSMRI_ERR_INTERNAL;
}

// Runs `f`, mapping exceptions to status codes and the thread-local message.
template <typename F>
csmri_status guard(F &&f)
{
  try {
    last_error.clear();
    f();
    return CSMRI_OK;
  } catch (csmri::Error const &e) {
    last_error = e.what();
    return to_status(e.category());
  } catch (std::filesystem::filesystem_error const &e) {
    last_error = e.what();
    return CSMRI_ERR_IO;
  } catch (std::bad_alloc const &) {
    last_error = "out of memory";
    return CSMRI_ERR_INTERNAL;
  } catch (std::exception const &e) {
    last_error = e.what();
    return CSMRI_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return CSMRI_ERR_INTERNAL;
  }
}

void copy_out(std::string const &s, char *buffer, size_t capacity, size_t *needed)
{
  *needed = s.size();
  if (buffer && capacity > 0) {
    std::size_t const n = std::min(capacity - 1, s.size());
    std::memcpy(buffer, s.data(), n);
    buffer[n] = '\0';
  }
}

void need(bool ok, char const *what)
{
  if (!ok) { csmri::fail(csmri::ErrorCategory::invalid_argument, std::string("null argument: ") + what); }
}

} // namespace

extern "C" {

const char *csmri_version(void) { return "1.0.0"; }

const char *csmri_status_name(csmri_status s)
{
  switch (s) {
  case CSMRI_OK:
    return "ok";
  case CSMRI_ERR_INVALID_ARGUMENT:
    return "invalid_argument";
  case CSMRI_ERR_SHAPE_MISMATCH:
    return "shape_mismatch";
  case CSMRI_ERR_IO:
    return "io";
  case CSMRI_ERR_DIVERGED:
    return "diverged";
  case CSMRI_ERR_NOT_FOUND:
    return "not_found";
  case CSMRI_ERR_INTERNAL:
    return "internal";
  }
  return "internal";
}

const char *csmri_last_error(void) { return last_error.c_str(); }

csmri_status csmri_manifest_load(const char *path, csmri_manifest **out)
{
  return guard([&] {
    need(path && out, "path/out");
    *out = nullptr;
    auto h = std::make_unique<csmri_manifest>();
    h->m = csmri::load_manifest(path);
    *out = h.release();
  });
}

csmri_status csmri_manifest_default(csmri_manifest **out)
{
  return guard([&] {
    need(out, "out");
    *out = new csmri_manifest{};
  });
}

void csmri_manifest_free(csmri_manifest *m) { delete m; }

csmri_status csmri_manifest_set_output(csmri_manifest *m, const char *dir)
{
  return guard([&] {
    need(m && dir, "manifest/dir");
    m->m.output = dir;
  });
}

csmri_status csmri_manifest_set_noise_seed(csmri_manifest *m, uint64_t seed)
{
  return guard([&] {
    need(m, "manifest");
    m->m.noise_seed = seed;
  });
}

csmri_status csmri_manifest_factor_count(const csmri_manifest *m, size_t *out)
{
  return guard([&] {
    need(m && out, "manifest/out");
    *out = m->m.factors.size();
  });
}

csmri_status csmri_manifest_factor(const csmri_manifest *m, size_t index, int *factor, double *undersampling)
{
  return guard([&] {
    need(m && factor && undersampling, "manifest/factor/undersampling");
    auto const t = csmri::factor_table(m->m);
    if (index >= t.size()) { csmri::fail(csmri::ErrorCategory::invalid_argument, "factor index out of range"); }
    *factor = t[index].factor;
    *undersampling = t[index].undersampling;
  });
}

csmri_status csmri_manifest_format(const csmri_manifest *m, char *buffer, size_t capacity, size_t *needed)
{
  return guard([&] {
    need(m && needed, "manifest/needed");
    copy_out(csmri::format_manifest(m->m), buffer, capacity, needed);
  });
}

csmri_status csmri_manifest_output_dir(const csmri_manifest *m, char *buffer, size_t capacity, size_t *needed)
{
  return guard([&] {
    need(m && needed, "manifest/needed");
    copy_out(m->m.output_dir().string(), buffer, capacity, needed);
  });
}

csmri_status csmri_simulate(const csmri_manifest *m, double *noise_sigma)
{
  return guard([&] {
    need(m, "manifest");
    auto const r = csmri::cmd_simulate(m->m);
    if (noise_sigma) { *noise_sigma = r.noise_sigma; }
  });
}

csmri_status csmri_reconstruct(const csmri_manifest *m, const char *variant, int factor, csmri_recon_summary *summary)
{
  return guard([&] {
    need(m && variant, "manifest/variant");
    auto const r = csmri::cmd_reconstruct(m->m, csmri::parse_variant(variant), factor);
    if (summary) {
      summary->iterations = int(r.diagnostics.size());
      summary->final_residual = r.diagnostics.empty() ? 0.0 : r.diagnostics.back().residual;
      summary->final_rel_err = !r.diagnostics.empty() && r.diagnostics.back().rel_err
                                 ? *r.diagnostics.back().rel_err
                                 : std::numeric_limits<double>::quiet_NaN();
    }
  });
}

csmri_status csmri_evaluate(const csmri_manifest *m, size_t *rows)
{
  return guard([&] {
    need(m, "manifest");
    auto const r = csmri::cmd_evaluate(m->m);
    if (rows) { *rows = r.size(); }
  });
}

csmri_status csmri_sweep(const csmri_manifest *m, int threads, size_t *rows)
{
  return guard([&] {
    need(m, "manifest");
    auto const r = csmri::cmd_sweep(m->m, threads);
    if (rows) { *rows = r.size(); }
  });
}

csmri_status csmri_export_slice(const csmri_manifest *m, const char *variant, int factor, const char *out_path,
                                int slice_index)
{
  return guard([&] {
    need(m && variant && out_path, "manifest/variant/out_path");
    std::optional<int> idx;
    if (slice_index >= 0) { idx = slice_index; }
    csmri::cmd_export_slice(m->m, variant, factor, out_path, idx);
  });
}

csmri_status csmri_volume_load(const char *path, csmri_volume **out)
{
  return guard([&] {
    need(path && out, "path/out");
    *out = nullptr;
    auto h = std::make_unique<csmri_volume>();
    h->v = csmri::load_volume(path);
    *out = h.release();
  });
}

void csmri_volume_free(csmri_volume *v) { delete v; }

csmri_status csmri_volume_dims(const csmri_volume *v, int dims[3])
{
  return guard([&] {
    need(v && dims, "volume/dims");
    auto const d = v->v.grid().dims();
    for (int a = 0; a < 3; ++a) { dims[a] = d[std::size_t(a)]; }
  });
}

csmri_status csmri_relative_error(const csmri_volume *rec, const csmri_volume *ref, double *out)
{
  return guard([&] {
    need(rec && ref && out, "rec/ref/out");
    *out = csmri::relative_error(rec->v, ref->v);
  });
}

csmri_status csmri_haarpsi(const csmri_volume *rec, const csmri_volume *ref, int axis, double *out)
{
  return guard([&] {
    need(rec && ref && out, "rec/ref/out");
    if (axis < 0 || axis > 2) { csmri::fail(csmri::ErrorCategory::invalid_argument, "axis must be 0, 1 or 2"); }
    *out = csmri::haarpsi(rec->v, ref->v, csmri::Axis(axis));
  });
}

} // extern "C"
