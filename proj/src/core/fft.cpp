#include "csmri/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <tuple>

namespace csmri {

namespace {

// Plans are created once per shape with FFTW_ESTIMATE (deterministic) and live for the process.
// Only planning is serialized; fftw_execute_dft is thread-safe.
using PlanKey = std::tuple<int, int, int, int, int, int>; // kind, d0, d1, d2, axis, sign

std::mutex plan_mutex;
std::map<PlanKey, fftw_plan> &plan_cache()
{
  static std::map<PlanKey, fftw_plan> cache;
  return cache;
}

fftw_plan make_plan(PlanKey const &key, std::array<int, 3> dims, int slice_axis, int sign)
{
  std::size_t const n = std::size_t(dims[0]) * dims[1] * dims[2];
  CxVec scratch(n);
  auto *buf = reinterpret_cast<fftw_complex *>(scratch.data());
  unsigned const flags = FFTW_ESTIMATE;
  if (std::get<0>(key) == 3) {
    // FFTW is row-major: slowest axis first.
    return fftw_plan_dft_3d(dims[2], dims[1], dims[0], buf, buf, sign, flags);
  }
  int const nx = dims[0], ny = dims[1], nz = dims[2];
  switch (slice_axis) {
  case 2: { // planes (y, x), contiguous
    int n2[2] = {ny, nx};
    return fftw_plan_many_dft(2, n2, nz, buf, nullptr, 1, nx * ny, buf, nullptr, 1, nx * ny, sign, flags);
  }
  case 0: { // planes (z, y); element (z, y) at (z*ny + y)*nx, batch stride 1
    int n2[2] = {nz, ny};
    return fftw_plan_many_dft(2, n2, nx, buf, n2, nx, 1, buf, n2, nx, 1, sign, flags);
  }
  default: { // planes (z, x); element (z, x) at z*nx*ny + x, batch stride nx
    int n2[2] = {nz, nx};
    int embed[2] = {nz, nx * ny};
    return fftw_plan_many_dft(2, n2, ny, buf, embed, 1, nx, buf, embed, 1, nx, sign, flags);
  }
  }
}

fftw_plan get_plan(int kind, std::array<int, 3> dims, int slice_axis, FftDirection dir)
{
  int const sign = dir == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  PlanKey key{kind, dims[0], dims[1], dims[2], slice_axis, sign};
  std::lock_guard lock(plan_mutex);
  auto &cache = plan_cache();
  auto it = cache.find(key);
  if (it != cache.end()) { return it->second; }
  fftw_plan p = make_plan(key, dims, slice_axis, sign);
  if (!p) { fail(ErrorCategory::internal, "FFTW failed to create a plan"); }
  cache.emplace(key, p);
  return p;
}

void check_buffer(std::span<cx> data, std::array<int, 3> dims)
{
  if (data.size() != std::size_t(dims[0]) * dims[1] * dims[2]) {
    fail(ErrorCategory::shape_mismatch, "FFT buffer length does not match dimensions");
  }
  if (reinterpret_cast<std::uintptr_t>(data.data()) % 64 != 0) {
    fail(ErrorCategory::internal, "FFT buffer is not 64-byte aligned");
  }
}

void scale(std::span<cx> data, double s)
{
  for (auto &v : data) { v *= s; }
}

} // namespace

void fft3(std::span<cx> data, std::array<int, 3> dims, FftDirection dir)
{
  check_buffer(data, dims);
  auto *buf = reinterpret_cast<fftw_complex *>(data.data());
  fftw_execute_dft(get_plan(3, dims, -1, dir), buf, buf);
  scale(data, 1.0 / std::sqrt(double(data.size())));
}

void fft2_slices(std::span<cx> data, std::array<int, 3> dims, Axis slice_axis, FftDirection dir)
{
  check_buffer(data, dims);
  int const a = int(slice_axis);
  auto *buf = reinterpret_cast<fftw_complex *>(data.data());
  fftw_execute_dft(get_plan(2, dims, a, dir), buf, buf);
  double const plane = double(data.size()) / dims[std::size_t(a)];
  scale(data, 1.0 / std::sqrt(plane));
}

void fftshift3(std::span<cx const> in, std::span<cx> out, std::array<int, 3> dims, bool inverse)
{
  int const nx = dims[0], ny = dims[1], nz = dims[2];
  auto shift = [inverse](int n) { return inverse ? n - n / 2 : n / 2; };
  int const sx = shift(nx), sy = shift(ny), sz = shift(nz);
  for (int z = 0; z < nz; ++z) {
    int const oz = (z + sz) % nz;
    for (int y = 0; y < ny; ++y) {
      int const oy = (y + sy) % ny;
      std::size_t const irow = std::size_t(nx) * (y + std::size_t(ny) * z);
      std::size_t const orow = std::size_t(nx) * (oy + std::size_t(ny) * oz);
      for (int x = 0; x < nx; ++x) { out[orow + (x + sx) % nx] = in[irow + x]; }
    }
  }
}

void fft_centered_inplace(std::span<cx> data, std::array<int, 3> dims, FftDirection dir)
{
  CxVec tmp(data.size());
  fftshift3(data, tmp, dims, true);
  fft3(tmp, dims, dir);
  fftshift3(tmp, data, dims, false);
}

ComplexVolume fft_centered(ComplexVolume const &v, FftDirection dir)
{
  ComplexVolume out(v);
  fft_centered_inplace(out.span(), v.grid().dims(), dir);
  return out;
}

} // namespace csmri
