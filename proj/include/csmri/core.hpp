#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace csmri {

using cx = std::complex<double>;

/// Error categories shared by the C++ library and the C API status codes.
enum class ErrorCategory
{
  invalid_argument,
  shape_mismatch,
  io,
  diverged,
  not_found,
  internal
};

char const *category_name(ErrorCategory c);

class Error : public std::runtime_error
{
public:
  Error(ErrorCategory category, std::string const &message)
    : std::runtime_error(message)
    , category_(category)
  {
  }

  ErrorCategory category() const { return category_; }

private:
  ErrorCategory category_;
};

[[noreturn]] void fail(ErrorCategory category, std::string const &message);

/// 64-byte aligned storage so FFTW plans can be reused on any buffer.
template <typename T>
struct AlignedAllocator
{
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(AlignedAllocator<U> const &)
  {
  }

  T *allocate(std::size_t n) { return static_cast<T *>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T *p, std::size_t) { ::operator delete(p, alignment); }

  template <typename U>
  bool operator==(AlignedAllocator<U> const &) const
  {
    return true;
  }
};

using CxVec = std::vector<cx, AlignedAllocator<cx>>;

enum class Axis
{
  x = 0,
  y = 1,
  z = 2
};

Axis parse_axis(std::string const &name);

struct Grid3
{
  int nx = 0;
  int ny = 0;
  int nz = 0;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  Grid3() = default;
  Grid3(int x, int y, int z, std::array<double, 3> s = {1.0, 1.0, 1.0});
  static Grid3 cube(int n, double s = 1.0) { return Grid3(n, n, n, {s, s, s}); }

  std::size_t voxels() const { return std::size_t(nx) * std::size_t(ny) * std::size_t(nz); }
  std::array<int, 3> dims() const { return {nx, ny, nz}; }
  int dim(Axis a) const { return dims()[std::size_t(a)]; }

  /// Throws invalid_argument unless every dimension is >= 4 and spacing > 0.
  void validate() const;

  bool same_shape(Grid3 const &o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
  bool operator==(Grid3 const &o) const { return same_shape(o) && spacing == o.spacing; }
};

/// Complex samples on a Grid3, x-fastest.
class ComplexVolume
{
public:
  ComplexVolume() = default;
  explicit ComplexVolume(Grid3 const &grid);
  ComplexVolume(Grid3 const &grid, CxVec data);

  Grid3 const &grid() const { return grid_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int x, int y, int z) const
  {
    return std::size_t(x) + std::size_t(grid_.nx) * (std::size_t(y) + std::size_t(grid_.ny) * std::size_t(z));
  }
  cx &operator()(int x, int y, int z) { return data_[index(x, y, z)]; }
  cx operator()(int x, int y, int z) const { return data_[index(x, y, z)]; }
  cx &operator[](std::size_t i) { return data_[i]; }
  cx operator[](std::size_t i) const { return data_[i]; }

  std::span<cx> span() { return data_; }
  std::span<cx const> span() const { return data_; }
  CxVec &data() { return data_; }
  CxVec const &data() const { return data_; }

  void set_zero();
  bool all_finite() const;

  ComplexVolume &operator+=(ComplexVolume const &o);
  ComplexVolume &operator-=(ComplexVolume const &o);
  ComplexVolume &operator*=(cx s);

private:
  Grid3 grid_;
  CxVec data_;
};

void require_same_shape(Grid3 const &a, Grid3 const &b, char const *what);

/// <a, b> = sum conj(a_i) b_i
cx inner_product(std::span<cx const> a, std::span<cx const> b);
cx inner_product(ComplexVolume const &a, ComplexVolume const &b);

double norm2(std::span<cx const> a);
double norm2(ComplexVolume const &a);
double max_abs(std::span<cx const> a);

/// y += alpha * x
void axpy(cx alpha, std::span<cx const> x, std::span<cx> y);

ComplexVolume magnitude(ComplexVolume const &v);

} // namespace csmri
