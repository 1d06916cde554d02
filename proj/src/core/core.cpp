#include "csmri/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace csmri {

char const *category_name(ErrorCategory c)
{
  switch (c) {
  case ErrorCategory::invalid_argument:
    return "invalid_argument";
  case ErrorCategory::shape_mismatch:
    return "shape_mismatch";
  case ErrorCategory::io:
    return "io";
  case ErrorCategory::diverged:
    return "diverged";
  case ErrorCategory::not_found:
    return "not_found";
  case ErrorCategory::internal:
    return "internal";
  }
  return "internal";
}

void fail(ErrorCategory category, std::string const &message) { throw Error(category, message); }

Axis parse_axis(std::string const &name)
{
  if (name == "x" || name == "0") { return Axis::x; }
  if (name == "y" || name == "1") { return Axis::y; }
  if (name == "z" || name == "2") { return Axis::z; }
  fail(ErrorCategory::invalid_argument, "unknown axis '" + name + "' (expected x, y or z)");
}

Grid3::Grid3(int x, int y, int z, std::array<double, 3> s)
  : nx(x)
  , ny(y)
  , nz(z)
  , spacing(s)
{
  validate();
}

void Grid3::validate() const
{
  if (nx < 4 || ny < 4 || nz < 4) {
    std::ostringstream os;
    os << "grid dimensions must be >= 4, got " << nx << "x" << ny << "x" << nz;
    fail(ErrorCategory::invalid_argument, os.str());
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) { fail(ErrorCategory::invalid_argument, "grid spacing must be positive"); }
  }
}

ComplexVolume::ComplexVolume(Grid3 const &grid)
  : grid_(grid)
  , data_(grid.voxels(), cx(0.0, 0.0))
{
  grid_.validate();
}

ComplexVolume::ComplexVolume(Grid3 const &grid, CxVec data)
  : grid_(grid)
  , data_(std::move(data))
{
  grid_.validate();
  if (data_.size() != grid_.voxels()) {
    fail(ErrorCategory::shape_mismatch, "volume data length does not match grid voxel count");
  }
}

void ComplexVolume::set_zero() { std::fill(data_.begin(), data_.end(), cx(0.0, 0.0)); }

bool ComplexVolume::all_finite() const
{
  return std::all_of(data_.begin(), data_.end(), [](cx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

ComplexVolume &ComplexVolume::operator+=(ComplexVolume const &o)
{
  require_same_shape(grid_, o.grid_, "volume addition");
  for (std::size_t i = 0; i < data_.size(); ++i) { data_[i] += o.data_[i]; }
  return *this;
}

ComplexVolume &ComplexVolume::operator-=(ComplexVolume const &o)
{
  require_same_shape(grid_, o.grid_, "volume subtraction");
  for (std::size_t i = 0; i < data_.size(); ++i) { data_[i] -= o.data_[i]; }
  return *this;
}

ComplexVolume &ComplexVolume::operator*=(cx s)
{
  for (auto &v : data_) { v *= s; }
  return *this;
}

void require_same_shape(Grid3 const &a, Grid3 const &b, char const *what)
{
  if (!a.same_shape(b)) {
    std::ostringstream os;
    os << what << ": grid " << a.nx << "x" << a.ny << "x" << a.nz << " does not match " << b.nx << "x" << b.ny << "x"
       << b.nz;
    fail(ErrorCategory::shape_mismatch, os.str());
  }
}

cx inner_product(std::span<cx const> a, std::span<cx const> b)
{
  if (a.size() != b.size()) {
    fail(ErrorCategory::shape_mismatch,
         "inner product of vectors with lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    // conj(a) * b
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

cx inner_product(ComplexVolume const &a, ComplexVolume const &b)
{
  require_same_shape(a.grid(), b.grid(), "inner product");
  return inner_product(a.span(), b.span());
}

double norm2(std::span<cx const> a)
{
  double s = 0.0;
  for (auto const &v : a) { s += std::norm(v); }
  return std::sqrt(s);
}

double norm2(ComplexVolume const &a) { return norm2(a.span()); }

double max_abs(std::span<cx const> a)
{
  double m = 0.0;
  for (auto const &v : a) { m = std::max(m, std::abs(v)); }
  return m;
}

void axpy(cx alpha, std::span<cx const> x, std::span<cx> y)
{
  if (x.size() != y.size()) { fail(ErrorCategory::shape_mismatch, "axpy length mismatch"); }
  for (std::size_t i = 0; i < x.size(); ++i) { y[i] += alpha * x[i]; }
}

ComplexVolume magnitude(ComplexVolume const &v)
{
  ComplexVolume out(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) { out[i] = std::abs(v[i]); }
  return out;
}

} // namespace csmri
