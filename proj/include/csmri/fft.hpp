#pragma once

#include "csmri/core.hpp"

#include <array>
#include <span>

namespace csmri {

enum class FftDirection
{
  forward,
  inverse
};

/// Unitary DFT over all three axes, standard (uncentered) index order.
/// `data` must be 64-byte aligned (any CxVec / ComplexVolume buffer is).
void fft3(std::span<cx> data, std::array<int, 3> dims, FftDirection dir);

/// Unitary 2D DFT of every plane orthogonal to `slice_axis`.
void fft2_slices(std::span<cx> data, std::array<int, 3> dims, Axis slice_axis, FftDirection dir);

/// Circular shift by floor(n/2) along every axis (fftshift) or its inverse.
void fftshift3(std::span<cx const> in, std::span<cx> out, std::array<int, 3> dims, bool inverse);

/// Unitary DFT with the zero frequency at index n/2 on each axis.
void fft_centered_inplace(std::span<cx> data, std::array<int, 3> dims, FftDirection dir);
ComplexVolume fft_centered(ComplexVolume const &v, FftDirection dir);

} // namespace csmri
