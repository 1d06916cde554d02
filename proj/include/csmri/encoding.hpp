#pragma once

#include "csmri/core.hpp"
#include "csmri/io.hpp"
#include "csmri/sampling.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace csmri {

/// Kaiser-Bessel gridding kernel measured in oversampled-grid units.
struct KaiserBessel
{
  double half_width = 3.0;
  double beta = 0.0;

  /// Shape parameter from the usual optimal-beta rule for a given width and oversampling ratio.
  static KaiserBessel for_oversampling(double half_width, double oversampling);

  double operator()(double t) const;
  /// Continuous Fourier transform of the kernel at frequency `nu` (cycles per grid sample).
  double transform(double nu) const;
};

/// Per-coil complex sensitivities sharing one grid.
class SensitivityMaps
{
public:
  SensitivityMaps() = default;

  /// Normalize raw maps so the coil sum of squares is 1 inside the support
  /// (sum > 0.05 max); outside, maps are divided by the square root of that floor.
  static SensitivityMaps normalized(std::vector<ComplexVolume> raw);
  /// Maps used as given (e.g. loaded after normalization); support recomputed with the same rule.
  static SensitivityMaps from_maps(std::vector<ComplexVolume> maps);
  /// Single coil with S = 1.
  static SensitivityMaps uniform(Grid3 const &grid);

  std::size_t n_coils() const { return maps_.size(); }
  Grid3 const &grid() const { return maps_.front().grid(); }
  ComplexVolume const &operator[](std::size_t c) const { return maps_[c]; }
  std::vector<ComplexVolume> const &maps() const { return maps_; }
  std::vector<bool> const &support() const { return support_; }

private:
  std::vector<ComplexVolume> maps_;
  std::vector<bool> support_;
};

/// Per-coil samples on a trajectory (coil-major).
struct KSpaceSamples
{
  std::shared_ptr<Trajectory const> trajectory;
  std::vector<std::vector<cx>> coils;

  std::size_t n_coils() const { return coils.size(); }
  std::size_t n_samples() const { return coils.empty() ? 0 : coils.front().size(); }

  double norm() const;
  KSpaceSamples &operator*=(cx s);
  KSpaceSamples &operator-=(KSpaceSamples const &o);
};

KSpaceSamples zero_samples(std::shared_ptr<Trajectory const> t, std::size_t n_coils);
cx inner_product(KSpaceSamples const &a, KSpaceSamples const &b);

/// Samples of the retained lines only; `child` must come from `parent` via select_lines/retro_undersample.
KSpaceSamples select_line_samples(KSpaceSamples const &y, Trajectory const &parent,
                                  std::shared_ptr<Trajectory const> child);

struct EncodingOptions
{
  double oversampling = 1.5;
  double half_width = 3.0;
};

struct AdjointResult
{
  ComplexVolume volume;
  bool density_weighted = false; ///< true: approximate reconstruction, not the strict adjoint
};

/// Ψ*Ψ supplied by the caller; an empty function means identity.
using GramOperator = std::function<void(ComplexVolume const &, ComplexVolume &)>;

/// E = G F S: coil weighting, oversampled centered FFT with apodization pre-correction,
/// Kaiser-Bessel interpolation onto arbitrary sample positions.
class EncodingOperator
{
public:
  EncodingOperator(SensitivityMaps maps, std::shared_ptr<Trajectory const> trajectory, EncodingOptions options = {});

  Grid3 const &grid() const { return maps_.grid(); }
  SensitivityMaps const &maps() const { return maps_; }
  std::shared_ptr<Trajectory const> const &trajectory() const { return trajectory_; }
  std::vector<double> const &density() const { return density_; }
  KaiserBessel const &kernel() const { return kernel_; }
  std::array<int, 3> oversampled_dims() const { return os_dims_; }

  KSpaceSamples forward(ComplexVolume const &x) const;
  ComplexVolume adjoint(KSpaceSamples const &y) const;
  AdjointResult adjoint(KSpaceSamples const &y, bool use_density) const;
  /// beta E*E x + mu Ψ*Ψ x
  ComplexVolume normal(ComplexVolume const &x, double beta, double mu, GramOperator const &gram = {}) const;

private:
  void check_volume(ComplexVolume const &x) const;
  void check_samples(KSpaceSamples const &y) const;
  void forward_coil(ComplexVolume const &x, std::size_t coil, CxVec &buf, std::vector<cx> &out) const;
  void adjoint_coil(std::vector<cx> const &y, std::size_t coil, std::vector<double> const *weights, CxVec &buf,
                    ComplexVolume &out) const;

  SensitivityMaps maps_;
  std::shared_ptr<Trajectory const> trajectory_;
  EncodingOptions options_;
  KaiserBessel kernel_;
  std::array<int, 3> os_dims_{};
  std::vector<double> density_;
  // Separable apodization correction per image axis.
  std::array<std::vector<double>, 3> apod_;
  // Embedding of image index n into the oversampled standard-order grid.
  std::array<std::vector<int>, 3> embed_;
  // Interpolation taps per sample and axis (standard-order grid indices).
  static constexpr int taps = 6;
  std::vector<int> tap_index_;    // [sample][axis][tap]
  std::vector<double> tap_weight_; // [sample][axis][tap]
};

/// CSKSP1: header "CSKSP1 n_coils n_samples c64 <trajectory file>" then float64 (re, im)
/// pairs, coil-major. The trajectory path is stored relative to the k-space file.
void save_kspace(fs::path const &path, KSpaceSamples const &y, fs::path const &trajectory_path);
KSpaceSamples load_kspace(fs::path const &path);

} // namespace csmri
