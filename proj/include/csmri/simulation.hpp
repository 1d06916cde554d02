#pragma once

#include "csmri/core.hpp"
#include "csmri/encoding.hpp"
#include "csmri/metrics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace csmri {

struct Ellipsoid
{
  Point3 center{};             ///< mm from the grid center
  Point3 semi_axes{};          ///< mm
  Point3 rotation_deg{};       ///< rotations about x, then y, then z
  double intensity = 1.0;
};

struct Tube
{
  std::vector<Point3> centerline; ///< mm control points, joined by straight segments
  double radius_mm = 3.0;
  double intensity = 1.0;
};

struct PhantomSpec
{
  double background = 0.0;
  std::vector<Ellipsoid> ellipsoids;
  std::vector<Tube> tubes;
  double texture = 0.0; ///< amplitude of a seeded smooth multiplicative texture on the foreground

  void validate() const;
};

/// Text format, one shape per line (mm, degrees):
///   background <value>
///   texture <amplitude>
///   ellipsoid cx cy cz ax ay az rx ry rz intensity
///   tube radius intensity x1 y1 z1 x2 y2 z2 [...]
PhantomSpec parse_phantom_spec(std::string const &text);
std::string format_phantom_spec(PhantomSpec const &spec);

/// Heart-like default: torso, lungs, myocardium, two blood pools, three coronary-sized tubes.
PhantomSpec default_phantom_spec();

struct Phantom
{
  ComplexVolume volume;
  std::vector<Tube> tubes; ///< centerlines for the vessel metric
};

/// Painter's compositing of ellipsoids, then tubes, with a 2-voxel smooth edge.
Phantom make_phantom(Grid3 const &grid, PhantomSpec const &spec, std::uint64_t seed);

/// Smooth complex maps: Gaussian magnitudes centered on a ring around the phase-encoding plane,
/// linear phase ramps, normalized to a unit coil sum of squares.
SensitivityMaps make_coils(Grid3 const &grid, int n_coils, std::uint64_t seed);

/// Per-component noise standard deviation giving `snr_db` relative to the RMS of `clean`.
double noise_sigma_for_snr(KSpaceSamples const &clean, double snr_db);

/// y = E x + complex white Gaussian noise (std `noise_sigma` per real/imag component).
KSpaceSamples simulate_acquisition(ComplexVolume const &x, EncodingOperator const &E, double noise_sigma,
                                   std::uint64_t seed);
KSpaceSamples add_noise(KSpaceSamples y, double noise_sigma, std::uint64_t seed);

/// Centerline file: "tube <radius_mm> <n_points>" then one "x y z" line per point.
std::string format_centerlines(std::vector<Tube> const &tubes);
std::vector<Tube> parse_centerlines(std::string const &text);

} // namespace csmri
