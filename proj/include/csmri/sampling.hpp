#pragma once

#include "csmri/core.hpp"
#include "csmri/io.hpp"

#include <array>
#include <string>
#include <vector>

namespace csmri {

enum class AngleScheme
{
  uniform,
  golden_angle,
  custom ///< arbitrary point list (no line structure)
};

enum class UndersampleMode
{
  stride,
  prefix
};

std::string to_string(AngleScheme s);
AngleScheme parse_angle_scheme(std::string const &s);
UndersampleMode parse_undersample_mode(std::string const &s);

using KPoint = std::array<double, 3>; ///< (kx, ky, kz) in cycles/FOV

/// One radial phase-encoding line in the (ky, kz) plane.
struct RpeLine
{
  double angle = 0.0;          ///< radians in [0, pi)
  std::vector<double> radii;   ///< signed radial positions, cycles/FOV
  std::size_t source_index = 0; ///< acquisition order index in the originating trajectory
};

/// Sample positions, ordered line-major, then radial position, then readout (fastest).
class Trajectory
{
public:
  Trajectory() = default;

  /// Build from RPE lines; readout coordinates are -n_read/2 ... n_read/2-1.
  static Trajectory from_lines(int n_read, int phase_extent, AngleScheme scheme, std::vector<RpeLine> lines);
  /// Arbitrary sample list without line structure.
  static Trajectory from_points(std::vector<KPoint> points, int phase_extent);

  int n_read() const { return n_read_; }
  int phase_extent() const { return phase_extent_; }
  AngleScheme scheme() const { return scheme_; }
  std::vector<RpeLine> const &lines() const { return lines_; }
  std::size_t n_lines() const { return lines_.size(); }
  std::vector<KPoint> const &points() const { return points_; }
  std::size_t size() const { return points_.size(); }

  /// Samples per line (n_read * radii per line), 0 for point lists.
  std::size_t samples_per_line() const;
  /// Full Cartesian phase-plane count over acquired phase encodes.
  double nominal_undersampling() const;
  /// Radial step of the first line (0 if unknown).
  double radial_step() const;

  /// Keep the listed lines, in the given order.
  Trajectory select_lines(std::vector<std::size_t> const &line_indices) const;

private:
  friend Trajectory decode_trajectory(std::string_view bytes, std::string const &source);

  int n_read_ = 0;
  int phase_extent_ = 0;
  AngleScheme scheme_ = AngleScheme::custom;
  std::vector<RpeLine> lines_;
  std::vector<KPoint> points_;
};

/// Radial phase encoding with `n_lines` angles and `n_radial` positions spanning
/// [-phase_extent/2, phase_extent/2).
Trajectory generate_rpe(int n_read, int phase_extent, int n_lines, int n_radial, AngleScheme scheme);

/// All integer grid points of a Cartesian acquisition of `grid`.
Trajectory cartesian_trajectory(Grid3 const &grid);

double golden_angle_fraction();

/// Line indices retained by a retrospective undersampling factor.
std::vector<std::size_t> retained_lines(std::size_t n_lines, int factor, UndersampleMode mode);
Trajectory retro_undersample(Trajectory const &t, int factor, UndersampleMode mode = UndersampleMode::stride);

/// Nominal scan time for a retrospective factor; scan time scales as 1/factor.
double nominal_scan_time(double base_minutes, int factor);

/// Radial ramp, max(|r|, r_min) with r_min = half the radial step, normalized to mean 1.
std::vector<double> density_weights(Trajectory const &t);

/// CSTRAJ1: header "CSTRAJ1 n_read n_lines scheme phase_extent n_samples" then float64 (kx, ky, kz) triplets.
std::string encode_trajectory(Trajectory const &t);
Trajectory decode_trajectory(std::string_view bytes, std::string const &source = "<memory>");
void save_trajectory(fs::path const &path, Trajectory const &t);
Trajectory load_trajectory(fs::path const &path);

} // namespace csmri
