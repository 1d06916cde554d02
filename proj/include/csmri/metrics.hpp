#pragma once

#include "csmri/core.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace csmri {

/// || |ref| - |rec| ||_2 / || ref ||_2 over the vectorized volumes.
double relative_error(ComplexVolume const &rec, ComplexVolume const &ref);

struct HaarPsiConstants
{
  double c = 30.0;     ///< similarity stabilizer
  double alpha = 4.2;  ///< logistic steepness
  int scales = 3;
  bool preprocess = true; ///< 2x2 mean filter and subsampling before the decomposition
};

/// HaarPSI of one 2D grayscale pair (row-major, `rows` x `cols`), values in [0, 255].
double haarpsi_2d(std::vector<double> const &ref, std::vector<double> const &dist, int rows, int cols,
                  HaarPsiConstants const &k = {});

/// Mean HaarPSI over all slices along `slice_axis`; magnitudes are jointly rescaled to [0, 255].
double haarpsi(ComplexVolume const &rec, ComplexVolume const &ref, Axis slice_axis = Axis::z,
               HaarPsiConstants const &k = {});

using Point3 = std::array<double, 3>; ///< mm, relative to the grid center

/// Physical position of voxel (i, j, k): (index - n/2) * spacing.
Point3 voxel_to_mm(Grid3 const &g, double i, double j, double k);
/// Trilinear interpolation of the magnitude at a physical position (0 outside the grid).
double sample_magnitude(ComplexVolume const &v, Point3 const &mm);

struct VesselSharpness
{
  double score = 0.0;
  int profiles_used = 0;
  int profiles_skipped = 0; ///< center intensity below the noise floor
};

/// Profile-based edge sharpness of a tube around `centerline` (mm polyline). A one-voxel linear
/// edge from the center intensity down to zero scores 1.
VesselSharpness vessel_sharpness(ComplexVolume const &vol, std::vector<Point3> const &centerline, double radius_mm,
                                 int n_profiles = 64, double noise_floor_rel = 0.05);

} // namespace csmri
