#pragma once

#include "csmri/core.hpp"
#include "csmri/encoding.hpp"
#include "csmri/transforms.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace csmri {

enum class Variant
{
  shear3d,  ///< 3DShearCS
  shear2d,  ///< 2DShearCS
  wavelet,  ///< WaveCS
  tv,       ///< TV
  itsense   ///< itSENSE
};

std::string to_string(Variant v);
Variant parse_variant(std::string const &name);
std::vector<Variant> all_variants();

struct AdmmConfig
{
  double beta = 10.0;
  double mu = 1.0;
  double nu_rel = 1e-3;         ///< nu = nu_rel * max|Psi x0|
  std::vector<double> lambda;   ///< per partition level; empty = lambda_scale * 2^(-j/2), low-pass 0.1 * lambda_1
  double lambda_scale = 3e-5;   ///< multiplies the default lambda profile only
  double l1_weight = 3e-2;      ///< constant sigma when reweight is off
  int max_outer = 12;
  int freeze_after = 3;
  bool reweight = true;
  int inner_iters = 6;
  double inner_tol = 1e-6;
  int itsense_iters = 10;
  double itsense_tol = 1e-6;
  int shearlet_scales = 0;      ///< 0 = 3 for grids >= 64, else 2
  int wavelet_levels = 0;       ///< 0 = 3 for grids >= 64, else 2
  Axis slice_axis = Axis::x;    ///< 2D shearlet planes are orthogonal to this axis
  double divergence_factor = 10.0;
  /// Keep computing the weights after the freeze (unused) to report how much they would still move.
  bool track_candidate_weights = false;

  /// Throws invalid_argument on out-of-range values (levels checked separately).
  void validate() const;
};

/// Key-value text: `key = value` per line, `#` comments. Unknown keys are errors.
AdmmConfig parse_admm_config(std::string const &text, AdmmConfig base = {});
AdmmConfig load_admm_config(fs::path const &path, AdmmConfig base = {});
std::string format_admm_config(AdmmConfig const &cfg);

/// lambda_j = 2^(-j/2) for level ids j >= 1, lambda_0 = 0.1 * lambda_1.
std::vector<double> default_lambda(std::vector<LevelRange> const &partition);

struct WeightState
{
  std::vector<double> sigma;
  int iteration = 0;
};

/// sigma_i = lambda_j / (|c_i| + nu) for every i in level j's range.
WeightState update_weights(CoefficientStack const &c, std::vector<LevelRange> const &partition,
                           std::vector<double> const &lambda, double nu, WeightState const &prev);
/// Kernel on a slice of the coefficients: `lambda` already resolved for this slice.
void update_weights_span(std::span<cx const> c, double lambda, double nu, std::span<double> sigma);

/// Complex soft thresholding max(|z| - tau, 0) z / |z|.
cx shrink(cx z, double tau);
void shrink_span(std::span<cx const> z, std::span<double const> tau, std::span<cx> out);
CoefficientStack shrink(CoefficientStack const &z, std::vector<double> const &tau);

using LinearOp = std::function<void(std::span<cx const> in, std::span<cx> out)>;

struct CgResult
{
  int iterations = 0;
  double residual = 0.0; ///< ||rhs - A x|| / ||rhs||
};

using CgObserver = std::function<void(int iteration, std::span<cx const> x)>;

/// Conjugate gradients from the initial content of `x`.
CgResult cg_solve(LinearOp const &A, std::span<cx const> rhs, std::span<cx> x, int iters, double tol,
                  CgObserver const &observer = {});

struct IterationDiag
{
  int iteration = 0;
  double objective = 0.0;
  double residual = 0.0;      ///< ||y - E x^k||_2 in input units
  double weight_change = 0.0; ///< ||s^k - s^(k-1)||_1 / ||s^(k-1)||_1, 0 when frozen
  /// Same ratio for the weights update_weights would give, frozen or not (track_candidate_weights)
  std::optional<double> candidate_weight_change;
  std::optional<double> rel_err;
  int cg_iterations = 0;
};

struct ReconResult
{
  ComplexVolume volume;
  std::vector<IterationDiag> diagnostics;
  std::map<std::string, std::string> metadata;
};

/// Diagnostics CSV: iteration,objective,residual,weight_change,rel_err
std::string diagnostics_csv(ReconResult const &r);

/// Called after every outer iteration with the current iterate and its weights (may be empty).
using IterationObserver = std::function<void(IterationDiag const &, ComplexVolume const &, std::span<double const> sigma)>;

ReconResult admm_solve(KSpaceSamples const &y, EncodingOperator const &E, TransformSystem const &T,
                       AdmmConfig const &cfg, ComplexVolume const *reference = nullptr,
                       IterationObserver const &observer = {});

ReconResult itsense(KSpaceSamples const &y, EncodingOperator const &E, int iters, double tol,
                    ComplexVolume const *reference = nullptr);

/// Default transform for a variant (none for itSENSE).
std::unique_ptr<TransformSystem> build_variant_transform(Variant v, Grid3 const &grid, AdmmConfig const &cfg);

ReconResult reconstruct_variant(Variant v, KSpaceSamples const &y, EncodingOperator const &E, AdmmConfig const &cfg,
                                ComplexVolume const *reference = nullptr);

/// Density-weighted adjoint scaled by the least-squares factor <E x, y> / ||E x||^2.
ComplexVolume initial_estimate(KSpaceSamples const &y, EncodingOperator const &E);

} // namespace csmri
