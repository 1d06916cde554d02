#pragma once

#include "csmri/core.hpp"
#include "csmri/io.hpp"
#include "csmri/sampling.hpp"
#include "csmri/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace csmri {

/// Batch run description. Key-value text, `key = value`, `#` comments; relative paths resolve
/// against the manifest's directory.
struct RunManifest
{
  fs::path base_dir = ".";
  std::string phantom = "default";   ///< "default" or a phantom spec file
  Grid3 grid = Grid3::cube(64, 1.5);
  int coils = 8;
  std::uint64_t phantom_seed = 1;
  std::uint64_t coil_seed = 2;
  std::uint64_t noise_seed = 3;
  double snr_db = 30.0;
  int n_read = 64;
  int phase_extent = 64;
  int n_lines = 16;
  int n_radial = 64;
  AngleScheme scheme = AngleScheme::uniform;
  UndersampleMode mode = UndersampleMode::stride;
  double base_scan_minutes = 12.6;
  std::vector<int> factors{1, 2, 4, 6};
  std::vector<Variant> variants{Variant::itsense, Variant::wavelet, Variant::tv, Variant::shear2d, Variant::shear3d};
  std::string solver_config;         ///< empty = built-in defaults
  std::string output = "run";
  Axis slice_axis = Axis::z;         ///< HaarPSI slicing and exported panels

  /// Throws invalid_argument on bad values and not_found on missing referenced files.
  void validate() const;
  fs::path output_dir() const;
  fs::path resolve(std::string const &p) const;
};

RunManifest parse_manifest(std::string const &text, fs::path const &base_dir = ".");
RunManifest load_manifest(fs::path const &path);
std::string format_manifest(RunManifest const &m);

/// File layout of one run directory.
struct RunPaths
{
  fs::path root;
  fs::path phantom() const { return root / "phantom.csvol"; }
  fs::path centerlines() const { return root / "centerlines.txt"; }
  fs::path coil(std::size_t c) const;
  fs::path trajectory() const { return root / "trajectory.cstraj"; }
  fs::path kspace() const { return root / "kspace.csksp"; }
  fs::path undersampling() const { return root / "undersampling.csv"; }
  fs::path recon(Variant v, int factor) const;
  fs::path diagnostics(Variant v, int factor) const;
  fs::path metadata(Variant v, int factor) const;
  fs::path results() const { return root / "results.csv"; }
  fs::path slice(std::string const &name) const { return root / "slices" / (name + ".pgm"); }
};

struct FactorInfo
{
  int factor = 1;
  std::size_t lines = 0;
  double undersampling = 0.0;           ///< reported R: base R times the factor
  double effective_undersampling = 0.0; ///< from the lines actually retained
  double scan_minutes = 0.0;
};

/// Reported undersampling per retrospective factor, from the trajectory parameters alone.
std::vector<FactorInfo> factor_table(RunManifest const &m);

struct SimulateReport
{
  std::vector<FactorInfo> factors;
  double noise_sigma = 0.0;
};

/// Phantom, centerlines, coils, trajectory and noisy k-space into the output directory.
SimulateReport cmd_simulate(RunManifest const &m);

/// Reconstructs one (variant, factor) from the simulated files; writes volume, diagnostics and metadata.
ReconResult cmd_reconstruct(RunManifest const &m, Variant v, int factor);

struct MetricRow
{
  Variant variant = Variant::itsense;
  int factor = 1;
  double undersampling = 0.0;
  double rel_err = 0.0;       ///< against the reference reconstruction
  double haarpsi = 0.0;
  double vessel_sharpness = 0.0;
  std::optional<double> rel_err_truth;
  std::optional<double> haarpsi_truth;
};

/// Metrics table header and rows, shared by evaluate and the C API.
std::string results_csv(std::vector<MetricRow> const &rows, bool with_truth);

/// Reference = itSENSE at the lowest factor. Writes results.csv and center-slice panels.
std::vector<MetricRow> cmd_evaluate(RunManifest const &m);

/// simulate, every (variant, factor) reconstruction on up to `threads` parallel jobs, evaluate.
std::vector<MetricRow> cmd_sweep(RunManifest const &m, int threads = 1);

/// One slice of a reconstruction ("truth" selects the phantom) as an 8-bit graymap.
void cmd_export_slice(RunManifest const &m, std::string const &variant, int factor, fs::path const &out,
                      std::optional<int> index = std::nullopt);

/// Solver settings for a manifest: built-in defaults overlaid with its solver config file.
AdmmConfig manifest_solver_config(RunManifest const &m);

} // namespace csmri
