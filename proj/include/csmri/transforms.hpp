#pragma once

#include "csmri/core.hpp"
#include "csmri/encoding.hpp"
#include "csmri/io.hpp"

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace csmri {

enum class TransformKind
{
  shearlet2d_slicewise,
  shearlet3d,
  wavelet3d,
  grad3d
};

std::string to_string(TransformKind k);

/// Coefficient index range [begin, end) belonging to one partition level.
struct LevelRange
{
  int level = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

/// One subband of a coefficient stack.
struct BandInfo
{
  int level = 0;              ///< partition level, 0 = low-pass / approximation
  int scale = -1;             ///< shearlet scale j (-1 for low-pass and non-shearlet kinds)
  int cone = -1;              ///< 2D cone or 3D pyramid index (dominant frequency axis)
  std::array<int, 2> shear{}; ///< shear parameters (k, 0) in 2D, (k1, k2) in 3D
  std::size_t offset = 0;
  std::size_t size = 0;
  std::array<int, 3> shape{}; ///< dims of this subband's array
};

struct CoefficientLayout
{
  std::vector<BandInfo> bands;
  std::vector<LevelRange> partition;
  std::size_t total = 0;

  /// Throws unless partition and bands tile [0, total) in order.
  void validate() const;
};

/// Flat coefficients plus their layout.
struct CoefficientStack
{
  CxVec values;
  std::shared_ptr<CoefficientLayout const> layout;

  std::size_t size() const { return values.size(); }
  std::span<cx> band(std::size_t b) { return std::span<cx>(values).subspan(layout->bands[b].offset, layout->bands[b].size); }
  std::span<cx const> band(std::size_t b) const
  {
    return std::span<cx const>(values).subspan(layout->bands[b].offset, layout->bands[b].size);
  }
};

using BandVisitor = std::function<void(std::size_t band, std::span<cx const> coefficients)>;
using BandProducer = std::function<void(std::size_t band, std::span<cx> coefficients)>;

/// Sparsifying transform Ψ with analysis, its exact adjoint, and a level partition.
class TransformSystem
{
public:
  virtual ~TransformSystem() = default;

  TransformKind kind() const { return kind_; }
  Grid3 const &grid() const { return grid_; }
  int scales() const { return scales_; }
  bool parseval() const { return parseval_; }
  std::shared_ptr<CoefficientLayout const> const &layout() const { return layout_; }
  std::vector<BandInfo> const &bands() const { return layout_->bands; }
  std::size_t size() const { return layout_->total; }
  std::vector<LevelRange> const &level_partition() const { return layout_->partition; }
  std::size_t n_levels() const { return layout_->partition.size(); }

  CoefficientStack zeros() const;
  CoefficientStack analyze(ComplexVolume const &x) const;
  ComplexVolume synthesize(CoefficientStack const &c) const;

  virtual void analyze_into(ComplexVolume const &x, std::span<cx> out) const = 0;
  virtual void synthesize_from(std::span<cx const> c, ComplexVolume &out) const = 0;

  /// Visit Ψx one subband at a time, in layout order.
  virtual void analyze_bands(ComplexVolume const &x, BandVisitor const &visit) const;
  /// Ψ*c where `produce` fills each subband on demand.
  virtual void synthesize_bands(BandProducer const &produce, ComplexVolume &out) const;

  /// Ψ*Ψ x
  void gram(ComplexVolume const &x, ComplexVolume &out) const;
  /// Empty for Parseval systems (Ψ*Ψ = I).
  GramOperator gram_operator() const;

protected:
  TransformSystem(TransformKind kind, Grid3 const &grid, int scales, bool parseval)
    : kind_(kind)
    , grid_(grid)
    , scales_(scales)
    , parseval_(parseval)
  {
  }

  void check_volume(ComplexVolume const &x) const;
  void check_stack(CoefficientStack const &c) const;

  TransformKind kind_;
  Grid3 grid_;
  int scales_;
  bool parseval_;
  std::shared_ptr<CoefficientLayout const> layout_;
};

enum class ShearletDim
{
  slicewise2d,
  full3d
};

/// Shears per cone (2D) along one slope axis: 2 * ceil(2^(j/2)) + 1.
int shears_per_axis(int scale);

/// Band-limited Parseval shearlet frame. 3D needs a cube with power-of-two side >= 32;
/// 2D slicewise needs power-of-two in-plane dims. Both need J >= 1 and 2^(J+1) <= min dim.
std::unique_ptr<TransformSystem> build_shearlet(Grid3 const &grid, int scales, ShearletDim dim,
                                                Axis slice_axis = Axis::z);
/// Per-frequency sum of squared shearlet filter responses (all ones for a Parseval frame).
std::vector<double> shearlet_filter_energy(TransformSystem const &t);
/// J-level periodized orthogonal 4-tap (Daubechies) wavelet; dims divisible by 2^J with coarsest side >= 2.
std::unique_ptr<TransformSystem> build_wavelet3d(Grid3 const &grid, int levels);
/// Forward differences with replicate boundary; coefficients are [Dx; Dy; Dz].
std::unique_ptr<TransformSystem> build_grad3d(Grid3 const &grid);

/// Debug export: one CSVOL1 file per subband.
void export_bands(TransformSystem const &t, CoefficientStack const &c, fs::path const &dir);

/// Meyer auxiliary polynomial on [0, 1].
double meyer_aux(double t);

} // namespace csmri
