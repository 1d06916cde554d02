#include "csmri/transforms.hpp"

#include <cmath>
#include <sstream>

namespace csmri {

namespace {

// Daubechies 4-tap orthogonal pair.
struct Db2
{
  std::array<double, 4> h{};
  std::array<double, 4> g{};

  Db2()
  {
    double const s3 = std::sqrt(3.0), d = 4.0 * std::sqrt(2.0);
    h = {(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d};
    for (int n = 0; n < 4; ++n) { g[std::size_t(n)] = (n % 2 == 0 ? 1.0 : -1.0) * h[std::size_t(3 - n)]; }
  }
};

class WaveletSystem final : public TransformSystem
{
public:
  WaveletSystem(Grid3 const &grid, int levels)
    : TransformSystem(TransformKind::wavelet3d, grid, levels, true)
  {
    auto const d = grid.dims();
    std::ostringstream err;
    if (levels < 1) { err << "wavelet needs at least one level (got " << levels << ")"; }
    for (int a = 0; a < 3 && err.str().empty(); ++a) {
      int const n = d[std::size_t(a)];
      if (n % (1 << levels) != 0 || n / (1 << levels) < 2) {
        err << "wavelet with " << levels << " levels needs each dim divisible by 2^J with coarsest side >= 2 (dim "
            << a << " = " << n << ")";
      }
    }
    if (!err.str().empty()) { fail(ErrorCategory::invalid_argument, err.str()); }
    build_layout();
  }

  void analyze_into(ComplexVolume const &x, std::span<cx> out) const override
  {
    check_volume(x);
    if (out.size() != size()) { fail(ErrorCategory::shape_mismatch, "coefficient buffer has the wrong length"); }
    CxVec work(x.data());
    std::vector<cx> line, tmp;
    auto ext = grid_.dims();
    for (int l = 0; l < scales_; ++l) {
      for (int a = 0; a < 3; ++a) { pass(work, ext, a, false, line, tmp); }
      for (auto &e : ext) { e /= 2; }
    }
    for (std::size_t i = 0; i < perm_.size(); ++i) { out[i] = work[perm_[i]]; }
  }

  void synthesize_from(std::span<cx const> c, ComplexVolume &out) const override
  {
    require_same_shape(grid_, out.grid(), "wavelet synthesis");
    if (c.size() != size()) { fail(ErrorCategory::shape_mismatch, "coefficient buffer has the wrong length"); }
    CxVec work(grid_.voxels());
    for (std::size_t i = 0; i < perm_.size(); ++i) { work[perm_[i]] = c[i]; }
    std::vector<cx> line, tmp;
    for (int l = scales_ - 1; l >= 0; --l) {
      auto ext = grid_.dims();
      for (auto &e : ext) { e >>= l; }
      for (int a = 2; a >= 0; --a) { pass(work, ext, a, true, line, tmp); }
    }
    std::copy(work.begin(), work.end(), out.data().begin());
  }

private:
  // One periodized filter-bank pass along `axis` over the corner region `ext`.
  void pass(CxVec &w, std::array<int, 3> ext, int axis, bool inverse, std::vector<cx> &line, std::vector<cx> &tmp) const
  {
    static Db2 const f;
    auto const d = grid_.dims();
    std::array<std::size_t, 3> const stride{1, std::size_t(d[0]), std::size_t(d[0]) * std::size_t(d[1])};
    int const L = ext[std::size_t(axis)], half = L / 2;
    std::size_t const s = stride[std::size_t(axis)];
    int const o1 = axis == 0 ? 1 : 0, o2 = axis == 2 ? 1 : 2;
    line.resize(std::size_t(L));
    tmp.resize(std::size_t(L));
    for (int j2 = 0; j2 < ext[std::size_t(o2)]; ++j2) {
      for (int j1 = 0; j1 < ext[std::size_t(o1)]; ++j1) {
        std::size_t const base = std::size_t(j1) * stride[std::size_t(o1)] + std::size_t(j2) * stride[std::size_t(o2)];
        for (int i = 0; i < L; ++i) { line[std::size_t(i)] = w[base + std::size_t(i) * s]; }
        if (!inverse) {
          for (int i = 0; i < half; ++i) {
            cx a(0.0, 0.0), b(0.0, 0.0);
            for (int n = 0; n < 4; ++n) {
              cx const v = line[std::size_t((2 * i + n) % L)];
              a += f.h[std::size_t(n)] * v;
              b += f.g[std::size_t(n)] * v;
            }
            tmp[std::size_t(i)] = a;
            tmp[std::size_t(half + i)] = b;
          }
        } else {
          std::fill(tmp.begin(), tmp.end(), cx(0.0, 0.0));
          for (int i = 0; i < half; ++i) {
            cx const a = line[std::size_t(i)], b = line[std::size_t(half + i)];
            for (int n = 0; n < 4; ++n) { tmp[std::size_t((2 * i + n) % L)] += f.h[std::size_t(n)] * a + f.g[std::size_t(n)] * b; }
          }
        }
        for (int i = 0; i < L; ++i) { w[base + std::size_t(i) * s] = tmp[std::size_t(i)]; }
      }
    }
  }

  void build_layout()
  {
    auto layout = std::make_shared<CoefficientLayout>();
    auto const d = grid_.dims();
    std::size_t const nx = std::size_t(d[0]), nxy = nx * std::size_t(d[1]);
    auto add_block = [&](int level, std::array<int, 3> origin, std::array<int, 3> shape) {
      BandInfo b;
      b.level = level;
      b.offset = layout->total;
      b.shape = shape;
      b.size = std::size_t(shape[0]) * shape[1] * shape[2];
      for (int z = 0; z < shape[2]; ++z) {
        for (int y = 0; y < shape[1]; ++y) {
          for (int x = 0; x < shape[0]; ++x) {
            perm_.push_back(std::size_t(origin[0] + x) + nx * std::size_t(origin[1] + y) + nxy * std::size_t(origin[2] + z));
          }
        }
      }
      layout->bands.push_back(b);
      layout->total += b.size;
    };
    std::array<int, 3> coarse{d[0] >> scales_, d[1] >> scales_, d[2] >> scales_};
    add_block(0, {0, 0, 0}, coarse);
    layout->partition.push_back({0, 0, layout->total});
    for (int level = 1; level <= scales_; ++level) {
      std::array<int, 3> s{d[0] >> (scales_ - level + 1), d[1] >> (scales_ - level + 1), d[2] >> (scales_ - level + 1)};
      std::size_t const begin = layout->total;
      for (int oct = 1; oct < 8; ++oct) {
        add_block(level, {(oct & 1) ? s[0] : 0, (oct & 2) ? s[1] : 0, (oct & 4) ? s[2] : 0}, s);
      }
      layout->partition.push_back({level, begin, layout->total});
    }
    layout->validate();
    layout_ = std::move(layout);
  }

  std::vector<std::size_t> perm_;
};

class GradSystem final : public TransformSystem
{
public:
  explicit GradSystem(Grid3 const &grid)
    : TransformSystem(TransformKind::grad3d, grid, 1, false)
  {
    auto layout = std::make_shared<CoefficientLayout>();
    for (int a = 0; a < 3; ++a) {
      BandInfo b;
      b.level = 1;
      b.cone = a;
      b.offset = layout->total;
      b.size = grid.voxels();
      b.shape = grid.dims();
      layout->bands.push_back(b);
      layout->total += b.size;
    }
    layout->partition.push_back({1, 0, layout->total});
    layout->validate();
    layout_ = std::move(layout);
  }

  void analyze_into(ComplexVolume const &x, std::span<cx> out) const override
  {
    check_volume(x);
    if (out.size() != size()) { fail(ErrorCategory::shape_mismatch, "coefficient buffer has the wrong length"); }
    auto const d = grid_.dims();
    std::size_t const n = grid_.voxels();
    std::array<std::size_t, 3> const stride{1, std::size_t(d[0]), std::size_t(d[0]) * std::size_t(d[1])};
    for (int z = 0; z < d[2]; ++z) {
      for (int y = 0; y < d[1]; ++y) {
        for (int xi = 0; xi < d[0]; ++xi) {
          std::array<int, 3> const p{xi, y, z};
          std::size_t const i = x.index(xi, y, z);
          for (int a = 0; a < 3; ++a) {
            bool const last = p[std::size_t(a)] == d[std::size_t(a)] - 1;
            out[std::size_t(a) * n + i] = last ? cx(0.0, 0.0) : x[i + stride[std::size_t(a)]] - x[i];
          }
        }
      }
    }
  }

  void synthesize_from(std::span<cx const> c, ComplexVolume &out) const override
  {
    require_same_shape(grid_, out.grid(), "grad3d adjoint");
    if (c.size() != size()) { fail(ErrorCategory::shape_mismatch, "coefficient buffer has the wrong length"); }
    auto const d = grid_.dims();
    std::size_t const n = grid_.voxels();
    std::array<std::size_t, 3> const stride{1, std::size_t(d[0]), std::size_t(d[0]) * std::size_t(d[1])};
    for (int z = 0; z < d[2]; ++z) {
      for (int y = 0; y < d[1]; ++y) {
        for (int xi = 0; xi < d[0]; ++xi) {
          std::array<int, 3> const p{xi, y, z};
          std::size_t const i = out.index(xi, y, z);
          cx v(0.0, 0.0);
          for (int a = 0; a < 3; ++a) {
            auto const *ca = c.data() + std::size_t(a) * n;
            int const q = p[std::size_t(a)];
            if (q > 0) { v += ca[i - stride[std::size_t(a)]]; }
            if (q < d[std::size_t(a)] - 1) { v -= ca[i]; }
          }
          out[i] = v;
        }
      }
    }
  }
};

} // namespace

std::unique_ptr<TransformSystem> build_wavelet3d(Grid3 const &grid, int levels)
{
  return std::make_unique<WaveletSystem>(grid, levels);
}

std::unique_ptr<TransformSystem> build_grad3d(Grid3 const &grid) { return std::make_unique<GradSystem>(grid); }

} // namespace csmri
