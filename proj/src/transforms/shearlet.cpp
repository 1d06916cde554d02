#include "csmri/fft.hpp"
#include "csmri/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <sstream>

namespace csmri {

double meyer_aux(double t)
{
  if (t <= 0.0) { return 0.0; }
  if (t >= 1.0) { return 1.0; }
  return t * t * t * t * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t);
}

int shears_per_axis(int scale)
{
  if (scale < 0) { fail(ErrorCategory::invalid_argument, "shearlet scale must be >= 0"); }
  // ceil(2^(j/2)): exact for even j, ceil(sqrt(2) * 2^((j-1)/2)) for odd j.
  int const k = scale % 2 == 0 ? 1 << (scale / 2) : int(std::ceil(std::sqrt(2.0) * double(1 << (scale / 2))));
  return 2 * k + 1;
}

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Low-pass profile: 1 below 1, smooth Meyer transition to 0 at 2.
double lowpass_profile(double t)
{
  if (t <= 1.0) { return 1.0; }
  if (t >= 2.0) { return 0.0; }
  return std::cos(0.5 * std::numbers::pi * meyer_aux(t - 1.0));
}

// Angular bump; sum over integer shifts of its square is 1.
double angular_window(double u)
{
  u = std::abs(u);
  if (u >= 1.0) { return 0.0; }
  return std::cos(0.5 * std::numbers::pi * meyer_aux(u));
}

int frequency_of(int i, int n) { return i < n / 2 ? i : i - n; }

struct SparseFilter
{
  std::vector<std::uint32_t> index;
  std::vector<double> value;
};

class ShearletSystem final : public TransformSystem
{
public:
  ShearletSystem(Grid3 const &grid, int scales, ShearletDim dim, Axis slice_axis)
    : TransformSystem(dim == ShearletDim::full3d ? TransformKind::shearlet3d : TransformKind::shearlet2d_slicewise, grid,
                      scales, true)
    , dim_(dim)
    , slice_axis_(slice_axis)
  {
    validate_dims();
    setup_geometry();
    build_filters();
  }

  void analyze_into(ComplexVolume const &x, std::span<cx> out) const override
  {
    if (out.size() != size()) { fail(ErrorCategory::shape_mismatch, "coefficient buffer has the wrong length"); }
    analyze_bands(x, [&](std::size_t b, std::span<cx const> c) {
      std::copy(c.begin(), c.end(), out.begin() + std::ptrdiff_t(bands()[b].offset));
    });
  }

  void synthesize_from(std::span<cx const> c, ComplexVolume &out) const override
  {
    if (c.size() != size()) { fail(ErrorCategory::shape_mismatch, "coefficient buffer has the wrong length"); }
    synthesize_bands(
      [&](std::size_t b, std::span<cx> dst) {
        auto const src = c.subspan(bands()[b].offset, bands()[b].size);
        std::copy(src.begin(), src.end(), dst.begin());
      },
      out);
  }

  void analyze_bands(ComplexVolume const &x, BandVisitor const &visit) const override
  {
    check_volume(x);
    CxVec spectrum(x.data());
    transform(spectrum, FftDirection::forward);
    CxVec tmp(spectrum.size());
    for (std::size_t b = 0; b < filters_.size(); ++b) {
      std::fill(tmp.begin(), tmp.end(), cx(0.0, 0.0));
      auto const &f = filters_[b];
      for_each_target(f, [&](std::size_t off, double v) { tmp[off] = spectrum[off] * v; });
      transform(tmp, FftDirection::inverse);
      visit(b, tmp);
    }
  }

  void synthesize_bands(BandProducer const &produce, ComplexVolume &out) const override
  {
    require_same_shape(grid_, out.grid(), "shearlet synthesis");
    CxVec acc(grid_.voxels(), cx(0.0, 0.0));
    CxVec tmp(grid_.voxels());
    for (std::size_t b = 0; b < filters_.size(); ++b) {
      produce(b, tmp);
      transform(tmp, FftDirection::forward);
      for_each_target(filters_[b], [&](std::size_t off, double v) { acc[off] += tmp[off] * v; });
    }
    transform(acc, FftDirection::inverse);
    std::copy(acc.begin(), acc.end(), out.data().begin());
  }

  /// Sum of squared filter responses at every frequency (1 for a Parseval frame).
  std::vector<double> filter_energy() const
  {
    std::vector<double> e(n_freq_, 0.0);
    for (auto const &f : filters_) {
      for (std::size_t i = 0; i < f.index.size(); ++i) { e[f.index[i]] += f.value[i] * f.value[i]; }
    }
    return e;
  }

private:
  void validate_dims() const
  {
    auto const d = grid_.dims();
    std::ostringstream err;
    if (scales_ < 1) { err << "shearlet needs J >= 1 (got " << scales_ << ")"; }
    int min_dim = 0;
    if (dim_ == ShearletDim::full3d) {
      if (!(d[0] == d[1] && d[1] == d[2])) {
        err << "3D shearlets need nx = ny = nz (got " << d[0] << "x" << d[1] << "x" << d[2] << ")";
      } else if (!is_pow2(d[0]) || d[0] < 32) {
        err << "3D shearlets need a power-of-two side >= 32 (got " << d[0] << ")";
      }
      min_dim = std::min({d[0], d[1], d[2]});
    } else {
      auto const pa = plane_axes();
      int const n0 = d[std::size_t(pa[0])], n1 = d[std::size_t(pa[1])];
      if (!is_pow2(n0) || !is_pow2(n1)) {
        err << "2D shearlets need power-of-two in-plane dims (got " << n0 << "x" << n1 << ")";
      }
      min_dim = std::min(n0, n1);
    }
    if (err.str().empty() && scales_ >= 1 && (1 << (scales_ + 1)) > min_dim) {
      err << "shearlet J = " << scales_ << " violates 2^(J+1) <= min dim (" << min_dim << ")";
    }
    if (!err.str().empty()) { fail(ErrorCategory::invalid_argument, err.str()); }
  }

  std::array<int, 2> plane_axes() const
  {
    switch (slice_axis_) {
    case Axis::x:
      return {1, 2};
    case Axis::y:
      return {0, 2};
    case Axis::z:
      return {0, 1};
    }
    return {0, 1};
  }

  void setup_geometry()
  {
    auto const d = grid_.dims();
    if (dim_ == ShearletDim::full3d) {
      fdims_ = {d[0], d[1], d[2]};
      n_freq_ = grid_.voxels();
      n_slices_ = 1;
      return;
    }
    auto const pa = plane_axes();
    fdims_ = {d[std::size_t(pa[0])], d[std::size_t(pa[1])], 1};
    n_freq_ = std::size_t(fdims_[0]) * fdims_[1];
    n_slices_ = d[std::size_t(slice_axis_)];
    std::size_t const nx = std::size_t(d[0]), nxy = std::size_t(d[0]) * d[1];
    plane_offset_.resize(n_freq_);
    for (int i1 = 0; i1 < fdims_[1]; ++i1) {
      for (int i0 = 0; i0 < fdims_[0]; ++i0) {
        std::size_t off = 0;
        switch (slice_axis_) {
        case Axis::z:
          off = std::size_t(i0) + nx * std::size_t(i1);
          break;
        case Axis::x:
          off = nx * (std::size_t(i0) + std::size_t(d[1]) * std::size_t(i1));
          break;
        case Axis::y:
          off = std::size_t(i0) + nxy * std::size_t(i1);
          break;
        }
        plane_offset_[std::size_t(i0) + std::size_t(fdims_[0]) * std::size_t(i1)] = off;
      }
    }
    slice_stride_ = slice_axis_ == Axis::z ? nxy : slice_axis_ == Axis::x ? 1 : nx;
  }

  void transform(CxVec &v, FftDirection dir) const
  {
    if (dim_ == ShearletDim::full3d) {
      fft3(v, grid_.dims(), dir);
    } else {
      fft2_slices(v, grid_.dims(), slice_axis_, dir);
    }
  }

  template <typename F>
  void for_each_target(SparseFilter const &f, F &&fn) const
  {
    if (dim_ == ShearletDim::full3d) {
      for (std::size_t i = 0; i < f.index.size(); ++i) { fn(std::size_t(f.index[i]), f.value[i]); }
      return;
    }
    for (int s = 0; s < n_slices_; ++s) {
      std::size_t const base = std::size_t(s) * slice_stride_;
      for (std::size_t i = 0; i < f.index.size(); ++i) { fn(base + plane_offset_[f.index[i]], f.value[i]); }
    }
  }

  void build_filters()
  {
    int const D = dim_ == ShearletDim::full3d ? 3 : 2;
    int const nref = dim_ == ShearletDim::full3d ? fdims_[0] : std::min(fdims_[0], fdims_[1]);
    double const c = double(nref) / double(1 << (scales_ + 1));

    // Band table: low-pass, then per scale, per cone/pyramid, per shear tuple.
    auto layout = std::make_shared<CoefficientLayout>();
    std::size_t const band_size = grid_.voxels();
    auto add_band = [&](int level, int scale, int cone, std::array<int, 2> k) {
      BandInfo b;
      b.level = level;
      b.scale = scale;
      b.cone = cone;
      b.shear = k;
      b.offset = layout->total;
      b.size = band_size;
      b.shape = grid_.dims();
      layout->bands.push_back(b);
      layout->total += band_size;
    };
    add_band(0, -1, -1, {0, 0});
    layout->partition.push_back({0, 0, band_size});
    std::vector<int> kmax(static_cast<std::size_t>(scales_));
    // first band id per (scale, cone)
    std::vector<std::vector<std::size_t>> first(static_cast<std::size_t>(scales_), std::vector<std::size_t>(static_cast<std::size_t>(D)));
    for (int j = 0; j < scales_; ++j) {
      int const per_axis = shears_per_axis(j);
      int const K = (per_axis - 1) / 2;
      kmax[std::size_t(j)] = K;
      std::size_t const level_begin = layout->total;
      for (int cone = 0; cone < D; ++cone) {
        first[std::size_t(j)][std::size_t(cone)] = layout->bands.size();
        std::size_t const before = layout->bands.size();
        for (int k1 = -K; k1 <= K; ++k1) {
          if (D == 2) {
            add_band(j + 1, j, cone, {k1, 0});
          } else {
            for (int k2 = -K; k2 <= K; ++k2) { add_band(j + 1, j, cone, {k1, k2}); }
          }
        }
        std::size_t const count = layout->bands.size() - before;
        std::size_t const expected = D == 2 ? std::size_t(per_axis) : std::size_t(per_axis) * std::size_t(per_axis);
        if (count != expected) { fail(ErrorCategory::internal, "shear count does not match 2*ceil(2^(j/2))+1"); }
      }
      layout->partition.push_back({j + 1, level_begin, layout->total});
    }
    layout->validate();

    filters_.assign(layout->bands.size(), SparseFilter{});
    std::vector<double> energy(n_freq_, 0.0);
    auto push = [&](std::size_t band, std::size_t p, double v) {
      filters_[band].index.push_back(std::uint32_t(p));
      filters_[band].value.push_back(v);
      energy[p] += v * v;
    };

    std::vector<double> radial(static_cast<std::size_t>(scales_));
    for (std::size_t p = 0; p < n_freq_; ++p) {
      std::array<double, 3> eta{};
      std::size_t rem = p;
      for (int a = 0; a < D; ++a) {
        int const n = fdims_[std::size_t(a)];
        int const i = int(rem % std::size_t(n));
        rem /= std::size_t(n);
        eta[std::size_t(a)] = double(frequency_of(i, n)) * nref / n;
      }
      double rho = 0.0;
      for (int a = 0; a < D; ++a) { rho = std::max(rho, std::abs(eta[std::size_t(a)])); }

      double const low = lowpass_profile(rho / c);
      if (low > 0.0) { push(0, p, low); }

      for (int j = 0; j < scales_; ++j) {
        double const outer = lowpass_profile(rho / (c * double(1 << (j + 1))));
        double const inner = lowpass_profile(rho / (c * double(1 << j)));
        double const r2 = outer * outer - inner * inner;
        radial[std::size_t(j)] = r2 > 0.0 ? std::sqrt(r2) : 0.0;
      }

      for (int cone = 0; cone < D; ++cone) {
        double const lead = eta[std::size_t(cone)];
        if (lead == 0.0) { continue; }
        // Slopes of the remaining axes relative to the dominant one.
        std::array<double, 2> slope{};
        int ns = 0;
        for (int a = 0; a < D; ++a) {
          if (a != cone) { slope[std::size_t(ns++)] = eta[std::size_t(a)] / lead; }
        }
        for (int j = 0; j < scales_; ++j) {
          double const r = radial[std::size_t(j)];
          if (r <= 0.0) { continue; }
          int const K = kmax[std::size_t(j)];
          int const side = 2 * K + 1;
          // Candidate shears along each slope axis (at most two overlap any slope).
          std::array<std::array<int, 2>, 2> ks{};
          std::array<std::array<double, 2>, 2> hs{};
          std::array<int, 2> nk{0, 0};
          bool empty = false;
          for (int s = 0; s < ns; ++s) {
            double const u = slope[std::size_t(s)] * K;
            int const k0 = int(std::floor(u));
            for (int k = k0; k <= k0 + 1; ++k) {
              if (k < -K || k > K) { continue; }
              double const h = angular_window(u - k);
              if (h > 0.0) {
                ks[std::size_t(s)][std::size_t(nk[std::size_t(s)])] = k;
                hs[std::size_t(s)][std::size_t(nk[std::size_t(s)])] = h;
                ++nk[std::size_t(s)];
              }
            }
            if (nk[std::size_t(s)] == 0) { empty = true; }
          }
          if (empty) { continue; }
          std::size_t const base = first[std::size_t(j)][std::size_t(cone)];
          if (D == 2) {
            for (int a = 0; a < nk[0]; ++a) { push(base + std::size_t(ks[0][std::size_t(a)] + K), p, r * hs[0][std::size_t(a)]); }
          } else {
            for (int a = 0; a < nk[0]; ++a) {
              for (int b = 0; b < nk[1]; ++b) {
                std::size_t const band =
                  base + std::size_t((ks[0][std::size_t(a)] + K) * side + (ks[1][std::size_t(b)] + K));
                push(band, p, r * hs[0][std::size_t(a)] * hs[1][std::size_t(b)]);
              }
            }
          }
        }
      }
    }

    // Global renormalization to a Parseval frame.
    for (double e : energy) {
      if (!(e > 0.0)) { fail(ErrorCategory::internal, "shearlet filters leave a frequency uncovered"); }
    }
    for (auto &f : filters_) {
      for (std::size_t i = 0; i < f.index.size(); ++i) { f.value[i] /= std::sqrt(energy[f.index[i]]); }
    }
    layout_ = std::move(layout);
  }

  ShearletDim dim_;
  Axis slice_axis_;
  std::array<int, 3> fdims_{};
  std::size_t n_freq_ = 0;
  int n_slices_ = 1;
  std::vector<std::size_t> plane_offset_;
  std::size_t slice_stride_ = 0;
  std::vector<SparseFilter> filters_;
};

} // namespace

std::unique_ptr<TransformSystem> build_shearlet(Grid3 const &grid, int scales, ShearletDim dim, Axis slice_axis)
{
  return std::make_unique<ShearletSystem>(grid, scales, dim, slice_axis);
}

std::vector<double> shearlet_filter_energy(TransformSystem const &t)
{
  auto const *s = dynamic_cast<ShearletSystem const *>(&t);
  if (!s) { fail(ErrorCategory::invalid_argument, "not a shearlet system"); }
  return s->filter_energy();
}

} // namespace csmri
