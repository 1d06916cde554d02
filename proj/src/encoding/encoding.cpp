#include "csmri/encoding.hpp"

#include "csmri/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace csmri {

KaiserBessel KaiserBessel::for_oversampling(double half_width, double oversampling)
{
  if (half_width < 1.0) { fail(ErrorCategory::invalid_argument, "kernel half-width must be >= 1"); }
  if (oversampling < 1.0) { fail(ErrorCategory::invalid_argument, "oversampling must be >= 1"); }
  double const w = 2.0 * half_width;
  double const a = oversampling;
  double const arg = (w / a) * (w / a) * (a - 0.5) * (a - 0.5) - 0.8;
  return KaiserBessel{half_width, std::numbers::pi * std::sqrt(std::max(arg, 0.0))};
}

double KaiserBessel::operator()(double t) const
{
  double const u = t / half_width;
  if (std::abs(u) > 1.0) { return 0.0; }
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u));
}

double KaiserBessel::transform(double nu) const
{
  double const w = 2.0 * half_width;
  double const a = std::numbers::pi * w * nu;
  double const d = beta * beta - a * a;
  if (std::abs(d) < 1e-12) { return w; }
  if (d > 0) {
    double const s = std::sqrt(d);
    return w * std::sinh(s) / s;
  }
  double const s = std::sqrt(-d);
  return w * std::sin(s) / s;
}

namespace {

// Coil sum of squares and its support floor.
std::vector<double> sum_of_squares(std::vector<ComplexVolume> const &maps, double &floor)
{
  if (maps.empty()) { fail(ErrorCategory::invalid_argument, "need at least one coil map"); }
  Grid3 const g = maps.front().grid();
  for (auto const &m : maps) { require_same_shape(g, m.grid(), "sensitivity maps"); }
  std::size_t const n = g.voxels();
  std::vector<double> sos(n, 0.0);
  for (auto const &m : maps) {
    for (std::size_t i = 0; i < n; ++i) { sos[i] += std::norm(m[i]); }
  }
  double const peak = *std::max_element(sos.begin(), sos.end());
  if (!(peak > 0.0)) { fail(ErrorCategory::invalid_argument, "sensitivity maps are identically zero"); }
  floor = 0.05 * peak;
  return sos;
}

} // namespace

SensitivityMaps SensitivityMaps::from_maps(std::vector<ComplexVolume> maps)
{
  double floor = 0.0;
  auto const sos = sum_of_squares(maps, floor);
  SensitivityMaps s;
  s.support_.resize(sos.size());
  for (std::size_t i = 0; i < sos.size(); ++i) { s.support_[i] = sos[i] > floor; }
  s.maps_ = std::move(maps);
  return s;
}

SensitivityMaps SensitivityMaps::normalized(std::vector<ComplexVolume> raw)
{
  double floor = 0.0;
  auto const sos = sum_of_squares(raw, floor);
  std::size_t const n = sos.size();
  SensitivityMaps s;
  s.support_.resize(n);
  for (std::size_t i = 0; i < n; ++i) { s.support_[i] = sos[i] > floor; }
  for (auto &m : raw) {
    for (std::size_t i = 0; i < n; ++i) { m[i] /= std::sqrt(s.support_[i] ? sos[i] : floor); }
  }
  s.maps_ = std::move(raw);
  return s;
}

SensitivityMaps SensitivityMaps::uniform(Grid3 const &grid)
{
  ComplexVolume one(grid);
  for (auto &v : one.data()) { v = 1.0; }
  return normalized({std::move(one)});
}

double KSpaceSamples::norm() const
{
  double s = 0.0;
  for (auto const &c : coils) {
    for (auto const &v : c) { s += std::norm(v); }
  }
  return std::sqrt(s);
}

KSpaceSamples &KSpaceSamples::operator*=(cx s)
{
  for (auto &c : coils) {
    for (auto &v : c) { v *= s; }
  }
  return *this;
}

KSpaceSamples &KSpaceSamples::operator-=(KSpaceSamples const &o)
{
  if (o.n_coils() != n_coils() || o.n_samples() != n_samples()) {
    fail(ErrorCategory::shape_mismatch, "k-space sample sets differ in shape");
  }
  for (std::size_t c = 0; c < coils.size(); ++c) {
    for (std::size_t i = 0; i < coils[c].size(); ++i) { coils[c][i] -= o.coils[c][i]; }
  }
  return *this;
}

KSpaceSamples zero_samples(std::shared_ptr<Trajectory const> t, std::size_t n_coils)
{
  KSpaceSamples y;
  y.coils.assign(n_coils, std::vector<cx>(t->size(), cx(0.0, 0.0)));
  y.trajectory = std::move(t);
  return y;
}

cx inner_product(KSpaceSamples const &a, KSpaceSamples const &b)
{
  if (a.n_coils() != b.n_coils()) { fail(ErrorCategory::shape_mismatch, "coil counts differ"); }
  cx s = 0.0;
  for (std::size_t c = 0; c < a.coils.size(); ++c) { s += inner_product(a.coils[c], b.coils[c]); }
  return s;
}

KSpaceSamples select_line_samples(KSpaceSamples const &y, Trajectory const &parent,
                                  std::shared_ptr<Trajectory const> child)
{
  if (y.n_samples() != parent.size()) { fail(ErrorCategory::shape_mismatch, "samples do not match the trajectory"); }
  std::size_t const per = parent.samples_per_line();
  if (per == 0 || child->samples_per_line() != per) {
    fail(ErrorCategory::invalid_argument, "line selection needs RPE trajectories with equal line lengths");
  }
  KSpaceSamples out;
  out.trajectory = child;
  out.coils.resize(y.n_coils());
  for (std::size_t c = 0; c < y.n_coils(); ++c) {
    auto &dst = out.coils[c];
    dst.reserve(child->size());
    for (auto const &line : child->lines()) {
      if (line.source_index >= parent.n_lines()) { fail(ErrorCategory::invalid_argument, "line index out of range"); }
      auto const first = y.coils[c].begin() + std::ptrdiff_t(line.source_index * per);
      dst.insert(dst.end(), first, first + std::ptrdiff_t(per));
    }
  }
  return out;
}

EncodingOperator::EncodingOperator(SensitivityMaps maps, std::shared_ptr<Trajectory const> trajectory,
                                   EncodingOptions options)
  : maps_(std::move(maps))
  , trajectory_(std::move(trajectory))
  , options_(options)
  , kernel_(KaiserBessel::for_oversampling(options.half_width, options.oversampling))
{
  if (maps_.n_coils() == 0) { fail(ErrorCategory::invalid_argument, "encoding needs at least one coil"); }
  if (!trajectory_ || trajectory_->size() == 0) { fail(ErrorCategory::invalid_argument, "encoding needs samples"); }
  if (options_.half_width > taps / 2) {
    fail(ErrorCategory::invalid_argument, "kernel half-width above " + std::to_string(taps / 2) + " not supported");
  }
  auto const n = grid().dims();
  for (int a = 0; a < 3; ++a) {
    auto const ua = std::size_t(a);
    int const m = int(std::ceil(n[ua] * options_.oversampling - 1e-9));
    os_dims_[ua] = m;
    double const s = std::sqrt(double(m) / n[ua]);
    apod_[ua].resize(std::size_t(n[ua]));
    embed_[ua].resize(std::size_t(n[ua]));
    for (int i = 0; i < n[ua]; ++i) {
      int const p = i - n[ua] / 2;
      apod_[ua][std::size_t(i)] = s / kernel_.transform(double(p) / m);
      embed_[ua][std::size_t(i)] = ((p % m) + m) % m;
    }
  }
  auto const &pts = trajectory_->points();
  tap_index_.resize(pts.size() * 3 * taps);
  tap_weight_.resize(pts.size() * 3 * taps);
  for (std::size_t s = 0; s < pts.size(); ++s) {
    for (int a = 0; a < 3; ++a) {
      auto const ua = std::size_t(a);
      int const m = os_dims_[ua];
      double const k = pts[s][ua];
      if (std::abs(k) > 0.5 * n[ua] + 1e-9) {
        fail(ErrorCategory::invalid_argument, "sample coordinate outside the grid's Nyquist range");
      }
      // Position in the centered oversampled grid, relative to its center.
      double const u = k * double(m) / n[ua];
      int const g0 = int(std::floor(u)) - taps / 2 + 1;
      for (int t = 0; t < taps; ++t) {
        int const g = g0 + t;
        std::size_t const o = (s * 3 + ua) * taps + std::size_t(t);
        tap_index_[o] = ((g % m) + m) % m;
        tap_weight_[o] = kernel_(u - g);
      }
    }
  }
  density_ = density_weights(*trajectory_);
}

void EncodingOperator::check_volume(ComplexVolume const &x) const { require_same_shape(grid(), x.grid(), "encoding"); }

void EncodingOperator::check_samples(KSpaceSamples const &y) const
{
  if (y.n_coils() != maps_.n_coils()) {
    fail(ErrorCategory::shape_mismatch, "k-space has " + std::to_string(y.n_coils()) + " coils, operator has " +
                                          std::to_string(maps_.n_coils()));
  }
  if (y.n_samples() != trajectory_->size()) {
    fail(ErrorCategory::shape_mismatch, "k-space has " + std::to_string(y.n_samples()) +
                                          " samples per coil, trajectory has " + std::to_string(trajectory_->size()));
  }
}

void EncodingOperator::forward_coil(ComplexVolume const &x, std::size_t coil, CxVec &buf, std::vector<cx> &out) const
{
  auto const n = grid().dims();
  int const mx = os_dims_[0], my = os_dims_[1];
  std::fill(buf.begin(), buf.end(), cx(0.0, 0.0));
  auto const &S = maps_[coil];
  for (int z = 0; z < n[2]; ++z) {
    double const az = apod_[2][std::size_t(z)];
    std::size_t const oz = std::size_t(embed_[2][std::size_t(z)]) * my;
    for (int y = 0; y < n[1]; ++y) {
      double const ayz = az * apod_[1][std::size_t(y)];
      std::size_t const orow = (oz + std::size_t(embed_[1][std::size_t(y)])) * mx;
      std::size_t const irow = x.index(0, y, z);
      for (int i = 0; i < n[0]; ++i) {
        buf[orow + std::size_t(embed_[0][std::size_t(i)])] =
          x[irow + std::size_t(i)] * S[irow + std::size_t(i)] * (ayz * apod_[0][std::size_t(i)]);
      }
    }
  }
  fft3(buf, os_dims_, FftDirection::forward);
  std::size_t const ns = trajectory_->size();
  out.resize(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    int const *ix = &tap_index_[(s * 3 + 0) * taps];
    int const *iy = &tap_index_[(s * 3 + 1) * taps];
    int const *iz = &tap_index_[(s * 3 + 2) * taps];
    double const *wx = &tap_weight_[(s * 3 + 0) * taps];
    double const *wy = &tap_weight_[(s * 3 + 1) * taps];
    double const *wz = &tap_weight_[(s * 3 + 2) * taps];
    cx acc = 0.0;
    for (int c = 0; c < taps; ++c) {
      if (wz[c] == 0.0) { continue; }
      std::size_t const pz = std::size_t(iz[c]) * my;
      cx accy = 0.0;
      for (int b = 0; b < taps; ++b) {
        if (wy[b] == 0.0) { continue; }
        cx const *row = &buf[(pz + std::size_t(iy[b])) * mx];
        cx accx = 0.0;
        for (int a = 0; a < taps; ++a) { accx += wx[a] * row[ix[a]]; }
        accy += wy[b] * accx;
      }
      acc += wz[c] * accy;
    }
    out[s] = acc;
  }
}

void EncodingOperator::adjoint_coil(std::vector<cx> const &y, std::size_t coil, std::vector<double> const *weights,
                                    CxVec &buf, ComplexVolume &out) const
{
  auto const n = grid().dims();
  int const mx = os_dims_[0], my = os_dims_[1];
  std::fill(buf.begin(), buf.end(), cx(0.0, 0.0));
  std::size_t const ns = trajectory_->size();
  for (std::size_t s = 0; s < ns; ++s) {
    cx const v = weights ? y[s] * (*weights)[s] : y[s];
    int const *ix = &tap_index_[(s * 3 + 0) * taps];
    int const *iy = &tap_index_[(s * 3 + 1) * taps];
    int const *iz = &tap_index_[(s * 3 + 2) * taps];
    double const *wx = &tap_weight_[(s * 3 + 0) * taps];
    double const *wy = &tap_weight_[(s * 3 + 1) * taps];
    double const *wz = &tap_weight_[(s * 3 + 2) * taps];
    for (int c = 0; c < taps; ++c) {
      if (wz[c] == 0.0) { continue; }
      std::size_t const pz = std::size_t(iz[c]) * my;
      cx const vz = v * wz[c];
      for (int b = 0; b < taps; ++b) {
        if (wy[b] == 0.0) { continue; }
        cx *row = &buf[(pz + std::size_t(iy[b])) * mx];
        cx const vy = vz * wy[b];
        for (int a = 0; a < taps; ++a) { row[ix[a]] += vy * wx[a]; }
      }
    }
  }
  fft3(buf, os_dims_, FftDirection::inverse);
  auto const &S = maps_[coil];
  for (int z = 0; z < n[2]; ++z) {
    double const az = apod_[2][std::size_t(z)];
    std::size_t const oz = std::size_t(embed_[2][std::size_t(z)]) * my;
    for (int yy = 0; yy < n[1]; ++yy) {
      double const ayz = az * apod_[1][std::size_t(yy)];
      std::size_t const orow = (oz + std::size_t(embed_[1][std::size_t(yy)])) * mx;
      std::size_t const irow = out.index(0, yy, z);
      for (int i = 0; i < n[0]; ++i) {
        out[irow + std::size_t(i)] += std::conj(S[irow + std::size_t(i)]) *
                                      buf[orow + std::size_t(embed_[0][std::size_t(i)])] *
                                      (ayz * apod_[0][std::size_t(i)]);
      }
    }
  }
}

KSpaceSamples EncodingOperator::forward(ComplexVolume const &x) const
{
  check_volume(x);
  KSpaceSamples y;
  y.trajectory = trajectory_;
  y.coils.resize(maps_.n_coils());
  CxVec buf(std::size_t(os_dims_[0]) * os_dims_[1] * os_dims_[2]);
  for (std::size_t c = 0; c < maps_.n_coils(); ++c) { forward_coil(x, c, buf, y.coils[c]); }
  return y;
}

ComplexVolume EncodingOperator::adjoint(KSpaceSamples const &y) const { return adjoint(y, false).volume; }

AdjointResult EncodingOperator::adjoint(KSpaceSamples const &y, bool use_density) const
{
  check_samples(y);
  AdjointResult r{ComplexVolume(grid()), use_density};
  CxVec buf(std::size_t(os_dims_[0]) * os_dims_[1] * os_dims_[2]);
  for (std::size_t c = 0; c < maps_.n_coils(); ++c) {
    adjoint_coil(y.coils[c], c, use_density ? &density_ : nullptr, buf, r.volume);
  }
  return r;
}

ComplexVolume EncodingOperator::normal(ComplexVolume const &x, double beta, double mu, GramOperator const &gram) const
{
  check_volume(x);
  ComplexVolume out(grid());
  if (beta != 0.0) {
    CxVec buf(std::size_t(os_dims_[0]) * os_dims_[1] * os_dims_[2]);
    std::vector<cx> samples;
    for (std::size_t c = 0; c < maps_.n_coils(); ++c) {
      forward_coil(x, c, buf, samples);
      adjoint_coil(samples, c, nullptr, buf, out);
    }
    out *= beta;
  }
  if (mu != 0.0) {
    if (gram) {
      ComplexVolume g(grid());
      gram(x, g);
      axpy(mu, g.span(), out.span());
    } else {
      axpy(mu, x.span(), out.span());
    }
  }
  return out;
}

void save_kspace(fs::path const &path, KSpaceSamples const &y, fs::path const &trajectory_path)
{
  fs::path ref = trajectory_path;
  if (path.has_parent_path() && trajectory_path.is_absolute() == path.is_absolute()) {
    ref = trajectory_path.lexically_relative(path.parent_path());
    if (ref.empty()) { ref = trajectory_path; }
  }
  std::string out = "CSKSP1 " + std::to_string(y.n_coils()) + " " + std::to_string(y.n_samples()) + " c64 " +
                    ref.generic_string() + "\n";
  out.reserve(out.size() + y.n_coils() * y.n_samples() * 16);
  for (auto const &c : y.coils) {
    for (auto const &v : c) {
      append_f64(out, v.real());
      append_f64(out, v.imag());
    }
  }
  write_file_atomic(path, out);
}

KSpaceSamples load_kspace(fs::path const &path)
{
  std::string const bytes = read_file(path);
  auto const eol = bytes.find('\n');
  if (eol == std::string::npos) { fail(ErrorCategory::io, path.string() + ": missing CSKSP1 header"); }
  std::istringstream hs(bytes.substr(0, eol));
  std::string magic, dtype, ref;
  std::size_t n_coils = 0, n_samples = 0;
  hs >> magic >> n_coils >> n_samples >> dtype >> ref;
  if (!hs || magic != "CSKSP1") { fail(ErrorCategory::io, path.string() + ": not a CSKSP1 file"); }
  if (dtype != "c64") { fail(ErrorCategory::io, path.string() + ": unsupported dtype '" + dtype + "'"); }
  if (bytes.size() - eol - 1 != n_coils * n_samples * 16) {
    fail(ErrorCategory::io, path.string() + ": truncated k-space payload");
  }
  fs::path tp = ref;
  if (tp.is_relative()) { tp = path.parent_path() / tp; }
  auto traj = std::make_shared<Trajectory const>(load_trajectory(tp));
  if (traj->size() != n_samples) { fail(ErrorCategory::io, path.string() + ": trajectory sample count mismatch"); }
  KSpaceSamples y;
  y.trajectory = traj;
  y.coils.assign(n_coils, std::vector<cx>(n_samples));
  char const *p = bytes.data() + eol + 1;
  for (std::size_t c = 0; c < n_coils; ++c) {
    for (std::size_t i = 0; i < n_samples; ++i, p += 16) { y.coils[c][i] = cx(read_f64(p), read_f64(p + 8)); }
  }
  return y;
}

} // namespace csmri
