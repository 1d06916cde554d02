#include "csmri/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace csmri {

std::string to_string(AngleScheme s)
{
  switch (s) {
  case AngleScheme::uniform:
    return "uniform";
  case AngleScheme::golden_angle:
    return "golden-angle";
  case AngleScheme::custom:
    return "custom";
  }
  return "custom";
}

AngleScheme parse_angle_scheme(std::string const &s)
{
  if (s == "uniform") { return AngleScheme::uniform; }
  if (s == "golden-angle" || s == "golden") { return AngleScheme::golden_angle; }
  if (s == "custom") { return AngleScheme::custom; }
  fail(ErrorCategory::invalid_argument, "unknown angle scheme '" + s + "' (expected uniform or golden-angle)");
}

UndersampleMode parse_undersample_mode(std::string const &s)
{
  if (s == "stride") { return UndersampleMode::stride; }
  if (s == "prefix") { return UndersampleMode::prefix; }
  fail(ErrorCategory::invalid_argument, "unknown undersampling mode '" + s + "' (expected stride or prefix)");
}

Trajectory Trajectory::from_lines(int n_read, int phase_extent, AngleScheme scheme, std::vector<RpeLine> lines)
{
  if (n_read < 1) { fail(ErrorCategory::invalid_argument, "n_read must be >= 1"); }
  if (lines.empty()) { fail(ErrorCategory::invalid_argument, "trajectory needs at least one line"); }
  double const bound = 0.5 * phase_extent;
  Trajectory t;
  t.n_read_ = n_read;
  t.phase_extent_ = phase_extent;
  t.scheme_ = scheme;
  std::size_t const n_radial = lines.front().radii.size();
  for (auto const &l : lines) {
    if (l.radii.size() != n_radial) { fail(ErrorCategory::invalid_argument, "all RPE lines need the same radial count"); }
    for (double r : l.radii) {
      if (std::abs(r) > bound) { fail(ErrorCategory::invalid_argument, "radial position exceeds the Nyquist bound"); }
    }
  }
  t.points_.reserve(lines.size() * n_radial * std::size_t(n_read));
  for (auto const &l : lines) {
    double const c = std::cos(l.angle), s = std::sin(l.angle);
    for (double r : l.radii) {
      for (int i = 0; i < n_read; ++i) { t.points_.push_back({double(i - n_read / 2), r * c, r * s}); }
    }
  }
  t.lines_ = std::move(lines);
  return t;
}

Trajectory Trajectory::from_points(std::vector<KPoint> points, int phase_extent)
{
  Trajectory t;
  t.n_read_ = 1;
  t.phase_extent_ = phase_extent;
  t.scheme_ = AngleScheme::custom;
  t.points_ = std::move(points);
  return t;
}

std::size_t Trajectory::samples_per_line() const
{
  return lines_.empty() ? 0 : lines_.front().radii.size() * std::size_t(n_read_);
}

double Trajectory::nominal_undersampling() const
{
  double const full = double(phase_extent_) * double(phase_extent_);
  if (lines_.empty()) { return full * n_read_ / double(points_.size()); }
  return full / (double(lines_.size()) * double(lines_.front().radii.size()));
}

double Trajectory::radial_step() const
{
  if (lines_.empty() || lines_.front().radii.size() < 2) { return 0.0; }
  auto const &r = lines_.front().radii;
  return std::abs(r[1] - r[0]);
}

Trajectory Trajectory::select_lines(std::vector<std::size_t> const &idx) const
{
  if (lines_.empty()) { fail(ErrorCategory::invalid_argument, "trajectory has no line structure"); }
  Trajectory t;
  t.n_read_ = n_read_;
  t.phase_extent_ = phase_extent_;
  t.scheme_ = scheme_;
  std::size_t const per = samples_per_line();
  for (auto i : idx) {
    if (i >= lines_.size()) { fail(ErrorCategory::invalid_argument, "line index out of range"); }
    t.lines_.push_back(lines_[i]);
    t.points_.insert(t.points_.end(), points_.begin() + std::ptrdiff_t(i * per),
                     points_.begin() + std::ptrdiff_t((i + 1) * per));
  }
  return t;
}

double golden_angle_fraction() { return (std::sqrt(5.0) - 1.0) / 2.0; }

Trajectory generate_rpe(int n_read, int phase_extent, int n_lines, int n_radial, AngleScheme scheme)
{
  if (n_lines < 1) { fail(ErrorCategory::invalid_argument, "n_lines must be >= 1"); }
  if (n_radial < 2) { fail(ErrorCategory::invalid_argument, "n_radial must be >= 2"); }
  if (phase_extent < 2) { fail(ErrorCategory::invalid_argument, "phase extent must be >= 2"); }
  if (n_radial > phase_extent) {
    fail(ErrorCategory::invalid_argument, "n_radial " + std::to_string(n_radial) + " exceeds the Nyquist limit of " +
                                            std::to_string(phase_extent) + " positions per line");
  }
  if (scheme == AngleScheme::custom) { fail(ErrorCategory::invalid_argument, "RPE needs uniform or golden-angle"); }
  double const pi = std::numbers::pi;
  double const step = double(phase_extent) / n_radial;
  std::vector<double> radii(static_cast<std::size_t>(n_radial));
  for (int m = 0; m < n_radial; ++m) { radii[std::size_t(m)] = (m - n_radial / 2) * step; }
  std::vector<RpeLine> lines(static_cast<std::size_t>(n_lines));
  for (int l = 0; l < n_lines; ++l) {
    double phi = 0.0;
    if (scheme == AngleScheme::uniform) {
      phi = l * pi / n_lines;
    } else {
      phi = std::fmod(l * pi * golden_angle_fraction(), pi);
    }
    lines[std::size_t(l)] = RpeLine{phi, radii, std::size_t(l)};
  }
  return Trajectory::from_lines(n_read, phase_extent, scheme, std::move(lines));
}

Trajectory cartesian_trajectory(Grid3 const &grid)
{
  std::vector<KPoint> pts;
  pts.reserve(grid.voxels());
  for (int z = 0; z < grid.nz; ++z) {
    for (int y = 0; y < grid.ny; ++y) {
      for (int x = 0; x < grid.nx; ++x) {
        pts.push_back({double(x - grid.nx / 2), double(y - grid.ny / 2), double(z - grid.nz / 2)});
      }
    }
  }
  return Trajectory::from_points(std::move(pts), std::min(grid.ny, grid.nz));
}

std::vector<std::size_t> retained_lines(std::size_t n_lines, int factor, UndersampleMode mode)
{
  if (factor <= 0) { fail(ErrorCategory::invalid_argument, "undersampling factor must be >= 1"); }
  if (std::size_t(factor) > n_lines) {
    fail(ErrorCategory::invalid_argument, "undersampling factor " + std::to_string(factor) + " exceeds line count " +
                                            std::to_string(n_lines));
  }
  std::size_t const keep = (n_lines + std::size_t(factor) - 1) / std::size_t(factor);
  std::vector<std::size_t> idx(keep);
  for (std::size_t i = 0; i < keep; ++i) { idx[i] = mode == UndersampleMode::stride ? i * std::size_t(factor) : i; }
  return idx;
}

Trajectory retro_undersample(Trajectory const &t, int factor, UndersampleMode mode)
{
  return t.select_lines(retained_lines(t.n_lines(), factor, mode));
}

double nominal_scan_time(double base_minutes, int factor)
{
  if (factor <= 0) { fail(ErrorCategory::invalid_argument, "undersampling factor must be >= 1"); }
  return base_minutes / factor;
}

std::vector<double> density_weights(Trajectory const &t)
{
  double step = t.radial_step();
  double const r_min = step > 0 ? 0.5 * step : 0.5;
  std::vector<double> w(t.size());
  if (!t.lines().empty()) {
    std::size_t i = 0;
    for (auto const &l : t.lines()) {
      for (double r : l.radii) {
        double const v = std::max(std::abs(r), r_min);
        for (int k = 0; k < t.n_read(); ++k) { w[i++] = v; }
      }
    }
  } else {
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto const &p = t.points()[i];
      w[i] = std::max(std::hypot(p[1], p[2]), r_min);
    }
  }
  double sum = 0.0;
  for (double v : w) { sum += v; }
  double const mean = w.empty() ? 1.0 : sum / double(w.size());
  for (double &v : w) { v /= mean; }
  return w;
}

std::string encode_trajectory(Trajectory const &t)
{
  std::string out = "CSTRAJ1 " + std::to_string(t.n_read()) + " " + std::to_string(t.n_lines()) + " " +
                    to_string(t.scheme()) + " " + std::to_string(t.phase_extent()) + " " + std::to_string(t.size()) +
                    "\n";
  out.reserve(out.size() + t.size() * 24);
  for (auto const &p : t.points()) {
    for (double v : p) { append_f64(out, v); }
  }
  return out;
}

Trajectory decode_trajectory(std::string_view bytes, std::string const &source)
{
  auto const eol = bytes.find('\n');
  if (eol == std::string_view::npos) { fail(ErrorCategory::io, source + ": missing CSTRAJ1 header"); }
  std::istringstream hs{std::string(bytes.substr(0, eol))};
  std::string magic, scheme;
  int n_read = 0, phase = 0;
  std::size_t n_lines = 0, n_samples = 0;
  hs >> magic >> n_read >> n_lines >> scheme >> phase >> n_samples;
  if (!hs || magic != "CSTRAJ1") { fail(ErrorCategory::io, source + ": not a CSTRAJ1 file"); }
  auto const payload = bytes.substr(eol + 1);
  if (payload.size() != n_samples * 24) { fail(ErrorCategory::io, source + ": truncated trajectory payload"); }
  Trajectory t;
  t.n_read_ = n_read;
  t.phase_extent_ = phase;
  t.scheme_ = parse_angle_scheme(scheme);
  t.points_.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (int c = 0; c < 3; ++c) { t.points_[i][std::size_t(c)] = read_f64(payload.data() + 24 * i + 8 * c); }
  }
  if (n_lines > 0) {
    if (n_read <= 0 || n_samples % (n_lines * std::size_t(n_read)) != 0) {
      fail(ErrorCategory::io, source + ": sample count is not a multiple of n_lines * n_read");
    }
    std::size_t const n_radial = n_samples / (n_lines * std::size_t(n_read));
    double const pi = std::numbers::pi;
    for (std::size_t l = 0; l < n_lines; ++l) {
      std::size_t const base = l * n_radial * std::size_t(n_read);
      // Direction from the sample farthest from the readout axis.
      double best = -1.0, phi = 0.0;
      for (std::size_t m = 0; m < n_radial; ++m) {
        auto const &p = t.points_[base + m * std::size_t(n_read)];
        double const r = std::hypot(p[1], p[2]);
        if (r > best) {
          best = r;
          phi = std::atan2(p[2], p[1]);
        }
      }
      if (phi < 0) { phi += pi; }
      if (phi >= pi) { phi -= pi; }
      RpeLine line{phi, {}, l};
      for (std::size_t m = 0; m < n_radial; ++m) {
        auto const &p = t.points_[base + m * std::size_t(n_read)];
        line.radii.push_back(p[1] * std::cos(phi) + p[2] * std::sin(phi));
      }
      t.lines_.push_back(std::move(line));
    }
  }
  return t;
}

void save_trajectory(fs::path const &path, Trajectory const &t) { write_file_atomic(path, encode_trajectory(t)); }

Trajectory load_trajectory(fs::path const &path) { return decode_trajectory(read_file(path), path.string()); }

} // namespace csmri
