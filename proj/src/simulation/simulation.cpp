#include "csmri/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace csmri {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 rotation(Point3 deg)
{
  double const k = std::numbers::pi / 180.0;
  double const a = deg[0] * k, b = deg[1] * k, c = deg[2] * k;
  Mat3 const rx{{{1, 0, 0}, {0, std::cos(a), -std::sin(a)}, {0, std::sin(a), std::cos(a)}}};
  Mat3 const ry{{{std::cos(b), 0, std::sin(b)}, {0, 1, 0}, {-std::sin(b), 0, std::cos(b)}}};
  Mat3 const rz{{{std::cos(c), -std::sin(c), 0}, {std::sin(c), std::cos(c), 0}, {0, 0, 1}}};
  auto mul = [](Mat3 const &p, Mat3 const &q) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int l = 0; l < 3; ++l) { r[i][j] += p[i][l] * q[l][j]; }
      }
    }
    return r;
  };
  return mul(rz, mul(ry, rx));
}

// 0 outside, 1 inside, Hermite ramp across [-h, h] around the surface.
double membership(double signed_dist, double h)
{
  double const t = std::clamp((h - signed_dist) / (2.0 * h), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double segment_distance(Point3 const &p, Point3 const &a, Point3 const &b)
{
  Point3 ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]}, ap{p[0] - a[0], p[1] - a[1], p[2] - a[2]};
  double const L = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
  double t = L > 0.0 ? (ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / L : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  double d2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    double const q = ap[std::size_t(i)] - t * ab[std::size_t(i)];
    d2 += q * q;
  }
  return std::sqrt(d2);
}

std::vector<double> numbers(std::istringstream &in)
{
  std::vector<double> v;
  double x = 0.0;
  while (in >> x) { v.push_back(x); }
  if (!in.eof()) { fail(ErrorCategory::invalid_argument, "phantom spec: expected numbers"); }
  return v;
}

} // namespace

void PhantomSpec::validate() const
{
  auto bad = [](std::string const &m) { fail(ErrorCategory::invalid_argument, "phantom spec: " + m); };
  if (background < 0.0 || background > 1.0) { bad("background must be in [0, 1]"); }
  if (texture < 0.0 || texture >= 1.0) { bad("texture must be in [0, 1)"); }
  for (auto const &e : ellipsoids) {
    if (e.intensity < 0.0 || e.intensity > 1.0) { bad("ellipsoid intensity must be in [0, 1]"); }
    for (double a : e.semi_axes) {
      if (!(a > 0.0)) { bad("ellipsoid semi-axes must be > 0"); }
    }
  }
  for (auto const &t : tubes) {
    if (t.intensity < 0.0 || t.intensity > 1.0) { bad("tube intensity must be in [0, 1]"); }
    if (!(t.radius_mm > 0.0)) { bad("tube radius must be > 0"); }
    if (t.centerline.size() < 2) { bad("tube needs at least two points"); }
  }
}

PhantomSpec parse_phantom_spec(std::string const &text)
{
  PhantomSpec s;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) { line.resize(h); }
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) { continue; }
    auto const v = numbers(ls);
    auto where = [&] { return "phantom spec line " + std::to_string(n) + ": "; };
    if (kind == "background" || kind == "texture") {
      if (v.size() != 1) { fail(ErrorCategory::invalid_argument, where() + kind + " takes one value"); }
      (kind == "background" ? s.background : s.texture) = v[0];
    } else if (kind == "ellipsoid") {
      if (v.size() != 10) { fail(ErrorCategory::invalid_argument, where() + "ellipsoid takes 10 values"); }
      s.ellipsoids.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}, v[9]});
    } else if (kind == "tube") {
      if (v.size() < 8 || (v.size() - 2) % 3 != 0) {
        fail(ErrorCategory::invalid_argument, where() + "tube takes radius, intensity and >= 2 points");
      }
      Tube t;
      t.radius_mm = v[0];
      t.intensity = v[1];
      for (std::size_t i = 2; i < v.size(); i += 3) { t.centerline.push_back({v[i], v[i + 1], v[i + 2]}); }
      s.tubes.push_back(std::move(t));
    } else {
      fail(ErrorCategory::invalid_argument, where() + "unknown shape '" + kind + "'");
    }
  }
  s.validate();
  return s;
}

std::string format_phantom_spec(PhantomSpec const &s)
{
  std::ostringstream o;
  o.precision(17);
  o << "background " << s.background << "\ntexture " << s.texture << "\n";
  for (auto const &e : s.ellipsoids) {
    o << "ellipsoid";
    for (auto const &a : {e.center, e.semi_axes, e.rotation_deg}) {
      for (double x : a) { o << " " << x; }
    }
    o << " " << e.intensity << "\n";
  }
  for (auto const &t : s.tubes) {
    o << "tube " << t.radius_mm << " " << t.intensity;
    for (auto const &p : t.centerline) { o << " " << p[0] << " " << p[1] << " " << p[2]; }
    o << "\n";
  }
  return o.str();
}

PhantomSpec default_phantom_spec()
{
  PhantomSpec s;
  s.background = 0.0;
  s.texture = 0.03;
  s.ellipsoids = {
    {{0, 0, 0}, {42, 34, 40}, {0, 0, 0}, 0.25},     // torso
    {{-24, 2, 4}, {13, 20, 26}, {0, 0, 0}, 0.05},   // lungs
    {{24, 2, 4}, {13, 20, 26}, {0, 0, 0}, 0.05},
    {{4, -4, 0}, {20, 17, 22}, {0, 0, 30}, 0.55},   // myocardium
    {{7, -2, -2}, {9, 8, 14}, {0, 0, 30}, 0.95},    // left ventricle
    {{-7, -9, 2}, {8, 6, 13}, {0, 0, 30}, 0.85},    // right ventricle
  };
  Tube rca;
  rca.radius_mm = 3.0;
  rca.intensity = 1.0;
  for (int i = 0; i <= 6; ++i) {
    double const th = (150.0 + 30.0 * i) * std::numbers::pi / 180.0;
    rca.centerline.push_back({4.0 + 23.0 * std::cos(th), -4.0 + 23.0 * std::sin(th), 8.0 - 1.5 * i});
  }
  Tube lad;
  lad.radius_mm = 3.0;
  lad.intensity = 1.0;
  lad.centerline = {{18, 12, 10}, {14, 16, -6}, {8, 17, -14}, {2, 15, -22}};
  Tube aorta;
  aorta.radius_mm = 6.0;
  aorta.intensity = 0.9;
  aorta.centerline = {{0, 8, 36}, {1, 7, 28}, {2, 5, 20}};
  s.tubes = {rca, lad, aorta};
  return s;
}

Phantom make_phantom(Grid3 const &grid, PhantomSpec const &spec, std::uint64_t seed)
{
  grid.validate();
  spec.validate();
  auto const d = grid.dims();
  Point3 lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[std::size_t(a)] = -(d[std::size_t(a)] / 2) * grid.spacing[std::size_t(a)];
    hi[std::size_t(a)] = (d[std::size_t(a)] - 1 - d[std::size_t(a)] / 2) * grid.spacing[std::size_t(a)];
  }
  auto outside = [&](Point3 c, Point3 half) {
    for (int a = 0; a < 3; ++a) {
      if (c[std::size_t(a)] - half[std::size_t(a)] < lo[std::size_t(a)] ||
          c[std::size_t(a)] + half[std::size_t(a)] > hi[std::size_t(a)]) {
        return true;
      }
    }
    return false;
  };
  std::vector<Mat3> rot;
  for (auto const &e : spec.ellipsoids) {
    Mat3 const R = rotation(e.rotation_deg);
    Point3 half{};
    for (int i = 0; i < 3; ++i) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) { s += std::pow(R[i][j] * e.semi_axes[std::size_t(j)], 2); }
      half[std::size_t(i)] = std::sqrt(s);
    }
    if (outside(e.center, half)) { fail(ErrorCategory::invalid_argument, "phantom ellipsoid extends outside the FOV"); }
    rot.push_back(R);
  }
  for (auto const &t : spec.tubes) {
    for (auto const &p : t.centerline) {
      if (outside(p, {t.radius_mm, t.radius_mm, t.radius_mm})) {
        fail(ErrorCategory::invalid_argument, "phantom tube extends outside the FOV");
      }
    }
  }

  // Seeded smooth texture: a few low-frequency cosines.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  struct Wave
  {
    Point3 k;
    double phase;
  };
  std::vector<Wave> waves;
  for (int m = 0; m < 6; ++m) {
    Wave w{};
    for (int a = 0; a < 3; ++a) {
      double const fov = d[std::size_t(a)] * grid.spacing[std::size_t(a)];
      w.k[std::size_t(a)] = 2.0 * std::numbers::pi * std::floor(uni(rng) * 4.0) / fov;
    }
    w.phase = 2.0 * std::numbers::pi * uni(rng);
    waves.push_back(w);
  }

  double const h = std::min({grid.spacing[0], grid.spacing[1], grid.spacing[2]});
  Phantom out{ComplexVolume(grid), spec.tubes};
  for (int z = 0; z < d[2]; ++z) {
    for (int y = 0; y < d[1]; ++y) {
      for (int x = 0; x < d[0]; ++x) {
        Point3 const p = voxel_to_mm(grid, x, y, z);
        double v = spec.background;
        for (std::size_t e = 0; e < spec.ellipsoids.size(); ++e) {
          auto const &E = spec.ellipsoids[e];
          auto const &R = rot[e];
          Point3 u{};
          for (int j = 0; j < 3; ++j) {
            for (int i = 0; i < 3; ++i) { u[std::size_t(j)] += R[i][j] * (p[std::size_t(i)] - E.center[std::size_t(i)]); }
          }
          double q2 = 0.0, g2 = 0.0;
          for (int j = 0; j < 3; ++j) {
            double const a = E.semi_axes[std::size_t(j)];
            q2 += u[std::size_t(j)] * u[std::size_t(j)] / (a * a);
            g2 += u[std::size_t(j)] * u[std::size_t(j)] / (a * a * a * a);
          }
          double const q = std::sqrt(q2);
          // first-order signed distance (q - 1) / |grad q|
          double const dist = q > 0.0 ? (q - 1.0) * q / std::sqrt(g2) : -std::min({E.semi_axes[0], E.semi_axes[1], E.semi_axes[2]});
          double const m = membership(dist, h);
          v = v * (1.0 - m) + E.intensity * m;
        }
        for (auto const &t : spec.tubes) {
          double dmin = 1e300;
          for (std::size_t s = 1; s < t.centerline.size(); ++s) {
            dmin = std::min(dmin, segment_distance(p, t.centerline[s - 1], t.centerline[s]));
          }
          double const m = membership(dmin - t.radius_mm, h);
          v = v * (1.0 - m) + t.intensity * m;
        }
        if (spec.texture > 0.0 && v > spec.background) {
          double tex = 0.0;
          for (auto const &w : waves) { tex += std::cos(w.k[0] * p[0] + w.k[1] * p[1] + w.k[2] * p[2] + w.phase); }
          tex /= double(waves.size());
          v = spec.background + (v - spec.background) * (1.0 + spec.texture * tex);
        }
        out.volume(x, y, z) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

SensitivityMaps make_coils(Grid3 const &grid, int n_coils, std::uint64_t seed)
{
  if (n_coils < 1) { fail(ErrorCategory::invalid_argument, "make_coils: n_coils must be >= 1"); }
  grid.validate();
  auto const d = grid.dims();
  Point3 fov{};
  for (int a = 0; a < 3; ++a) { fov[std::size_t(a)] = d[std::size_t(a)] * grid.spacing[std::size_t(a)]; }
  double const width = 0.65 * (fov[0] + fov[1] + fov[2]) / 3.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<ComplexVolume> raw;
  for (int c = 0; c < n_coils; ++c) {
    double const th = 2.0 * std::numbers::pi * (c + 0.1 * uni(rng)) / n_coils;
    Point3 const pos{(c % 2 == 0 ? 0.2 : -0.2) * fov[0], 0.6 * fov[1] * std::cos(th), 0.6 * fov[2] * std::sin(th)};
    Point3 grad{};
    for (int a = 0; a < 3; ++a) { grad[std::size_t(a)] = 0.5 * std::numbers::pi * uni(rng) / fov[std::size_t(a)]; }
    double const phase0 = std::numbers::pi * uni(rng);
    ComplexVolume m(grid);
    for (int z = 0; z < d[2]; ++z) {
      for (int y = 0; y < d[1]; ++y) {
        for (int x = 0; x < d[0]; ++x) {
          Point3 const p = voxel_to_mm(grid, x, y, z);
          double r2 = 0.0, ph = phase0;
          for (int a = 0; a < 3; ++a) {
            r2 += std::pow(p[std::size_t(a)] - pos[std::size_t(a)], 2);
            ph += grad[std::size_t(a)] * p[std::size_t(a)];
          }
          m(x, y, z) = std::polar(std::exp(-r2 / (2.0 * width * width)), ph);
        }
      }
    }
    raw.push_back(std::move(m));
  }
  return SensitivityMaps::normalized(std::move(raw));
}

double noise_sigma_for_snr(KSpaceSamples const &clean, double snr_db)
{
  std::size_t const n = clean.n_coils() * clean.n_samples();
  if (n == 0) { return 0.0; }
  double const rms = clean.norm() / std::sqrt(double(n));
  return rms / (std::sqrt(2.0) * std::pow(10.0, snr_db / 20.0));
}

KSpaceSamples add_noise(KSpaceSamples y, double noise_sigma, std::uint64_t seed)
{
  if (noise_sigma < 0.0) { fail(ErrorCategory::invalid_argument, "noise sigma must be >= 0"); }
  if (noise_sigma == 0.0) { return y; }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise_sigma);
  for (auto &c : y.coils) {
    for (auto &v : c) {
      double const re = n(rng);
      double const im = n(rng);
      v += cx(re, im);
    }
  }
  return y;
}

KSpaceSamples simulate_acquisition(ComplexVolume const &x, EncodingOperator const &E, double noise_sigma,
                                   std::uint64_t seed)
{
  if (noise_sigma < 0.0) { fail(ErrorCategory::invalid_argument, "noise sigma must be >= 0"); }
  return add_noise(E.forward(x), noise_sigma, seed);
}

std::string format_centerlines(std::vector<Tube> const &tubes)
{
  std::ostringstream o;
  o.precision(17);
  for (auto const &t : tubes) {
    o << "tube " << t.radius_mm << " " << t.centerline.size() << "\n";
    for (auto const &p : t.centerline) { o << p[0] << " " << p[1] << " " << p[2] << "\n"; }
  }
  return o.str();
}

std::vector<Tube> parse_centerlines(std::string const &text)
{
  std::istringstream in(text);
  std::vector<Tube> out;
  std::string word;
  while (in >> word) {
    if (word != "tube") { fail(ErrorCategory::io, "centerline file: expected 'tube', got '" + word + "'"); }
    Tube t;
    std::size_t n = 0;
    if (!(in >> t.radius_mm >> n)) { fail(ErrorCategory::io, "centerline file: bad tube header"); }
    for (std::size_t i = 0; i < n; ++i) {
      Point3 p{};
      if (!(in >> p[0] >> p[1] >> p[2])) { fail(ErrorCategory::io, "centerline file: truncated point list"); }
      t.centerline.push_back(p);
    }
    out.push_back(std::move(t));
  }
  return out;
}

} // namespace csmri
