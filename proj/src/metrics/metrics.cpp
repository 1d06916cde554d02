#include "csmri/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace csmri {

double relative_error(ComplexVolume const &rec, ComplexVolume const &ref)
{
  require_same_shape(rec.grid(), ref.grid(), "relative_error");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double const a = std::abs(ref[i]);
    double const d = a - std::abs(rec[i]);
    num += d * d;
    den += a * a;
  }
  if (den == 0.0) { fail(ErrorCategory::invalid_argument, "relative_error: reference volume is zero"); }
  return std::sqrt(num / den);
}

namespace {

using Image = std::vector<double>;

// conv2(img, u * v^T, 'same') for a separable kernel: u runs down rows, v along columns.
Image conv2_same(Image const &img, int rows, int cols, std::vector<double> const &u, std::vector<double> const &v)
{
  auto pass = [](Image const &in, int n_lines, int len, std::size_t line_stride, std::size_t step,
                 std::vector<double> const &k) {
    Image out(in.size(), 0.0);
    int const K = int(k.size()), off = K / 2;
    for (int l = 0; l < n_lines; ++l) {
      for (int i = 0; i < len; ++i) {
        double acc = 0.0;
        for (int m = 0; m < K; ++m) {
          int const j = i + off - m;
          if (j >= 0 && j < len) { acc += in[std::size_t(l) * line_stride + std::size_t(j) * step] * k[std::size_t(m)]; }
        }
        out[std::size_t(l) * line_stride + std::size_t(i) * step] = acc;
      }
    }
    return out;
  };
  // along rows (down each column), then along columns (each row)
  Image const a = pass(img, cols, rows, 1, std::size_t(cols), u);
  return pass(a, rows, cols, std::size_t(cols), 1, v);
}

double sigmoid(double x, double alpha) { return 1.0 / (1.0 + std::exp(-alpha * x)); }
double logit(double x, double alpha) { return std::log(x / (1.0 - x)) / alpha; }

} // namespace

double haarpsi_2d(Image const &ref_in, Image const &dist_in, int rows, int cols, HaarPsiConstants const &k)
{
  if (ref_in.size() != std::size_t(rows) * cols || dist_in.size() != ref_in.size()) {
    fail(ErrorCategory::shape_mismatch, "haarpsi: image sizes differ");
  }
  Image ref = ref_in, dist = dist_in;
  if (k.preprocess) {
    std::vector<double> const box{0.5, 0.5};
    auto sub = [&](Image const &img) {
      Image const f = conv2_same(img, rows, cols, box, box);
      int const r2 = (rows + 1) / 2, c2 = (cols + 1) / 2;
      Image out(std::size_t(r2) * c2);
      for (int r = 0; r < r2; ++r) {
        for (int c = 0; c < c2; ++c) { out[std::size_t(r) * c2 + c] = f[std::size_t(2 * r) * cols + 2 * c]; }
      }
      return out;
    };
    ref = sub(ref);
    dist = sub(dist);
    rows = (rows + 1) / 2;
    cols = (cols + 1) / 2;
  }
  int const S = k.scales;
  // coefficients[orientation][scale]
  auto decompose = [&](Image const &img) {
    std::vector<std::vector<Image>> coeffs(2, std::vector<Image>(std::size_t(S)));
    for (int s = 1; s <= S; ++s) {
      int const K = 1 << s;
      double const w = std::ldexp(1.0, -s);
      std::vector<double> signed_k(static_cast<std::size_t>(K)), flat(static_cast<std::size_t>(K), 1.0);
      for (int m = 0; m < K; ++m) { signed_k[std::size_t(m)] = m < K / 2 ? -w : w; }
      coeffs[0][std::size_t(s - 1)] = conv2_same(img, rows, cols, signed_k, flat);
      coeffs[1][std::size_t(s - 1)] = conv2_same(img, rows, cols, flat, signed_k);
    }
    return coeffs;
  };
  auto const cr = decompose(ref);
  auto const cd = decompose(dist);
  double num = 0.0, den = 0.0;
  std::size_t const n = ref.size();
  for (int o = 0; o < 2; ++o) {
    for (std::size_t i = 0; i < n; ++i) {
      double const w = std::max(std::abs(cr[std::size_t(o)][std::size_t(S - 1)][i]), std::abs(cd[std::size_t(o)][std::size_t(S - 1)][i]));
      double local = 0.0;
      for (int s = 0; s < 2; ++s) {
        double const a = std::abs(cr[std::size_t(o)][std::size_t(s)][i]);
        double const b = std::abs(cd[std::size_t(o)][std::size_t(s)][i]);
        local += (2.0 * a * b + k.c) / (a * a + b * b + k.c);
      }
      local /= 2.0;
      num += sigmoid(local, k.alpha) * w;
      den += w;
    }
  }
  if (den == 0.0) { return 1.0; } // both images flat and zero after padding
  double const l = logit(num / den, k.alpha);
  return l * l;
}

double haarpsi(ComplexVolume const &rec, ComplexVolume const &ref, Axis slice_axis, HaarPsiConstants const &k)
{
  require_same_shape(rec.grid(), ref.grid(), "haarpsi");
  double const peak = std::max(max_abs(rec.span()), max_abs(ref.span()));
  if (peak == 0.0) { fail(ErrorCategory::invalid_argument, "haarpsi: both volumes are zero"); }
  double const scale = 255.0 / peak;
  auto const d = ref.grid().dims();
  int const a = int(slice_axis);
  // plane axes: rows = slower axis, cols = faster axis
  int const fa = a == 0 ? 1 : 0, sa = a == 2 ? 1 : 2;
  int const rows = d[std::size_t(sa)], cols = d[std::size_t(fa)];
  double total = 0.0;
  Image ir(std::size_t(rows) * cols), id(ir.size());
  for (int s = 0; s < d[std::size_t(a)]; ++s) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        std::array<int, 3> p{};
        p[std::size_t(a)] = s;
        p[std::size_t(sa)] = r;
        p[std::size_t(fa)] = c;
        std::size_t const i = ref.index(p[0], p[1], p[2]);
        ir[std::size_t(r) * cols + c] = std::abs(ref[i]) * scale;
        id[std::size_t(r) * cols + c] = std::abs(rec[i]) * scale;
      }
    }
    total += haarpsi_2d(ir, id, rows, cols, k);
  }
  return total / d[std::size_t(a)];
}

Point3 voxel_to_mm(Grid3 const &g, double i, double j, double k)
{
  return {(i - g.nx / 2) * g.spacing[0], (j - g.ny / 2) * g.spacing[1], (k - g.nz / 2) * g.spacing[2]};
}

double sample_magnitude(ComplexVolume const &v, Point3 const &mm)
{
  auto const &g = v.grid();
  auto const d = g.dims();
  std::array<double, 3> u{};
  std::array<int, 3> i0{};
  for (int a = 0; a < 3; ++a) {
    double const p = mm[std::size_t(a)] / g.spacing[std::size_t(a)] + d[std::size_t(a)] / 2;
    i0[std::size_t(a)] = int(std::floor(p));
    u[std::size_t(a)] = p - i0[std::size_t(a)];
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    std::array<int, 3> q{i0[0] + (c & 1), i0[1] + ((c >> 1) & 1), i0[2] + ((c >> 2) & 1)};
    double w = 1.0;
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      w *= ((c >> a) & 1) ? u[std::size_t(a)] : 1.0 - u[std::size_t(a)];
      inside = inside && q[std::size_t(a)] >= 0 && q[std::size_t(a)] < d[std::size_t(a)];
    }
    if (inside && w != 0.0) { acc += w * std::abs(v(q[0], q[1], q[2])); }
  }
  return acc;
}

namespace {

Point3 sub(Point3 a, Point3 b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(Point3 a, Point3 b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Point3 cross(Point3 a, Point3 b)
{
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Point3 unit(Point3 a)
{
  double const n = std::sqrt(dot(a, a));
  return {a[0] / n, a[1] / n, a[2] / n};
}

} // namespace

VesselSharpness vessel_sharpness(ComplexVolume const &vol, std::vector<Point3> const &centerline, double radius_mm,
                                 int n_profiles, double noise_floor_rel)
{
  if (centerline.size() < 2) { fail(ErrorCategory::invalid_argument, "vessel_sharpness: centerline needs >= 2 points"); }
  if (!(radius_mm > 0.0)) { fail(ErrorCategory::invalid_argument, "vessel_sharpness: radius must be > 0"); }
  if (n_profiles < 1) { fail(ErrorCategory::invalid_argument, "vessel_sharpness: n_profiles must be >= 1"); }
  auto const &g = vol.grid();
  for (auto const &p : centerline) {
    for (int a = 0; a < 3; ++a) {
      double const idx = p[std::size_t(a)] / g.spacing[std::size_t(a)] + g.dims()[std::size_t(a)] / 2;
      if (idx < 0.0 || idx > g.dims()[std::size_t(a)] - 1) {
        fail(ErrorCategory::invalid_argument, "vessel_sharpness: centerline point outside the volume");
      }
    }
  }
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < centerline.size(); ++i) {
    Point3 const d = sub(centerline[i], centerline[i - 1]);
    cum.push_back(cum.back() + std::sqrt(dot(d, d)));
  }
  double const length = cum.back();
  if (length <= 0.0) { fail(ErrorCategory::invalid_argument, "vessel_sharpness: degenerate centerline"); }

  double const h = std::min({g.spacing[0], g.spacing[1], g.spacing[2]});
  double const step = 0.25 * h;
  double const reach = 2.5 * radius_mm;
  int const half = int(std::ceil(reach / step));
  double const floor_abs = noise_floor_rel * max_abs(vol.span());

  VesselSharpness out;
  double sum = 0.0;
  std::size_t seg = 1;
  std::vector<double> prof(std::size_t(2 * half + 1));
  for (int p = 0; p < n_profiles; ++p) {
    double const s = length * (p + 0.5) / n_profiles;
    while (seg + 1 < cum.size() && cum[seg] < s) { ++seg; }
    double const f = (s - cum[seg - 1]) / std::max(cum[seg] - cum[seg - 1], 1e-300);
    Point3 const a = centerline[seg - 1], b = centerline[seg];
    Point3 const c{a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]), a[2] + f * (b[2] - a[2])};
    Point3 const t = unit(sub(b, a));
    Point3 const helper = std::abs(t[0]) < 0.9 ? Point3{1.0, 0.0, 0.0} : Point3{0.0, 1.0, 0.0};
    Point3 const n1 = unit(cross(t, helper));
    Point3 const n2 = cross(t, n1);
    for (Point3 const &n : {n1, n2}) {
      for (int i = -half; i <= half; ++i) {
        double const o = i * step;
        prof[std::size_t(i + half)] = sample_magnitude(vol, {c[0] + o * n[0], c[1] + o * n[1], c[2] + o * n[2]});
      }
      // center peak within half a radius of the centerline
      double center = 0.0;
      int const core = std::max(0, int(std::floor(0.5 * radius_mm / step)));
      for (int i = -core; i <= core; ++i) { center = std::max(center, prof[std::size_t(i + half)]); }
      if (center <= floor_abs || center == 0.0) {
        ++out.profiles_skipped;
        continue;
      }
      double left = 0.0, right = 0.0;
      for (int i = 0; i < 2 * half; ++i) {
        double const grad = std::abs(prof[std::size_t(i + 1)] - prof[std::size_t(i)]) / 0.25; // per voxel
        if (i < half) {
          left = std::max(left, grad);
        } else {
          right = std::max(right, grad);
        }
      }
      sum += std::clamp(0.5 * (left + right) / center, 0.0, 1.0);
      ++out.profiles_used;
    }
  }
  out.score = out.profiles_used > 0 ? sum / out.profiles_used : 0.0;
  return out;
}

} // namespace csmri
