#include "csmri/transforms.hpp"

#include <algorithm>

namespace csmri {

std::string to_string(TransformKind k)
{
  switch (k) {
  case TransformKind::shearlet2d_slicewise:
    return "shearlet2d-slicewise";
  case TransformKind::shearlet3d:
    return "shearlet3d";
  case TransformKind::wavelet3d:
    return "wavelet3d";
  case TransformKind::grad3d:
    return "grad3d";
  }
  return "unknown";
}

void CoefficientLayout::validate() const
{
  std::size_t next = 0;
  for (auto const &b : bands) {
    if (b.offset != next) { fail(ErrorCategory::internal, "subbands do not tile the coefficient vector"); }
    next += b.size;
  }
  if (next != total) { fail(ErrorCategory::internal, "subband sizes do not sum to the coefficient count"); }
  next = 0;
  for (auto const &r : partition) {
    if (r.begin != next || r.end <= r.begin) { fail(ErrorCategory::internal, "level partition is not monotone"); }
    next = r.end;
  }
  if (next != total) { fail(ErrorCategory::internal, "level partition does not cover all coefficients"); }
}

CoefficientStack TransformSystem::zeros() const { return CoefficientStack{CxVec(size(), cx(0.0, 0.0)), layout_}; }

CoefficientStack TransformSystem::analyze(ComplexVolume const &x) const
{
  CoefficientStack c = zeros();
  analyze_into(x, c.values);
  return c;
}

ComplexVolume TransformSystem::synthesize(CoefficientStack const &c) const
{
  check_stack(c);
  ComplexVolume out(grid_);
  synthesize_from(c.values, out);
  return out;
}

void TransformSystem::analyze_bands(ComplexVolume const &x, BandVisitor const &visit) const
{
  CxVec c(size());
  analyze_into(x, c);
  for (std::size_t b = 0; b < bands().size(); ++b) {
    auto const &info = bands()[b];
    visit(b, std::span<cx const>(c).subspan(info.offset, info.size));
  }
}

void TransformSystem::synthesize_bands(BandProducer const &produce, ComplexVolume &out) const
{
  CxVec c(size());
  for (std::size_t b = 0; b < bands().size(); ++b) {
    auto const &info = bands()[b];
    produce(b, std::span<cx>(c).subspan(info.offset, info.size));
  }
  synthesize_from(c, out);
}

void TransformSystem::gram(ComplexVolume const &x, ComplexVolume &out) const
{
  check_volume(x);
  if (parseval_) {
    out = x;
    return;
  }
  CxVec c(size());
  analyze_into(x, c);
  synthesize_from(c, out);
}

GramOperator TransformSystem::gram_operator() const
{
  if (parseval_) { return {}; }
  return [this](ComplexVolume const &x, ComplexVolume &out) { gram(x, out); };
}

void TransformSystem::check_volume(ComplexVolume const &x) const
{
  require_same_shape(grid_, x.grid(), to_string(kind_).c_str());
}

void TransformSystem::check_stack(CoefficientStack const &c) const
{
  if (c.values.size() != size()) {
    fail(ErrorCategory::shape_mismatch, "coefficient stack has " + std::to_string(c.values.size()) +
                                          " entries, transform expects " + std::to_string(size()));
  }
  if (c.layout && c.layout != layout_ && c.layout->bands.size() != layout_->bands.size()) {
    fail(ErrorCategory::shape_mismatch, "coefficient stack layout does not match the transform");
  }
}

void export_bands(TransformSystem const &t, CoefficientStack const &c, fs::path const &dir)
{
  if (c.values.size() != t.size()) { fail(ErrorCategory::shape_mismatch, "stack does not match transform"); }
  auto const &g = t.grid();
  for (std::size_t b = 0; b < t.bands().size(); ++b) {
    auto const &info = t.bands()[b];
    std::array<double, 3> sp = g.spacing;
    for (int a = 0; a < 3; ++a) { sp[std::size_t(a)] *= double(g.dims()[std::size_t(a)]) / info.shape[std::size_t(a)]; }
    // Subbands smaller than the minimum grid size are padded into a 4^3 corner.
    std::array<int, 3> dims{std::max(info.shape[0], 4), std::max(info.shape[1], 4), std::max(info.shape[2], 4)};
    ComplexVolume v(Grid3(dims[0], dims[1], dims[2], sp));
    auto const src = c.band(b);
    std::size_t i = 0;
    for (int z = 0; z < info.shape[2]; ++z) {
      for (int y = 0; y < info.shape[1]; ++y) {
        for (int x = 0; x < info.shape[0]; ++x) { v(x, y, z) = src[i++]; }
      }
    }
    char name[96];
    std::snprintf(name, sizeof name, "band_%03zu_level%d_scale%d_cone%d_k%d_%d.csvol", b, info.level, info.scale,
                  info.cone, info.shear[0], info.shear[1]);
    save_volume(dir / name, v);
  }
}

} // namespace csmri
