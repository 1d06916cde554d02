#include "doctest.h"
#include "support.hpp"

#include "csmri/transforms.hpp"

#include <cmath>
#include <filesystem>

using namespace csmri;
using csmri::test::random_vec;
using csmri::test::random_volume;

namespace {

double adjoint_gap(TransformSystem const &t, std::uint64_t seed)
{
  auto const x = random_volume(t.grid(), seed);
  auto c = t.zeros();
  c.values = random_vec(t.size(), seed + 7);
  auto const ax = t.analyze(x);
  auto const sc = t.synthesize(c);
  return std::abs(inner_product(ax.values, c.values) - inner_product(x, sc)) / (norm2(x) * norm2(c.values));
}

void check_partition(TransformSystem const &t)
{
  std::size_t next = 0;
  int level = -1;
  for (auto const &r : t.level_partition()) {
    CHECK(r.begin == next);
    CHECK(r.end > r.begin);
    CHECK(r.level > level);
    level = r.level;
    next = r.end;
  }
  CHECK(next == t.size());
}

} // namespace

TEST_SUITE("transforms")
{
  TEST_CASE("meyer auxiliary and shear counts")
  {
    CHECK(meyer_aux(0.0) == 0.0);
    CHECK(meyer_aux(1.0) == 1.0);
    CHECK(meyer_aux(0.5) == doctest::Approx(0.5));
    for (double t = 0.0; t <= 1.0; t += 0.01) { CHECK(meyer_aux(t) + meyer_aux(1.0 - t) == doctest::Approx(1.0)); }
    CHECK(shears_per_axis(0) == 3);
    CHECK(shears_per_axis(1) == 5);
    CHECK(shears_per_axis(2) == 5);
    CHECK(shears_per_axis(3) == 7);
    CHECK(shears_per_axis(4) == 9);
  }

  TEST_CASE("2D shearlet band counts")
  {
    auto const t = build_shearlet(Grid3(64, 64, 4), 2, ShearletDim::slicewise2d, Axis::z);
    // low-pass + 2 cones x 3 shears (j=0) + 2 cones x 5 shears (j=1)
    CHECK(t->bands().size() == 1 + 6 + 10);
    auto const &p = t->level_partition();
    REQUIRE(p.size() == 3);
    std::size_t const band = 64 * 64 * 4;
    CHECK(p[0].size() == band);
    CHECK(p[1].size() == 6 * band);
    CHECK(p[2].size() == 10 * band);
    auto const t3 = build_shearlet(Grid3(8, 64, 64), 3, ShearletDim::slicewise2d, Axis::x);
    std::size_t per_level[3] = {0, 0, 0};
    for (auto const &b : t3->bands()) {
      if (b.level > 0) { per_level[b.level - 1]++; }
    }
    CHECK(per_level[0] == 2 * 3);
    CHECK(per_level[1] == 2 * 5);
    CHECK(per_level[2] == 2 * 5);
    check_partition(*t3);
  }

  TEST_CASE("3D shearlet band counts")
  {
    auto const t = build_shearlet(Grid3::cube(32), 2, ShearletDim::full3d);
    int at_j0 = 0;
    for (auto const &b : t->bands()) { at_j0 += b.scale == 0; }
    CHECK(at_j0 == 27);
    CHECK(t->bands().size() == 1 + 27 + 75);
    check_partition(*t);
  }

  TEST_CASE("shearlet dimension errors")
  {
    CHECK_THROWS_AS(build_shearlet(Grid3(32, 32, 16), 2, ShearletDim::full3d), Error);
    CHECK_THROWS_AS(build_shearlet(Grid3::cube(16), 1, ShearletDim::full3d), Error);
    CHECK_THROWS_AS(build_shearlet(Grid3::cube(48), 2, ShearletDim::full3d), Error);
    CHECK_THROWS_AS(build_shearlet(Grid3::cube(32), 5, ShearletDim::full3d), Error);
    CHECK_THROWS_AS(build_shearlet(Grid3::cube(32), 0, ShearletDim::full3d), Error);
    CHECK_THROWS_AS(build_shearlet(Grid3(24, 32, 8), 2, ShearletDim::slicewise2d, Axis::z), Error);
    CHECK_NOTHROW(build_shearlet(Grid3(24, 32, 16), 2, ShearletDim::slicewise2d, Axis::x));
    try {
      build_shearlet(Grid3::cube(32), 5, ShearletDim::full3d);
    } catch (Error const &e) {
      CHECK(std::string(e.what()).find("2^(J+1)") != std::string::npos);
    }
  }

  TEST_CASE("shearlet filters tile frequency space")
  {
    for (auto const &t : {build_shearlet(Grid3::cube(32), 2, ShearletDim::full3d),
                          build_shearlet(Grid3(32, 16, 4), 2, ShearletDim::slicewise2d, Axis::z)}) {
      for (double e : shearlet_filter_energy(*t)) { CHECK(e == doctest::Approx(1.0).epsilon(1e-12)); }
    }
  }

  TEST_CASE("shearlet Parseval and round trip")
  {
    auto const t3 = build_shearlet(Grid3::cube(32), 2, ShearletDim::full3d);
    auto const x = random_volume(t3->grid(), 1);
    auto const c = t3->analyze(x);
    CHECK(std::abs(norm2(c.values) / norm2(x) - 1.0) < 1e-6);
    CHECK(test::rel_diff(t3->synthesize(c).span(), x.span()) < 1e-6);

    for (Axis ax : {Axis::x, Axis::y, Axis::z}) {
      auto const t2 = build_shearlet(Grid3(16, 16, 16), 2, ShearletDim::slicewise2d, ax);
      for (std::uint64_t s = 0; s < 10; ++s) {
        auto const v = random_volume(t2->grid(), 100 + s);
        auto const cv = t2->analyze(v);
        CHECK(std::abs(norm2(cv.values) / norm2(v) - 1.0) < 1e-6);
        CHECK(test::rel_diff(t2->synthesize(cv).span(), v.span()) < 1e-6);
      }
    }
  }

  TEST_CASE("slicewise shearlets act on planes independently")
  {
    auto const t2 = build_shearlet(Grid3(16, 16, 8), 2, ShearletDim::slicewise2d, Axis::z);
    ComplexVolume x(t2->grid());
    for (int y = 0; y < 16; ++y) {
      for (int i = 0; i < 16; ++i) { x(i, y, 3) = cx(double(i * y % 5), 1.0); }
    }
    auto const c = t2->analyze(x);
    for (std::size_t b = 0; b < t2->bands().size(); ++b) {
      auto const band = c.band(b);
      for (std::size_t i = 0; i < band.size(); ++i) {
        if (i / 256 != 3) { CHECK(std::abs(band[i]) < 1e-12); }
      }
    }
  }

  TEST_CASE("adjoint identity for every kind")
  {
    std::vector<std::unique_ptr<TransformSystem>> ts;
    ts.push_back(build_shearlet(Grid3::cube(32), 2, ShearletDim::full3d));
    ts.push_back(build_shearlet(Grid3(16, 16, 8), 2, ShearletDim::slicewise2d, Axis::z));
    ts.push_back(build_wavelet3d(Grid3::cube(32), 3));
    ts.push_back(build_wavelet3d(Grid3(16, 8, 12), 2));
    ts.push_back(build_grad3d(Grid3(12, 10, 6)));
    for (auto const &t : ts) {
      for (std::uint64_t s = 0; s < 3; ++s) { CHECK(adjoint_gap(*t, s) < 1e-8); }
    }
  }

  TEST_CASE("zero in, zero out")
  {
    auto const w = build_wavelet3d(Grid3::cube(16), 2);
    CHECK(norm2(w->analyze(ComplexVolume(w->grid())).values) == 0.0);
    CHECK(norm2(w->synthesize(w->zeros())) == 0.0);
    auto const s = build_shearlet(Grid3::cube(32), 2, ShearletDim::full3d);
    CHECK(norm2(s->synthesize(s->zeros())) == 0.0);
  }

  TEST_CASE("wavelet perfect reconstruction and layout")
  {
    auto const w = build_wavelet3d(Grid3::cube(32), 3);
    auto const &p = w->level_partition();
    REQUIRE(p.size() == 4);
    CHECK(p[0].size() == 64);
    CHECK(p[1].size() == 7 * 64);
    CHECK(p[2].size() == 7 * 512);
    CHECK(p[3].size() == 7 * 4096);
    for (std::uint64_t s = 0; s < 5; ++s) {
      auto const x = random_volume(w->grid(), s);
      auto const c = w->analyze(x);
      CHECK(std::abs(norm2(c.values) - norm2(x)) / norm2(x) < 1e-12);
      CHECK(test::rel_diff(w->synthesize(c).span(), x.span()) < 1e-10);
    }
    auto const w2 = build_wavelet3d(Grid3(16, 8, 12), 2);
    auto const x = random_volume(w2->grid(), 3);
    CHECK(test::rel_diff(w2->synthesize(w2->analyze(x)).span(), x.span()) < 1e-10);
    CHECK_THROWS_AS(build_wavelet3d(Grid3(16, 8, 12), 3), Error);
  }

  TEST_CASE("wavelet of a constant lives in the approximation band")
  {
    auto const w = build_wavelet3d(Grid3::cube(16), 2);
    ComplexVolume x(w->grid());
    for (auto &v : x.data()) { v = cx(2.0, -1.0); }
    auto const c = w->analyze(x);
    auto const &p = w->level_partition();
    for (std::size_t i = p[0].end; i < c.size(); ++i) { CHECK(std::abs(c.values[i]) < 1e-12); }
    for (std::size_t i = 0; i < p[0].end; ++i) { CHECK(std::abs(c.values[i]) > 1.0); }
  }

  TEST_CASE("grad3d")
  {
    auto const g = build_grad3d(Grid3(6, 5, 4));
    ComplexVolume x(g->grid());
    for (auto &v : x.data()) { v = cx(3.0, 1.0); }
    for (auto v : g->analyze(x).values) { CHECK(v == cx(0.0, 0.0)); }
    CHECK_FALSE(g->parseval());
    // ramp along y: Dy = 1 except the replicated last row
    for (int z = 0; z < 4; ++z) {
      for (int y = 0; y < 5; ++y) {
        for (int i = 0; i < 6; ++i) { x(i, y, z) = double(y); }
      }
    }
    auto const c = g->analyze(x);
    auto const dy = c.band(1);
    CHECK(dy[x.index(2, 1, 1)] == cx(1.0, 0.0));
    CHECK(dy[x.index(2, 4, 1)] == cx(0.0, 0.0));
    CHECK(norm2(c.band(0)) == 0.0);
    CHECK(norm2(c.band(2)) == 0.0);
  }

  TEST_CASE("Parseval tightness over many random volumes")
  {
    auto const t = build_shearlet(Grid3(32, 32, 4), 3, ShearletDim::slicewise2d, Axis::z);
    for (std::uint64_t s = 0; s < 100; ++s) {
      auto const x = random_volume(t->grid(), 1000 + s, 0.1 + double(s % 7));
      double const r = norm2(t->analyze(x).values) / norm2(x);
      CHECK(r >= 1.0 - 1e-6);
      CHECK(r <= 1.0 + 1e-6);
    }
  }

  TEST_CASE("band streaming agrees with full analysis")
  {
    auto const t = build_shearlet(Grid3::cube(32), 2, ShearletDim::full3d);
    auto const x = random_volume(t->grid(), 4);
    auto const full = t->analyze(x);
    double worst = 0.0;
    t->analyze_bands(x, [&](std::size_t b, std::span<cx const> c) {
      auto const ref = full.band(b);
      for (std::size_t i = 0; i < c.size(); ++i) { worst = std::max(worst, std::abs(c[i] - ref[i])); }
    });
    CHECK(worst == 0.0);
  }

  TEST_CASE("band export")
  {
    auto const dir = std::filesystem::temp_directory_path() / "csmri_band_export";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto const w = build_wavelet3d(Grid3::cube(8), 1);
    export_bands(*w, w->analyze(random_volume(w->grid(), 1)), dir);
    std::size_t n = 0;
    for ([[maybe_unused]] auto const &e : std::filesystem::directory_iterator(dir)) { ++n; }
    CHECK(n == w->bands().size());
    std::filesystem::remove_all(dir);
  }
}
