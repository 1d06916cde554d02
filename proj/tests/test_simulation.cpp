#include "doctest.h"
#include "support.hpp"

#include "csmri/simulation.hpp"

#include <cmath>
#include <numbers>

using namespace csmri;

namespace {

double sum_real(ComplexVolume const &v)
{
  double s = 0.0;
  for (auto c : v.data()) { s += c.real(); }
  return s;
}

} // namespace

TEST_SUITE("simulation")
{
  TEST_CASE("empty spec gives the background everywhere")
  {
    PhantomSpec s;
    s.background = 0.2;
    auto const p = make_phantom(Grid3::cube(8, 2.0), s, 1);
    for (auto c : p.volume.data()) { CHECK(c == cx(0.2, 0.0)); }
    CHECK(p.tubes.empty());
  }

  TEST_CASE("sphere volume and tube cross-section")
  {
    Grid3 const g = Grid3::cube(48, 1.0);
    PhantomSpec s;
    s.ellipsoids.push_back({{0, 0, 0}, {12, 12, 12}, {0, 0, 0}, 1.0});
    auto const sphere = make_phantom(g, s, 1);
    // the symmetric edge ramp preserves volume to first order
    double const v = 4.0 / 3.0 * std::numbers::pi * 12 * 12 * 12;
    CHECK(sum_real(sphere.volume) == doctest::Approx(v).epsilon(0.02));

    PhantomSpec t;
    t.tubes.push_back({{{0, 0, -15}, {0, 0, 15}}, 5.0, 1.0});
    auto const tube = make_phantom(g, t, 1);
    double slice = 0.0;
    for (int y = 0; y < 48; ++y) {
      for (int x = 0; x < 48; ++x) { slice += tube.volume(x, y, 24).real(); }
    }
    CHECK(slice == doctest::Approx(std::numbers::pi * 25.0).epsilon(0.03));
  }

  TEST_CASE("rotation moves the long axis")
  {
    Grid3 const g = Grid3::cube(32, 1.0);
    PhantomSpec s;
    s.ellipsoids.push_back({{0, 0, 0}, {12, 3, 3}, {0, 0, 90}, 1.0});
    auto const p = make_phantom(g, s, 1);
    // rotated 90 degrees about z the long axis lies along y
    CHECK(p.volume(16, 16 + 10, 16).real() > 0.9);
    CHECK(p.volume(16 + 10, 16, 16).real() < 0.1);
  }

  TEST_CASE("painter's order: later shapes overwrite earlier ones")
  {
    Grid3 const g = Grid3::cube(32, 1.0);
    PhantomSpec s;
    s.ellipsoids.push_back({{0, 0, 0}, {10, 10, 10}, {0, 0, 0}, 0.3});
    s.ellipsoids.push_back({{0, 0, 0}, {4, 4, 4}, {0, 0, 0}, 0.9});
    auto const p = make_phantom(g, s, 1);
    CHECK(p.volume(16, 16, 16).real() == doctest::Approx(0.9));
    CHECK(p.volume(16 + 7, 16, 16).real() == doctest::Approx(0.3));
  }

  TEST_CASE("geometry outside the field of view is rejected")
  {
    PhantomSpec s;
    s.ellipsoids.push_back({{0, 0, 0}, {20, 5, 5}, {0, 0, 0}, 1.0});
    CHECK_THROWS_AS(make_phantom(Grid3::cube(32, 1.0), s, 1), Error);
    PhantomSpec t;
    t.tubes.push_back({{{0, 0, 0}, {0, 0, 15}}, 2.0, 1.0});
    CHECK_THROWS_AS(make_phantom(Grid3::cube(32, 1.0), t, 1), Error);
  }

  TEST_CASE("default phantom fits the desk grids and is seeded")
  {
    auto const a = make_phantom(Grid3::cube(32, 3.0), default_phantom_spec(), 4);
    auto const b = make_phantom(Grid3::cube(32, 3.0), default_phantom_spec(), 4);
    auto const c = make_phantom(Grid3::cube(32, 3.0), default_phantom_spec(), 5);
    CHECK(a.volume.data() == b.volume.data());
    CHECK(a.volume.data() != c.volume.data());
    CHECK(a.tubes.size() == 3);
    double mx = 0.0, mn = 1.0;
    for (auto v : a.volume.data()) {
      mx = std::max(mx, v.real());
      mn = std::min(mn, v.real());
      CHECK(v.imag() == 0.0);
    }
    CHECK(mx <= 1.0);
    CHECK(mn >= 0.0);
    CHECK(mx > 0.8);
    CHECK_NOTHROW(make_phantom(Grid3::cube(64, 1.5), default_phantom_spec(), 4));
  }

  TEST_CASE("phantom spec text round trip and errors")
  {
    auto const s = default_phantom_spec();
    auto const back = parse_phantom_spec(format_phantom_spec(s));
    REQUIRE(back.ellipsoids.size() == s.ellipsoids.size());
    REQUIRE(back.tubes.size() == s.tubes.size());
    CHECK(back.ellipsoids[2].rotation_deg == s.ellipsoids[2].rotation_deg);
    CHECK(back.tubes[0].centerline == s.tubes[0].centerline);
    CHECK(back.texture == s.texture);
    CHECK_THROWS_AS(parse_phantom_spec("ellipsoid 1 2 3\n"), Error);
    CHECK_THROWS_AS(parse_phantom_spec("cube 1 2 3\n"), Error);
    CHECK_THROWS_AS(parse_phantom_spec("tube 2 1 0 0 0\n"), Error);
  }

  TEST_CASE("coil maps: normalized, smooth, seeded")
  {
    Grid3 const g = Grid3::cube(16, 6.0);
    auto const S = make_coils(g, 8, 3);
    REQUIRE(S.n_coils() == 8);
    for (std::size_t i = 0; i < g.voxels(); ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < 8; ++c) { s += std::norm(S[c][i]); }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
    // neighbouring voxels differ little relative to the map scale
    double worst = 0.0;
    for (std::size_t c = 0; c < 8; ++c) {
      for (int z = 0; z < 16; ++z) {
        for (int y = 0; y < 16; ++y) {
          for (int x = 0; x + 1 < 16; ++x) { worst = std::max(worst, std::abs(S[c](x + 1, y, z) - S[c](x, y, z))); }
        }
      }
    }
    CHECK(worst < 0.25);
    auto const again = make_coils(g, 8, 3);
    CHECK(again[5].data() == S[5].data());
    CHECK(make_coils(g, 8, 4)[5].data() != S[5].data());
    // one coil: unit magnitude wherever the coil is in its support
    auto const one = make_coils(g, 1, 3);
    for (std::size_t i = 0; i < g.voxels(); ++i) {
      if (one.support()[i]) { CHECK(std::abs(one[0][i]) == doctest::Approx(1.0)); }
    }
    CHECK_THROWS_AS(make_coils(g, 0, 1), Error);
  }

  TEST_CASE("noise level follows the SNR definition")
  {
    auto t = std::make_shared<Trajectory const>(generate_rpe(32, 32, 8, 32, AngleScheme::uniform));
    auto clean = zero_samples(t, 2);
    for (auto &c : clean.coils) {
      for (std::size_t i = 0; i < c.size(); ++i) { c[i] = cx(std::cos(0.1 * double(i)), 1.0); }
    }
    double const sigma = noise_sigma_for_snr(clean, 20.0);
    double const rms = clean.norm() / std::sqrt(double(2 * clean.n_samples()));
    CHECK(sigma == doctest::Approx(rms / (std::sqrt(2.0) * 10.0)));

    auto const noisy = add_noise(clean, sigma, 9);
    double s2 = 0.0, n = 0.0;
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < clean.n_samples(); ++i) {
        cx const e = noisy.coils[c][i] - clean.coils[c][i];
        s2 += e.real() * e.real() + e.imag() * e.imag();
        n += 2.0;
      }
    }
    CHECK(std::sqrt(s2 / n) == doctest::Approx(sigma).epsilon(0.03));
    // realized SNR
    KSpaceSamples diff = noisy;
    diff -= clean;
    CHECK(20.0 * std::log10(clean.norm() / diff.norm()) == doctest::Approx(20.0).epsilon(0.02));
    CHECK(add_noise(clean, sigma, 9).coils[1] == noisy.coils[1]);
    CHECK(add_noise(clean, 0.0, 9).coils[0] == clean.coils[0]);
    CHECK_THROWS_AS(add_noise(clean, -1.0, 9), Error);
  }

  TEST_CASE("simulate_acquisition is the forward model plus noise")
  {
    Grid3 const g = Grid3::cube(16, 6.0);
    auto t = std::make_shared<Trajectory const>(generate_rpe(16, 16, 4, 16, AngleScheme::uniform));
    EncodingOperator E(make_coils(g, 2, 1), t);
    auto const x = csmri::test::random_volume(g, 2);
    auto const y0 = simulate_acquisition(x, E, 0.0, 1);
    auto const ref = E.forward(x);
    CHECK(y0.coils == ref.coils);
    auto const y1 = simulate_acquisition(x, E, 0.1, 1);
    CHECK(y1.coils == add_noise(ref, 0.1, 1).coils);
  }

  TEST_CASE("centerline file round trip")
  {
    auto const s = default_phantom_spec();
    auto const back = parse_centerlines(format_centerlines(s.tubes));
    REQUIRE(back.size() == s.tubes.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].radius_mm == s.tubes[i].radius_mm);
      CHECK(back[i].centerline == s.tubes[i].centerline);
    }
    CHECK_THROWS_AS(parse_centerlines("tube 3 2\n0 0 0\n"), Error);
    CHECK_THROWS_AS(parse_centerlines("pipe 3 1\n0 0 0\n"), Error);
  }
}
