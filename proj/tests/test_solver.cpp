#include "doctest.h"
#include "support.hpp"

#include "csmri/simulation.hpp"
#include "csmri/solver.hpp"

#include <cmath>
#include <random>

using namespace csmri;
using csmri::test::random_vec;
using csmri::test::random_volume;
using csmri::test::rel_diff;

namespace {

// Small multi-coil radial problem shared by the ADMM tests.
struct Problem
{
  Grid3 grid;
  EncodingOperator E;
  KSpaceSamples y;
  ComplexVolume truth;
};

Problem small_problem(int n, int coils, int lines)
{
  Grid3 const g = Grid3::cube(n, 96.0 / n);
  auto const ph = make_phantom(g, default_phantom_spec(), 11);
  auto t = std::make_shared<Trajectory const>(generate_rpe(n, n, lines, n, AngleScheme::uniform));
  EncodingOperator E(make_coils(g, coils, 5), t);
  auto y = simulate_acquisition(ph.volume, E, 0.0, 1);
  return {g, std::move(E), std::move(y), ph.volume};
}

// Textbook CG, kept apart from the library implementation.
void cg_ref(std::function<CxVec(CxVec const &)> const &A, CxVec const &rhs, CxVec &x, int iters)
{
  auto dot = [](CxVec const &a, CxVec const &b) {
    cx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) { s += std::conj(a[i]) * b[i]; }
    return s;
  };
  CxVec r = A(x);
  for (std::size_t i = 0; i < r.size(); ++i) { r[i] = rhs[i] - r[i]; }
  CxVec p = r;
  double rr = dot(r, r).real();
  for (int k = 0; k < iters && rr > 0.0; ++k) {
    CxVec const Ap = A(p);
    double const alpha = rr / dot(p, Ap).real();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    double const rn = dot(r, r).real();
    for (std::size_t i = 0; i < p.size(); ++i) { p[i] = r[i] + (rn / rr) * p[i]; }
    rr = rn;
  }
}

cx soft(cx z, double t)
{
  double const a = std::abs(z);
  return a > t ? z * ((a - t) / a) : cx(0.0, 0.0);
}

} // namespace

TEST_SUITE("solver")
{
  TEST_CASE("shrink examples")
  {
    cx const z(3.0, 4.0);
    cx const s = shrink(z, 1.0);
    CHECK(s.real() == doctest::Approx(2.4));
    CHECK(s.imag() == doctest::Approx(3.2));
    CHECK(shrink(z, 5.0) == cx(0.0, 0.0));
    CHECK(shrink(z, 6.0) == cx(0.0, 0.0));
    CHECK(shrink(cx(0.0, 0.0), 1.0) == cx(0.0, 0.0));
    CHECK(shrink(z, 0.0) == z);
    CHECK_THROWS_AS(shrink(z, -1.0), Error);
  }

  TEST_CASE("shrink properties on random inputs")
  {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0), t(0.0, 4.0);
    for (int i = 0; i < 2000; ++i) {
      cx const z(u(rng), u(rng));
      double const tau = t(rng);
      cx const s = shrink(z, tau);
      // magnitude drops by exactly tau (or to zero) and the phase is kept
      CHECK(std::abs(s) == doctest::Approx(std::max(std::abs(z) - tau, 0.0)).epsilon(1e-12));
      if (std::abs(s) > 0.0) { CHECK(std::abs(std::arg(s) - std::arg(z)) < 1e-12); }
      // prox optimality: s minimizes tau|d| + |d - z|^2 / 2 against random probes
      double const fs = tau * std::abs(s) + 0.5 * std::norm(s - z);
      cx const probe = s + cx(0.1 * u(rng), 0.1 * u(rng));
      CHECK(fs <= tau * std::abs(probe) + 0.5 * std::norm(probe - z) + 1e-12);
    }
  }

  TEST_CASE("shrink_span matches the scalar kernel")
  {
    auto const z = random_vec(100, 9);
    std::vector<double> tau(100);
    for (std::size_t i = 0; i < tau.size(); ++i) { tau[i] = 0.02 * double(i); }
    CxVec out(100);
    shrink_span(z, tau, out);
    for (std::size_t i = 0; i < z.size(); ++i) { CHECK(out[i] == shrink(z[i], tau[i])); }
  }

  TEST_CASE("update_weights oracle")
  {
    auto layout = std::make_shared<CoefficientLayout>();
    layout->bands = {BandInfo{.level = 0, .offset = 0, .size = 3}};
    CoefficientStack c{CxVec{cx(3.0, 0.0), cx(0.0, 0.0), cx(0.0, 1.0)}, layout};
    std::vector<LevelRange> const part{{0, 0, 3}};
    auto const w = update_weights(c, part, {1.0}, 0.5, {});
    REQUIRE(w.sigma.size() == 3);
    CHECK(w.sigma[0] == doctest::Approx(1.0 / 3.5));
    CHECK(w.sigma[1] == doctest::Approx(2.0));
    CHECK(w.sigma[2] == doctest::Approx(2.0 / 3.0));
    CHECK(w.iteration == 1);
  }

  TEST_CASE("update_weights invariants")
  {
    auto layout = std::make_shared<CoefficientLayout>();
    layout->bands = {BandInfo{.level = 0, .offset = 0, .size = 40}, BandInfo{.level = 1, .offset = 40, .size = 60}};
    CoefficientStack c{random_vec(100, 4), layout};
    std::vector<LevelRange> const part{{0, 0, 40}, {1, 40, 100}};
    std::vector<double> const lam{0.3, 2.0};
    double const nu = 0.1;
    auto const w = update_weights(c, part, lam, nu, {});
    for (std::size_t i = 0; i < 100; ++i) {
      double const l = i < 40 ? lam[0] : lam[1];
      CHECK(w.sigma[i] > 0.0);
      CHECK(w.sigma[i] <= l / nu);
    }
    // homogeneity in lambda
    auto const w3 = update_weights(c, part, {0.9, 6.0}, nu, {});
    for (std::size_t i = 0; i < 100; ++i) { CHECK(w3.sigma[i] == doctest::Approx(3.0 * w.sigma[i])); }
    // zero coefficients give the maximum weight
    CoefficientStack z{CxVec(100), layout};
    auto const wz = update_weights(z, part, lam, nu, {});
    CHECK(wz.sigma[0] == doctest::Approx(lam[0] / nu));
    CHECK(wz.sigma[99] == doctest::Approx(lam[1] / nu));
    CHECK_THROWS_AS(update_weights(c, part, {1.0}, nu, {}), Error);
    CHECK_THROWS_AS(update_weights(c, part, lam, 0.0, {}), Error);
  }

  TEST_CASE("default lambda profile")
  {
    std::vector<LevelRange> const part{{0, 0, 1}, {1, 1, 2}, {2, 2, 3}, {3, 3, 4}};
    auto const l = default_lambda(part);
    REQUIRE(l.size() == 4);
    CHECK(l[1] == doctest::Approx(std::pow(2.0, -0.5)));
    CHECK(l[2] == doctest::Approx(0.5));
    CHECK(l[3] == doctest::Approx(std::pow(2.0, -1.5)));
    CHECK(l[0] == doctest::Approx(0.1 * l[1]));
  }

  TEST_CASE("cg solves a diagonal system")
  {
    std::vector<double> const diag{1.0, 2.0, 4.0};
    LinearOp const A = [&](std::span<cx const> in, std::span<cx> out) {
      for (std::size_t i = 0; i < 3; ++i) { out[i] = diag[i] * in[i]; }
    };
    CxVec rhs{1.0, 1.0, 1.0}, x(3);
    auto const r = cg_solve(A, rhs, x, 10, 1e-12);
    CHECK(r.iterations <= 3);
    CHECK(x[0].real() == doctest::Approx(1.0));
    CHECK(x[1].real() == doctest::Approx(0.5));
    CHECK(x[2].real() == doctest::Approx(0.25));
    // already converged start does no work
    CHECK(cg_solve(A, rhs, x, 10, 1e-6).iterations == 0);
  }

  TEST_CASE("cg converges on random Hermitian positive definite systems")
  {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::size_t const n = 12;
      auto const m = random_vec(n * n, seed);
      // A = M^H M + I
      std::vector<cx> A(n * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          cx s = i == j ? 1.0 : 0.0;
          for (std::size_t k = 0; k < n; ++k) { s += std::conj(m[k * n + i]) * m[k * n + j]; }
          A[i * n + j] = s;
        }
      }
      LinearOp const op = [&](std::span<cx const> in, std::span<cx> out) {
        for (std::size_t i = 0; i < n; ++i) {
          cx s = 0.0;
          for (std::size_t j = 0; j < n; ++j) { s += A[i * n + j] * in[j]; }
          out[i] = s;
        }
      };
      auto const b = random_vec(n, seed + 100);
      CxVec x(n);
      auto const r = cg_solve(op, b, x, 200, 1e-12);
      CHECK(r.residual < 1e-10);
      CxVec Ax(n);
      op(x, Ax);
      CHECK(rel_diff(Ax, b) < 1e-9);
    }
  }

  TEST_CASE("config parse, format and errors")
  {
    auto const c = parse_admm_config("# tuned\nbeta = 20\nmu=2\nlambda_per_level = 0.1, 0.5,0.25\nreweight = false\n"
                                     "slice_axis = z\nmax_outer = 5\nfreeze_after = 2\nvariant = WaveCS\n");
    CHECK(c.beta == 20.0);
    CHECK(c.mu == 2.0);
    CHECK(c.lambda == std::vector<double>{0.1, 0.5, 0.25});
    CHECK_FALSE(c.reweight);
    CHECK(c.slice_axis == Axis::z);
    auto const back = parse_admm_config(format_admm_config(c));
    CHECK(back.beta == c.beta);
    CHECK(back.lambda == c.lambda);
    CHECK(back.max_outer == 5);
    CHECK(back.lambda_scale == c.lambda_scale);
    CHECK(back.l1_weight == c.l1_weight);
    CHECK_THROWS_AS(parse_admm_config("gamma = 1\n"), Error);
    CHECK_THROWS_AS(parse_admm_config("beta = abc\n"), Error);
    CHECK_THROWS_AS(parse_admm_config("beta = -1\n"), Error);
    CHECK_THROWS_AS(parse_admm_config("max_outer = 2\nfreeze_after = 3\n"), Error);
    CHECK_THROWS_AS(parse_admm_config("variant = Foo\n"), Error);
    CHECK_THROWS_AS(parse_admm_config("beta 3\n"), Error);
  }

  TEST_CASE("variant names")
  {
    for (auto v : all_variants()) { CHECK(parse_variant(to_string(v)) == v); }
    CHECK(to_string(Variant::shear3d) == "3DShearCS");
    CHECK_THROWS_AS(parse_variant("3dshear"), Error);
  }

  TEST_CASE("unweighted ADMM matches an independent reference loop per iterate")
  {
    auto const p = small_problem(16, 4, 8);
    AdmmConfig cfg;
    cfg.reweight = false;
    cfg.l1_weight = 0.02;
    cfg.max_outer = 5;
    cfg.freeze_after = 0;
    cfg.inner_tol = 0.0;
    cfg.wavelet_levels = 2;
    auto const T = build_wavelet3d(p.grid, 2);

    std::vector<ComplexVolume> iterates;
    admm_solve(p.y, p.E, *T, cfg, nullptr,
               [&](IterationDiag const &, ComplexVolume const &x, std::span<double const>) { iterates.push_back(x); });
    REQUIRE(iterates.size() == 5);

    // reference: same normalization and start, textbook updates
    double const scale = max_abs(initial_estimate(p.y, p.E).span());
    KSpaceSamples y = p.y;
    y *= cx(1.0 / scale, 0.0);
    auto x = initial_estimate(y, p.E);
    auto d = T->analyze(x).values;
    CxVec b(d.size());
    auto Ehy = p.E.adjoint(y);
    Ehy *= cx(cfg.beta, 0.0);
    auto const A = [&](CxVec const &v) {
      ComplexVolume vol(p.grid, v);
      auto r = p.E.adjoint(p.E.forward(vol));
      CxVec out(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) { out[i] = cfg.beta * r[i] + cfg.mu * v[i]; }
      return out;
    };
    for (int k = 0; k < cfg.max_outer; ++k) {
      auto c = T->zeros();
      for (std::size_t i = 0; i < d.size(); ++i) { c.values[i] = d[i] - b[i]; }
      auto const syn = T->synthesize(c);
      CxVec rhs(x.size());
      for (std::size_t i = 0; i < rhs.size(); ++i) { rhs[i] = Ehy[i] + cfg.mu * syn[i]; }
      cg_ref(A, rhs, x.data(), cfg.inner_iters);
      auto const ax = T->analyze(x).values;
      for (std::size_t i = 0; i < d.size(); ++i) {
        cx const z = ax[i] + b[i];
        d[i] = soft(z, cfg.l1_weight / cfg.mu);
        b[i] = z - d[i];
      }
      ComplexVolume xs = x;
      xs *= cx(scale, 0.0);
      CHECK(rel_diff(iterates[std::size_t(k)].span(), xs.span()) < 1e-9);
    }
  }

  TEST_CASE("reweighting with huge nu and lambda = nu reduces to unit weights")
  {
    auto const p = small_problem(16, 4, 8);
    auto const T = build_wavelet3d(p.grid, 2);
    AdmmConfig u;
    u.reweight = false;
    u.l1_weight = 1.0;
    u.max_outer = 4;
    u.freeze_after = 0;
    u.inner_tol = 0.0;
    auto const ru = admm_solve(p.y, p.E, *T, u, nullptr);

    AdmmConfig w = u;
    w.reweight = true;
    w.freeze_after = 4;
    w.nu_rel = 1e14;
    double const nu = std::stod(ru.metadata.at("nu")) / u.nu_rel * w.nu_rel;
    w.lambda.assign(T->level_partition().size(), nu);
    auto const rw = admm_solve(p.y, p.E, *T, w, nullptr);
    CHECK(rel_diff(rw.volume.span(), ru.volume.span()) < 1e-10);
  }

  TEST_CASE("noiseless fully sampled single coil: data term dominates")
  {
    Grid3 const g = Grid3::cube(32, 3.0);
    auto const ph = make_phantom(g, default_phantom_spec(), 2);
    auto t = std::make_shared<Trajectory const>(cartesian_trajectory(g));
    EncodingOperator E(SensitivityMaps::uniform(g), t, EncodingOptions{2.0, 3.0});
    auto const y = E.forward(ph.volume);
    AdmmConfig cfg;
    cfg.beta = 1000.0;
    cfg.max_outer = 4;
    cfg.freeze_after = 2;
    cfg.lambda_scale = 1e-6;
    auto const T = build_wavelet3d(g, 2);
    auto const r = admm_solve(y, E, *T, cfg, &ph.volume);
    CHECK(relative_error(r.volume, ph.volume) < 0.01);
    CHECK(r.diagnostics.size() == 4);
    CHECK(r.diagnostics.back().rel_err.has_value());
  }

  TEST_CASE("diagnostics: weights freeze, objective finite, CSV layout")
  {
    auto const p = small_problem(32, 2, 4);
    AdmmConfig cfg;
    cfg.max_outer = 6;
    cfg.freeze_after = 3;
    cfg.shearlet_scales = 2;
    auto const T = build_variant_transform(Variant::shear3d, p.grid, cfg);
    std::vector<std::size_t> sigma_sizes;
    auto const r = admm_solve(p.y, p.E, *T, cfg, &p.truth,
                              [&](IterationDiag const &, ComplexVolume const &, std::span<double const> s) {
                                sigma_sizes.push_back(s.size());
                              });
    REQUIRE(r.diagnostics.size() == 6);
    for (auto const &d : r.diagnostics) {
      CHECK(std::isfinite(d.objective));
      CHECK(d.residual >= 0.0);
      if (d.iteration <= 3) {
        CHECK(d.weight_change > 0.0);
      } else {
        CHECK(d.weight_change == 0.0);
      }
    }
    CHECK(sigma_sizes.front() == T->size());
    auto const csv = diagnostics_csv(r);
    CHECK(csv.rfind("iteration,objective,residual,weight_change,rel_err\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK(r.metadata.at("reweight") == "true");
  }

  TEST_CASE("candidate weight tracking matches weights recomputed from the iterates")
  {
    auto const p = small_problem(16, 4, 8);
    AdmmConfig cfg;
    cfg.max_outer = 6;
    cfg.freeze_after = 3;
    cfg.wavelet_levels = 2;
    cfg.lambda_scale = 1e-3;
    auto const T = build_wavelet3d(p.grid, 2);
    auto const plain = admm_solve(p.y, p.E, *T, cfg);
    cfg.track_candidate_weights = true;
    std::vector<ComplexVolume> xs;
    auto const r = admm_solve(p.y, p.E, *T, cfg, nullptr,
                              [&](IterationDiag const &, ComplexVolume const &x, std::span<double const>) {
                                xs.push_back(x);
                              });
    // tracking only observes
    CHECK(r.volume.data() == plain.volume.data());

    double const scale = std::stod(r.metadata.at("data_scale"));
    double const nu = std::stod(r.metadata.at("nu"));
    auto const &part = T->level_partition();
    auto lambda = default_lambda(part);
    for (auto &l : lambda) { l *= cfg.lambda_scale; }
    auto weights = [&](ComplexVolume x) {
      x *= cx(1.0 / scale, 0.0);
      auto const c = T->analyze(x);
      std::vector<double> s(c.size());
      for (std::size_t l = 0; l < part.size(); ++l) {
        for (std::size_t i = part[l].begin; i < part[l].end; ++i) { s[i] = lambda[l] / (std::abs(c.values[i]) + nu); }
      }
      return s;
    };
    REQUIRE(r.diagnostics.size() == 6);
    for (std::size_t k = 1; k < 6; ++k) {
      auto const a = weights(xs[k - 1]), b = weights(xs[k]);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::abs(b[i] - a[i]);
        den += a[i];
      }
      auto const &d = r.diagnostics[k];
      REQUIRE(d.candidate_weight_change.has_value());
      CHECK(*d.candidate_weight_change == doctest::Approx(num / den).epsilon(1e-6));
      if (d.iteration <= 3) {
        CHECK(*d.candidate_weight_change == d.weight_change);
      } else {
        CHECK(d.weight_change == 0.0);
      }
    }
    CHECK(!plain.diagnostics[0].candidate_weight_change.has_value());
  }

  TEST_CASE("divergence guard reports the diverged category")
  {
    auto const p = small_problem(16, 4, 8);
    AdmmConfig cfg;
    cfg.reweight = false;
    cfg.l1_weight = 10.0; // wipes the image, so the residual climbs above its start
    cfg.divergence_factor = 1.01;
    auto const T = build_wavelet3d(p.grid, 2);
    try {
      admm_solve(p.y, p.E, *T, cfg);
      FAIL("expected divergence");
    } catch (Error const &e) {
      CHECK(e.category() == ErrorCategory::diverged);
    }
  }

  TEST_CASE("itSENSE and variant dispatch")
  {
    auto const p = small_problem(16, 4, 8);
    AdmmConfig cfg;
    cfg.itsense_iters = 7;
    cfg.itsense_tol = 0.0;
    auto const r = reconstruct_variant(Variant::itsense, p.y, p.E, cfg, &p.truth);
    CHECK(r.diagnostics.size() == 7);
    CHECK(r.metadata.at("variant") == "itSENSE");
    // CG reduces the data residual monotonically on the normal equations
    CHECK(r.diagnostics.back().residual < r.diagnostics.front().residual);
    cfg.max_outer = 2;
    cfg.freeze_after = 1;
    auto const w = reconstruct_variant(Variant::wavelet, p.y, p.E, cfg);
    CHECK(w.metadata.at("variant") == "WaveCS");
    CHECK(w.metadata.at("reweight") == "false");
    auto const t = reconstruct_variant(Variant::tv, p.y, p.E, cfg);
    CHECK(t.metadata.at("transform") == "grad3d");
  }

  TEST_CASE("lambda count mismatch is rejected")
  {
    auto const p = small_problem(16, 2, 4);
    AdmmConfig cfg;
    cfg.lambda = {1.0, 1.0};
    auto const T = build_wavelet3d(p.grid, 2);
    CHECK_THROWS_AS(admm_solve(p.y, p.E, *T, cfg), Error);
  }
}
