#include "csmri/solver.hpp"

#include "csmri/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace csmri {

std::string to_string(Variant v)
{
  switch (v) {
  case Variant::shear3d:
    return "3DShearCS";
  case Variant::shear2d:
    return "2DShearCS";
  case Variant::wavelet:
    return "WaveCS";
  case Variant::tv:
    return "TV";
  case Variant::itsense:
    return "itSENSE";
  }
  return "?";
}

std::vector<Variant> all_variants()
{
  return {Variant::shear3d, Variant::shear2d, Variant::wavelet, Variant::tv, Variant::itsense};
}

Variant parse_variant(std::string const &name)
{
  for (auto v : all_variants()) {
    if (to_string(v) == name) { return v; }
  }
  fail(ErrorCategory::invalid_argument,
       "unknown variant '" + name + "' (valid: 3DShearCS, 2DShearCS, WaveCS, TV, itSENSE)");
}

void AdmmConfig::validate() const
{
  auto bad = [](std::string const &m) { fail(ErrorCategory::invalid_argument, "solver config: " + m); };
  if (!(beta > 0.0)) { bad("beta must be > 0"); }
  if (!(mu > 0.0)) { bad("mu must be > 0"); }
  if (!(nu_rel > 0.0)) { bad("nu_rel must be > 0"); }
  for (double l : lambda) {
    if (!(l > 0.0)) { bad("every lambda must be > 0"); }
  }
  if (!(lambda_scale > 0.0)) { bad("lambda_scale must be > 0"); }
  if (!(l1_weight > 0.0)) { bad("l1_weight must be > 0"); }
  if (max_outer < 1) { bad("max_outer must be >= 1"); }
  if (freeze_after < 0 || freeze_after > max_outer) { bad("freeze_after must be in [0, max_outer]"); }
  if (inner_iters < 1 || itsense_iters < 1) { bad("iteration budgets must be >= 1"); }
  if (inner_tol < 0.0 || itsense_tol < 0.0) { bad("tolerances must be >= 0"); }
  if (shearlet_scales < 0 || wavelet_levels < 0) { bad("scale counts must be >= 0"); }
  if (!(divergence_factor > 1.0)) { bad("divergence_factor must be > 1"); }
}

namespace {

std::string trim(std::string s)
{
  auto const b = s.find_first_not_of(" \t\r");
  auto const e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double to_double(std::string const &key, std::string const &v)
{
  try {
    std::size_t used = 0;
    double const d = std::stod(v, &used);
    if (used == v.size()) { return d; }
  } catch (std::exception const &) {
  }
  fail(ErrorCategory::invalid_argument, "solver config: '" + key + "' needs a number, got '" + v + "'");
}

int to_int(std::string const &key, std::string const &v)
{
  double const d = to_double(key, v);
  if (d != std::floor(d)) { fail(ErrorCategory::invalid_argument, "solver config: '" + key + "' needs an integer"); }
  return int(d);
}

bool to_bool(std::string const &key, std::string const &v)
{
  if (v == "true" || v == "1" || v == "yes") { return true; }
  if (v == "false" || v == "0" || v == "no") { return false; }
  fail(ErrorCategory::invalid_argument, "solver config: '" + key + "' needs true/false");
}

} // namespace

AdmmConfig parse_admm_config(std::string const &text, AdmmConfig cfg)
{
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) { line.resize(h); }
    line = trim(line);
    if (line.empty()) { continue; }
    auto const eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCategory::invalid_argument, "solver config line " + std::to_string(n) + ": expected key = value");
    }
    std::string const key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key == "beta") {
      cfg.beta = to_double(key, val);
    } else if (key == "mu") {
      cfg.mu = to_double(key, val);
    } else if (key == "nu_rel") {
      cfg.nu_rel = to_double(key, val);
    } else if (key == "lambda_per_level") {
      cfg.lambda.clear();
      std::istringstream ls(val);
      std::string item;
      while (std::getline(ls, item, ',')) {
        if (!trim(item).empty()) { cfg.lambda.push_back(to_double(key, trim(item))); }
      }
    } else if (key == "lambda_scale") {
      cfg.lambda_scale = to_double(key, val);
    } else if (key == "l1_weight") {
      cfg.l1_weight = to_double(key, val);
    } else if (key == "max_outer") {
      cfg.max_outer = to_int(key, val);
    } else if (key == "freeze_after") {
      cfg.freeze_after = to_int(key, val);
    } else if (key == "reweight") {
      cfg.reweight = to_bool(key, val);
    } else if (key == "track_candidate_weights") {
      cfg.track_candidate_weights = to_bool(key, val);
    } else if (key == "inner_iters") {
      cfg.inner_iters = to_int(key, val);
    } else if (key == "inner_tol") {
      cfg.inner_tol = to_double(key, val);
    } else if (key == "itsense_iters") {
      cfg.itsense_iters = to_int(key, val);
    } else if (key == "itsense_tol") {
      cfg.itsense_tol = to_double(key, val);
    } else if (key == "shearlet_scales") {
      cfg.shearlet_scales = to_int(key, val);
    } else if (key == "wavelet_levels") {
      cfg.wavelet_levels = to_int(key, val);
    } else if (key == "slice_axis") {
      cfg.slice_axis = parse_axis(val);
    } else if (key == "divergence_factor") {
      cfg.divergence_factor = to_double(key, val);
    } else if (key == "variant") {
      parse_variant(val); // validated here, selected by the caller
    } else {
      fail(ErrorCategory::invalid_argument, "solver config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

AdmmConfig load_admm_config(fs::path const &path, AdmmConfig base) { return parse_admm_config(read_file(path), base); }

std::string format_admm_config(AdmmConfig const &c)
{
  std::ostringstream o;
  o << "beta = " << format_double(c.beta) << "\nmu = " << format_double(c.mu) << "\nnu_rel = " << format_double(c.nu_rel)
    << "\n";
  if (!c.lambda.empty()) {
    o << "lambda_per_level = ";
    for (std::size_t i = 0; i < c.lambda.size(); ++i) { o << (i ? "," : "") << format_double(c.lambda[i]); }
    o << "\n";
  }
  o << "lambda_scale = " << format_double(c.lambda_scale) << "\nl1_weight = " << format_double(c.l1_weight)
    << "\nmax_outer = " << c.max_outer << "\nfreeze_after = " << c.freeze_after << "\nreweight = "
    << (c.reweight ? "true" : "false") << "\ninner_iters = " << c.inner_iters << "\ninner_tol = "
    << format_double(c.inner_tol) << "\nitsense_iters = " << c.itsense_iters << "\nitsense_tol = "
    << format_double(c.itsense_tol) << "\nshearlet_scales = " << c.shearlet_scales << "\nwavelet_levels = "
    << c.wavelet_levels << "\nslice_axis = " << "xyz"[int(c.slice_axis)] << "\ndivergence_factor = "
    << format_double(c.divergence_factor) << "\ntrack_candidate_weights = "
    << (c.track_candidate_weights ? "true" : "false") << "\n";
  return o.str();
}

std::vector<double> default_lambda(std::vector<LevelRange> const &partition)
{
  std::vector<double> l;
  for (auto const &r : partition) { l.push_back(std::pow(2.0, -0.5 * r.level)); }
  if (!partition.empty() && partition.front().level == 0) {
    l.front() = 0.1 * (partition.size() > 1 ? l[1] : std::pow(2.0, -0.5));
  }
  return l;
}

void update_weights_span(std::span<cx const> c, double lambda, double nu, std::span<double> sigma)
{
  for (std::size_t i = 0; i < c.size(); ++i) { sigma[i] = lambda / (std::abs(c[i]) + nu); }
}

WeightState update_weights(CoefficientStack const &c, std::vector<LevelRange> const &partition,
                           std::vector<double> const &lambda, double nu, WeightState const &prev)
{
  if (!(nu > 0.0)) { fail(ErrorCategory::invalid_argument, "update_weights: nu must be > 0"); }
  if (lambda.size() != partition.size()) {
    fail(ErrorCategory::invalid_argument, "update_weights: need one lambda per level (" +
                                            std::to_string(partition.size()) + "), got " +
                                            std::to_string(lambda.size()));
  }
  if (partition.empty() || partition.back().end != c.size()) {
    fail(ErrorCategory::shape_mismatch, "update_weights: partition does not match the coefficient stack");
  }
  WeightState w;
  w.sigma.resize(c.size());
  w.iteration = prev.iteration + 1;
  std::span<cx const> const all(c.values);
  for (std::size_t j = 0; j < partition.size(); ++j) {
    auto const &r = partition[j];
    update_weights_span(all.subspan(r.begin, r.size()), lambda[j], nu,
                        std::span<double>(w.sigma).subspan(r.begin, r.size()));
  }
  return w;
}

cx shrink(cx z, double tau)
{
  if (tau < 0.0) { fail(ErrorCategory::invalid_argument, "shrink: negative threshold"); }
  double const a = std::abs(z);
  if (a <= tau || a == 0.0) { return cx(0.0, 0.0); }
  return z * ((a - tau) / a);
}

void shrink_span(std::span<cx const> z, std::span<double const> tau, std::span<cx> out)
{
  for (std::size_t i = 0; i < z.size(); ++i) { out[i] = shrink(z[i], tau[i]); }
}

CoefficientStack shrink(CoefficientStack const &z, std::vector<double> const &tau)
{
  if (tau.size() != z.size()) { fail(ErrorCategory::shape_mismatch, "shrink: threshold count differs"); }
  CoefficientStack out{CxVec(z.size()), z.layout};
  shrink_span(z.values, tau, out.values);
  return out;
}

CgResult cg_solve(LinearOp const &A, std::span<cx const> rhs, std::span<cx> x, int iters, double tol,
                  CgObserver const &observer)
{
  std::size_t const n = rhs.size();
  if (x.size() != n) { fail(ErrorCategory::shape_mismatch, "cg_solve: x and rhs differ in length"); }
  CgResult res;
  double const bnorm = norm2(rhs);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), cx(0.0, 0.0));
    return res;
  }
  CxVec r(n), p(n), Ap(n);
  A(x, Ap);
  for (std::size_t i = 0; i < n; ++i) { r[i] = rhs[i] - Ap[i]; }
  double rr = std::real(inner_product(r, r));
  res.residual = std::sqrt(rr) / bnorm;
  if (res.residual <= tol) { return res; }
  p = r;
  for (int k = 0; k < iters; ++k) {
    A(p, Ap);
    double const pAp = std::real(inner_product(p, Ap));
    if (!(pAp > 0.0)) { break; }
    double const alpha = rr / pAp;
    axpy(alpha, p, x);
    axpy(-alpha, Ap, r);
    double const rr_new = std::real(inner_product(r, r));
    res.iterations = k + 1;
    res.residual = std::sqrt(rr_new) / bnorm;
    if (observer) { observer(k + 1, x); }
    if (res.residual <= tol) { break; }
    double const beta = rr_new / rr;
    for (std::size_t i = 0; i < n; ++i) { p[i] = r[i] + beta * p[i]; }
    rr = rr_new;
  }
  return res;
}

std::string diagnostics_csv(ReconResult const &r)
{
  std::string out = "iteration,objective,residual,weight_change,rel_err\n";
  for (auto const &d : r.diagnostics) {
    out += std::to_string(d.iteration) + "," + format_double(d.objective) + "," + format_double(d.residual) + "," +
           format_double(d.weight_change) + "," + (d.rel_err ? format_double(*d.rel_err) : std::string()) + "\n";
  }
  return out;
}

namespace {

double residual_norm(KSpaceSamples const &y, EncodingOperator const &E, ComplexVolume const &x)
{
  auto r = E.forward(x);
  r -= y;
  return r.norm();
}

} // namespace

ComplexVolume initial_estimate(KSpaceSamples const &y, EncodingOperator const &E)
{
  auto x = E.adjoint(y, true).volume;
  auto const ex = E.forward(x);
  double const den = ex.norm() * ex.norm();
  if (den > 0.0) { x *= inner_product(ex, y) / den; }
  return x;
}

ReconResult admm_solve(KSpaceSamples const &y_in, EncodingOperator const &E, TransformSystem const &T,
                       AdmmConfig const &cfg, ComplexVolume const *reference, IterationObserver const &observer)
{
  cfg.validate();
  require_same_shape(E.grid(), T.grid(), "admm_solve");
  auto const &partition = T.level_partition();
  std::vector<double> lambda = cfg.lambda;
  if (lambda.empty()) {
    lambda = default_lambda(partition);
    for (auto &l : lambda) { l *= cfg.lambda_scale; }
  }
  if (lambda.size() != partition.size()) {
    fail(ErrorCategory::invalid_argument, "solver config: lambda_per_level has " + std::to_string(lambda.size()) +
                                            " entries, transform has " + std::to_string(partition.size()) + " levels");
  }
  // level id -> lambda for every band
  std::vector<double> band_lambda(T.bands().size());
  for (std::size_t b = 0; b < T.bands().size(); ++b) {
    auto const &info = T.bands()[b];
    auto it = std::find_if(partition.begin(), partition.end(),
                           [&](LevelRange const &r) { return info.offset >= r.begin && info.offset < r.end; });
    band_lambda[b] = lambda[std::size_t(it - partition.begin())];
  }

  ReconResult result;
  double const scale = max_abs(initial_estimate(y_in, E).span());
  if (scale == 0.0) {
    result.volume = ComplexVolume(E.grid());
    result.metadata["note"] = "zero data";
    return result;
  }
  KSpaceSamples y = y_in;
  y *= cx(1.0 / scale, 0.0);
  double const beta = cfg.beta, mu = cfg.mu;

  ComplexVolume x = initial_estimate(y, E);
  ComplexVolume Ehy = E.adjoint(y);
  Ehy *= beta;
  GramOperator const gram = T.gram_operator();
  Grid3 const grid = E.grid();
  LinearOp const A = [&](std::span<cx const> in, std::span<cx> out) {
    ComplexVolume v(grid, CxVec(in.begin(), in.end()));
    auto const r = E.normal(v, beta, mu, gram);
    std::copy(r.data().begin(), r.data().end(), out.begin());
  };

  std::size_t const N = T.size();
  CxVec d(N), b(N, cx(0.0, 0.0));
  double cmax = 0.0;
  T.analyze_bands(x, [&](std::size_t band, std::span<cx const> c) {
    std::copy(c.begin(), c.end(), d.begin() + std::ptrdiff_t(T.bands()[band].offset));
    cmax = std::max(cmax, max_abs(c));
  });
  double const nu = cfg.nu_rel * (cmax > 0.0 ? cmax : 1.0);
  std::vector<double> sigma;
  if (cfg.reweight) {
    sigma.resize(N);
    for (std::size_t band = 0; band < T.bands().size(); ++band) {
      auto const &info = T.bands()[band];
      update_weights_span(std::span<cx const>(d).subspan(info.offset, info.size), band_lambda[band], nu,
                          std::span<double>(sigma).subspan(info.offset, info.size));
    }
  }

  result.metadata["transform"] = to_string(T.kind());
  result.metadata["beta"] = format_double(beta);
  result.metadata["mu"] = format_double(mu);
  result.metadata["nu"] = format_double(nu);
  result.metadata["data_scale"] = format_double(scale);
  result.metadata["reweight"] = cfg.reweight ? "true" : "false";
  result.metadata["init"] = "density-weighted adjoint";
  {
    std::string l;
    for (std::size_t i = 0; i < lambda.size(); ++i) { l += (i ? ";" : "") + format_double(lambda[i]); }
    result.metadata["lambda"] = cfg.reweight ? l : "constant " + format_double(cfg.l1_weight);
  }

  bool const track = cfg.reweight && cfg.track_candidate_weights;
  std::vector<double> candidate; // weights update_weights would give, filled once frozen

  double min_res = residual_norm(y, E, x);
  CxVec rhs(grid.voxels());
  ComplexVolume syn(grid);
  for (int k = 1; k <= cfg.max_outer; ++k) {
    // x-update: (beta E*E + mu Psi*Psi) x = beta E*y + mu Psi*(d - b)
    T.synthesize_bands(
      [&](std::size_t band, std::span<cx> out) {
        auto const &info = T.bands()[band];
        for (std::size_t i = 0; i < info.size; ++i) { out[i] = d[info.offset + i] - b[info.offset + i]; }
      },
      syn);
    for (std::size_t i = 0; i < rhs.size(); ++i) { rhs[i] = Ehy[i] + mu * syn[i]; }
    auto const cg = cg_solve(A, rhs, x.span(), cfg.inner_iters, cfg.inner_tol);

    // d-update, b-update and (until frozen) the weights, one subband at a time
    bool const update = cfg.reweight && k <= cfg.freeze_after;
    bool const shadow = track && !update;
    if (shadow && candidate.empty()) { candidate = sigma; }
    double l1 = 0.0, dsum = 0.0, ssum = 0.0;
    T.analyze_bands(x, [&](std::size_t band, std::span<cx const> c) {
      auto const &info = T.bands()[band];
      double const lam = band_lambda[band];
      for (std::size_t i = 0; i < info.size; ++i) {
        std::size_t const j = info.offset + i;
        double const s = cfg.reweight ? sigma[j] : cfg.l1_weight;
        cx const z = c[i] + b[j];
        cx const dn = shrink(z, s / mu);
        d[j] = dn;
        b[j] = z - dn;
        l1 += s * std::abs(c[i]);
        if (update) {
          double const sn = lam / (std::abs(c[i]) + nu);
          dsum += std::abs(sn - s);
          ssum += s;
          sigma[j] = sn;
        } else if (shadow) {
          double const sn = lam / (std::abs(c[i]) + nu);
          dsum += std::abs(sn - candidate[j]);
          ssum += candidate[j];
          candidate[j] = sn;
        }
      }
    });

    double const res = residual_norm(y, E, x);
    IterationDiag diag;
    diag.iteration = k;
    diag.residual = res * scale;
    diag.objective = 0.5 * beta * res * res + l1;
    diag.weight_change = update && ssum > 0.0 ? dsum / ssum : 0.0;
    if (track) { diag.candidate_weight_change = ssum > 0.0 ? dsum / ssum : 0.0; }
    diag.cg_iterations = cg.iterations;
    ComplexVolume xs = x;
    xs *= scale;
    if (reference) { diag.rel_err = relative_error(xs, *reference); }
    result.diagnostics.push_back(diag);
    if (observer) { observer(diag, xs, sigma); }
    if (!std::isfinite(res) || res > cfg.divergence_factor * min_res) {
      fail(ErrorCategory::diverged, "admm diverged at iteration " + std::to_string(k) + ": residual " +
                                      format_double(res * scale) + " exceeds " + format_double(cfg.divergence_factor) +
                                      "x its minimum " + format_double(min_res * scale));
    }
    min_res = std::min(min_res, res);
  }
  x *= scale;
  result.volume = std::move(x);
  return result;
}

ReconResult itsense(KSpaceSamples const &y, EncodingOperator const &E, int iters, double tol,
                    ComplexVolume const *reference)
{
  ReconResult result;
  Grid3 const grid = E.grid();
  result.volume = initial_estimate(y, E);
  auto const rhs = E.adjoint(y);
  LinearOp const A = [&](std::span<cx const> in, std::span<cx> out) {
    ComplexVolume v(grid, CxVec(in.begin(), in.end()));
    auto const r = E.normal(v, 1.0, 0.0);
    std::copy(r.data().begin(), r.data().end(), out.begin());
  };
  cg_solve(A, rhs.span(), result.volume.span(), iters, tol, [&](int k, std::span<cx const> x) {
    ComplexVolume v(grid, CxVec(x.begin(), x.end()));
    IterationDiag d;
    d.iteration = k;
    d.residual = residual_norm(y, E, v);
    d.objective = 0.5 * d.residual * d.residual;
    d.cg_iterations = 1;
    if (reference) { d.rel_err = relative_error(v, *reference); }
    result.diagnostics.push_back(d);
  });
  result.metadata["init"] = "density-weighted adjoint";
  result.metadata["iterations"] = std::to_string(iters);
  return result;
}

namespace {

int default_scales(Grid3 const &g) { return std::min({g.nx, g.ny, g.nz}) >= 64 ? 3 : 2; }

} // namespace

std::unique_ptr<TransformSystem> build_variant_transform(Variant v, Grid3 const &grid, AdmmConfig const &cfg)
{
  int const J = cfg.shearlet_scales > 0 ? cfg.shearlet_scales : default_scales(grid);
  int const L = cfg.wavelet_levels > 0 ? cfg.wavelet_levels : default_scales(grid);
  switch (v) {
  case Variant::shear3d:
    return build_shearlet(grid, J, ShearletDim::full3d);
  case Variant::shear2d:
    return build_shearlet(grid, J, ShearletDim::slicewise2d, cfg.slice_axis);
  case Variant::wavelet:
    return build_wavelet3d(grid, L);
  case Variant::tv:
    return build_grad3d(grid);
  case Variant::itsense:
    return nullptr;
  }
  return nullptr;
}

ReconResult reconstruct_variant(Variant v, KSpaceSamples const &y, EncodingOperator const &E, AdmmConfig const &cfg,
                                ComplexVolume const *reference)
{
  ReconResult r;
  if (v == Variant::itsense) {
    r = itsense(y, E, cfg.itsense_iters, cfg.itsense_tol, reference);
  } else {
    AdmmConfig c = cfg;
    c.reweight = v == Variant::shear3d || v == Variant::shear2d;
    auto const T = build_variant_transform(v, E.grid(), c);
    if (!c.reweight) { c.lambda.clear(); }
    r = admm_solve(y, E, *T, c, reference);
  }
  r.metadata["variant"] = to_string(v);
  return r;
}

} // namespace csmri
