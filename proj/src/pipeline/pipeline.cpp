#include "csmri/pipeline.hpp"

#include "csmri/encoding.hpp"
#include "csmri/metrics.hpp"
#include "csmri/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace csmri {

namespace {

std::string trim(std::string s)
{
  auto const b = s.find_first_not_of(" \t\r");
  auto const e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string const &s, char sep)
{
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) { out.push_back(item); }
  }
  return out;
}

[[noreturn]] void bad(std::string const &m) { fail(ErrorCategory::invalid_argument, "manifest: " + m); }

double number(std::string const &key, std::string const &v)
{
  try {
    std::size_t used = 0;
    double const d = std::stod(v, &used);
    if (used == v.size()) { return d; }
  } catch (std::exception const &) {
  }
  bad("'" + key + "' needs a number, got '" + v + "'");
}

int integer(std::string const &key, std::string const &v)
{
  double const d = number(key, v);
  if (d != std::floor(d) || std::abs(d) > 2e9) { bad("'" + key + "' needs an integer, got '" + v + "'"); }
  return int(d);
}

std::uint64_t seed_value(std::string const &key, std::string const &v)
{
  try {
    std::size_t used = 0;
    auto const s = std::stoull(v, &used);
    if (used == v.size()) { return s; }
  } catch (std::exception const &) {
  }
  bad("'" + key + "' needs a non-negative integer seed, got '" + v + "'");
}

std::string mode_name(UndersampleMode m) { return m == UndersampleMode::stride ? "stride" : "prefix"; }

std::string variant_tag(Variant v, int factor) { return to_string(v) + "_f" + std::to_string(factor); }

void require_file(fs::path const &p, std::string const &what)
{
  if (!fs::exists(p)) { fail(ErrorCategory::not_found, what + " not found: " + p.string() + " (run simulate first?)"); }
}

PhantomSpec manifest_phantom(RunManifest const &m)
{
  if (m.phantom == "default") { return default_phantom_spec(); }
  return parse_phantom_spec(read_file(m.resolve(m.phantom)));
}

Trajectory full_trajectory(RunManifest const &m)
{
  return generate_rpe(m.n_read, m.phase_extent, m.n_lines, m.n_radial, m.scheme);
}

struct Loaded
{
  SensitivityMaps maps;
  std::shared_ptr<Trajectory const> full;
  KSpaceSamples y;
};

Loaded load_acquisition(RunManifest const &m)
{
  RunPaths const p{m.output_dir()};
  require_file(p.kspace(), "k-space");
  Loaded l;
  l.y = load_kspace(p.kspace());
  l.full = l.y.trajectory;
  std::vector<ComplexVolume> maps;
  for (std::size_t c = 0; c < l.y.n_coils(); ++c) {
    require_file(p.coil(c), "coil map");
    maps.push_back(load_volume(p.coil(c)));
    require_same_shape(m.grid, maps.back().grid(), "coil map vs manifest grid");
  }
  l.maps = SensitivityMaps::from_maps(std::move(maps));
  return l;
}

std::string metadata_text(std::map<std::string, std::string> const &md)
{
  std::string out;
  for (auto const &[k, v] : md) { out += k + " = " + v + "\n"; }
  return out;
}

int lowest_factor(RunManifest const &m) { return *std::min_element(m.factors.begin(), m.factors.end()); }

} // namespace

// ---- manifest ----

fs::path RunManifest::resolve(std::string const &p) const
{
  fs::path const q(p);
  return q.is_absolute() ? q : base_dir / q;
}

fs::path RunManifest::output_dir() const { return resolve(output); }

void RunManifest::validate() const
{
  grid.validate();
  if (coils < 1) { bad("coils must be >= 1"); }
  if (n_read != grid.nx) { bad("n_read must equal the grid x size (Cartesian readout)"); }
  if (phase_extent < 2 || n_lines < 1 || n_radial < 2) { bad("trajectory parameters out of range"); }
  if (factors.empty()) { bad("factors must be non-empty"); }
  for (int f : factors) {
    if (f < 1) { bad("factors must be >= 1"); }
  }
  if (variants.empty()) { bad("variants must be non-empty"); }
  if (!(base_scan_minutes > 0.0)) { bad("base_scan_minutes must be > 0"); }
  if (phantom != "default" && !fs::exists(resolve(phantom))) {
    fail(ErrorCategory::not_found, "manifest: phantom spec not found: " + resolve(phantom).string());
  }
  if (!solver_config.empty() && !fs::exists(resolve(solver_config))) {
    fail(ErrorCategory::not_found, "manifest: solver config not found: " + resolve(solver_config).string());
  }
}

RunManifest parse_manifest(std::string const &text, fs::path const &base_dir)
{
  RunManifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) { line.resize(h); }
    line = trim(line);
    if (line.empty()) { continue; }
    auto const eq = line.find('=');
    if (eq == std::string::npos) { bad("line " + std::to_string(n) + ": expected key = value"); }
    std::string const key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key == "phantom") {
      m.phantom = val;
    } else if (key == "grid") {
      auto const v = split(val, ' ');
      if (v.size() != 3) { bad("grid needs three sizes"); }
      m.grid.nx = integer(key, v[0]);
      m.grid.ny = integer(key, v[1]);
      m.grid.nz = integer(key, v[2]);
    } else if (key == "spacing") {
      auto const v = split(val, ' ');
      if (v.size() != 3) { bad("spacing needs three values (mm)"); }
      for (std::size_t a = 0; a < 3; ++a) { m.grid.spacing[a] = number(key, v[a]); }
    } else if (key == "coils") {
      m.coils = integer(key, val);
    } else if (key == "phantom_seed") {
      m.phantom_seed = seed_value(key, val);
    } else if (key == "coil_seed") {
      m.coil_seed = seed_value(key, val);
    } else if (key == "noise_seed") {
      m.noise_seed = seed_value(key, val);
    } else if (key == "snr_db") {
      m.snr_db = number(key, val);
    } else if (key == "n_read") {
      m.n_read = integer(key, val);
    } else if (key == "phase_extent") {
      m.phase_extent = integer(key, val);
    } else if (key == "n_lines") {
      m.n_lines = integer(key, val);
    } else if (key == "n_radial") {
      m.n_radial = integer(key, val);
    } else if (key == "angle_scheme") {
      m.scheme = parse_angle_scheme(val);
    } else if (key == "undersample_mode") {
      m.mode = parse_undersample_mode(val);
    } else if (key == "base_scan_minutes") {
      m.base_scan_minutes = number(key, val);
    } else if (key == "factors") {
      m.factors.clear();
      for (auto const &f : split(val, ',')) { m.factors.push_back(integer(key, f)); }
    } else if (key == "variants") {
      m.variants.clear();
      for (auto const &v : split(val, ',')) { m.variants.push_back(parse_variant(v)); }
    } else if (key == "solver_config") {
      m.solver_config = val;
    } else if (key == "output") {
      m.output = val;
    } else if (key == "slice_axis") {
      m.slice_axis = parse_axis(val);
    } else {
      bad("unknown key '" + key + "'");
    }
  }
  return m;
}

RunManifest load_manifest(fs::path const &path)
{
  if (!fs::exists(path)) { fail(ErrorCategory::not_found, "manifest not found: " + path.string()); }
  auto m = parse_manifest(read_file(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
  m.validate();
  return m;
}

std::string format_manifest(RunManifest const &m)
{
  std::ostringstream o;
  o << "phantom = " << m.phantom << "\n"
    << "grid = " << m.grid.nx << " " << m.grid.ny << " " << m.grid.nz << "\n"
    << "spacing = " << format_double(m.grid.spacing[0]) << " " << format_double(m.grid.spacing[1]) << " "
    << format_double(m.grid.spacing[2]) << "\n"
    << "coils = " << m.coils << "\nphantom_seed = " << m.phantom_seed << "\ncoil_seed = " << m.coil_seed
    << "\nnoise_seed = " << m.noise_seed << "\nsnr_db = " << format_double(m.snr_db) << "\nn_read = " << m.n_read
    << "\nphase_extent = " << m.phase_extent << "\nn_lines = " << m.n_lines << "\nn_radial = " << m.n_radial
    << "\nangle_scheme = " << to_string(m.scheme) << "\nundersample_mode = " << mode_name(m.mode)
    << "\nbase_scan_minutes = " << format_double(m.base_scan_minutes) << "\nfactors = ";
  for (std::size_t i = 0; i < m.factors.size(); ++i) { o << (i ? "," : "") << m.factors[i]; }
  o << "\nvariants = ";
  for (std::size_t i = 0; i < m.variants.size(); ++i) { o << (i ? "," : "") << to_string(m.variants[i]); }
  o << "\n";
  if (!m.solver_config.empty()) { o << "solver_config = " << m.solver_config << "\n"; }
  o << "output = " << m.output << "\nslice_axis = " << "xyz"[int(m.slice_axis)] << "\n";
  return o.str();
}

AdmmConfig manifest_solver_config(RunManifest const &m)
{
  if (m.solver_config.empty()) { return AdmmConfig{}; }
  return load_admm_config(m.resolve(m.solver_config));
}

// ---- layout ----

fs::path RunPaths::coil(std::size_t c) const
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "coil_%02zu.csvol", c);
  return root / "coils" / buf;
}

fs::path RunPaths::recon(Variant v, int factor) const { return root / "recon" / (variant_tag(v, factor) + ".csvol"); }
fs::path RunPaths::diagnostics(Variant v, int factor) const
{
  return root / "recon" / (variant_tag(v, factor) + "_diag.csv");
}
fs::path RunPaths::metadata(Variant v, int factor) const
{
  return root / "recon" / (variant_tag(v, factor) + "_meta.txt");
}

// ---- commands ----

std::vector<FactorInfo> factor_table(RunManifest const &m)
{
  auto const full = full_trajectory(m);
  std::vector<FactorInfo> out;
  double const base = full.nominal_undersampling();
  for (int f : m.factors) {
    auto const t = retro_undersample(full, f, m.mode);
    out.push_back({f, t.n_lines(), base * f, t.nominal_undersampling(), nominal_scan_time(m.base_scan_minutes, f)});
  }
  return out;
}

SimulateReport cmd_simulate(RunManifest const &m)
{
  m.validate();
  RunPaths const p{m.output_dir()};
  fs::create_directories(p.root / "coils");

  auto const phantom = make_phantom(m.grid, manifest_phantom(m), m.phantom_seed);
  auto const maps = make_coils(m.grid, m.coils, m.coil_seed);
  auto const traj = std::make_shared<Trajectory const>(full_trajectory(m));
  EncodingOperator const E(maps, traj);
  auto const clean = E.forward(phantom.volume);
  SimulateReport r;
  r.noise_sigma = noise_sigma_for_snr(clean, m.snr_db);
  auto const y = add_noise(clean, r.noise_sigma, m.noise_seed);

  save_volume(p.phantom(), phantom.volume);
  write_file_atomic(p.centerlines(), format_centerlines(phantom.tubes));
  for (std::size_t c = 0; c < maps.n_coils(); ++c) { save_volume(p.coil(c), maps[c]); }
  save_trajectory(p.trajectory(), *traj);
  save_kspace(p.kspace(), y, p.trajectory());

  r.factors = factor_table(m);
  std::string csv = "factor,lines,undersampling,effective_undersampling,scan_minutes\n";
  for (auto const &f : r.factors) {
    csv += std::to_string(f.factor) + "," + std::to_string(f.lines) + "," + format_double(f.undersampling) + "," +
           format_double(f.effective_undersampling) + "," + format_double(f.scan_minutes) + "\n";
  }
  write_file_atomic(p.undersampling(), csv);
  write_file_atomic(p.root / "manifest.txt", format_manifest(m));
  return r;
}

ReconResult cmd_reconstruct(RunManifest const &m, Variant v, int factor)
{
  m.validate();
  if (factor < 1) { fail(ErrorCategory::invalid_argument, "factor must be >= 1"); }
  RunPaths const p{m.output_dir()};
  auto const cfg = manifest_solver_config(m);
  auto const acq = load_acquisition(m);
  auto const sub = std::make_shared<Trajectory const>(retro_undersample(*acq.full, factor, m.mode));
  auto const y = select_line_samples(acq.y, *acq.full, sub);
  EncodingOperator const E(acq.maps, sub);

  std::optional<ComplexVolume> truth;
  if (fs::exists(p.phantom())) { truth = load_volume(p.phantom()); }
  auto r = reconstruct_variant(v, y, E, cfg, truth ? &*truth : nullptr);
  r.metadata["factor"] = std::to_string(factor);
  r.metadata["undersampling"] = format_double(acq.full->nominal_undersampling() * factor);
  r.metadata["effective_undersampling"] = format_double(sub->nominal_undersampling());
  r.metadata["lines"] = std::to_string(sub->n_lines());

  fs::create_directories(p.root / "recon");
  save_volume(p.recon(v, factor), r.volume);
  write_file_atomic(p.diagnostics(v, factor), diagnostics_csv(r));
  write_file_atomic(p.metadata(v, factor), metadata_text(r.metadata));
  return r;
}

std::string results_csv(std::vector<MetricRow> const &rows, bool with_truth)
{
  std::string out = "variant,factor,undersampling,rel_err,haarpsi,vessel_sharpness";
  if (with_truth) { out += ",rel_err_truth,haarpsi_truth"; }
  out += "\n";
  for (auto const &r : rows) {
    out += to_string(r.variant) + "," + std::to_string(r.factor) + "," + format_double(r.undersampling) + "," +
           format_double(r.rel_err) + "," + format_double(r.haarpsi) + "," + format_double(r.vessel_sharpness);
    if (with_truth) {
      out += "," + (r.rel_err_truth ? format_double(*r.rel_err_truth) : std::string()) + "," +
             (r.haarpsi_truth ? format_double(*r.haarpsi_truth) : std::string());
    }
    out += "\n";
  }
  return out;
}

std::vector<MetricRow> cmd_evaluate(RunManifest const &m)
{
  m.validate();
  RunPaths const p{m.output_dir()};
  int const f0 = lowest_factor(m);
  require_file(p.recon(Variant::itsense, f0), "reference reconstruction (itSENSE at the lowest factor)");
  auto const reference = load_volume(p.recon(Variant::itsense, f0));
  std::optional<ComplexVolume> truth;
  if (fs::exists(p.phantom())) { truth = load_volume(p.phantom()); }
  std::vector<Tube> tubes;
  if (fs::exists(p.centerlines())) { tubes = parse_centerlines(read_file(p.centerlines())); }

  auto const info = factor_table(m);
  // one intensity scale for every panel
  double const panel_scale = max_abs((truth ? *truth : reference).span());
  int const mid = m.grid.dim(m.slice_axis) / 2;
  fs::create_directories(p.root / "slices");
  if (truth) { save_pgm_slice(p.slice("truth"), *truth, m.slice_axis, mid, panel_scale); }

  std::vector<MetricRow> rows;
  for (auto v : m.variants) {
    for (std::size_t i = 0; i < m.factors.size(); ++i) {
      int const f = m.factors[i];
      require_file(p.recon(v, f), "reconstruction " + variant_tag(v, f));
      auto const rec = load_volume(p.recon(v, f));
      MetricRow r;
      r.variant = v;
      r.factor = f;
      r.undersampling = info[i].undersampling;
      r.rel_err = relative_error(rec, reference);
      r.haarpsi = haarpsi(rec, reference, m.slice_axis);
      if (!tubes.empty()) {
        double s = 0.0;
        for (auto const &t : tubes) { s += vessel_sharpness(rec, t.centerline, t.radius_mm).score; }
        r.vessel_sharpness = s / double(tubes.size());
      }
      if (truth) {
        r.rel_err_truth = relative_error(rec, *truth);
        r.haarpsi_truth = haarpsi(rec, *truth, m.slice_axis);
      }
      save_pgm_slice(p.slice(variant_tag(v, f)), rec, m.slice_axis, mid, panel_scale);
      rows.push_back(r);
    }
  }
  write_file_atomic(p.results(), results_csv(rows, truth.has_value()));
  return rows;
}

std::vector<MetricRow> cmd_sweep(RunManifest const &m, int threads)
{
  if (threads < 1) { fail(ErrorCategory::invalid_argument, "threads must be >= 1"); }
  cmd_simulate(m);
  // the reference reconstruction is needed by evaluate even if itSENSE is not listed
  std::vector<std::pair<Variant, int>> jobs;
  for (auto v : m.variants) {
    for (int f : m.factors) { jobs.emplace_back(v, f); }
  }
  auto const ref = std::make_pair(Variant::itsense, lowest_factor(m));
  if (std::find(jobs.begin(), jobs.end(), ref) == jobs.end()) { jobs.push_back(ref); }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        cmd_reconstruct(m, jobs[j].first, jobs[j].second);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) { first_error = std::current_exception(); }
        next = jobs.size();
      }
    }
  };
  std::size_t const n = std::min<std::size_t>(std::size_t(threads), jobs.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n; ++i) { pool.emplace_back(worker); }
    for (auto &t : pool) { t.join(); }
  }
  if (first_error) { std::rethrow_exception(first_error); }
  return cmd_evaluate(m);
}

void cmd_export_slice(RunManifest const &m, std::string const &variant, int factor, fs::path const &out,
                      std::optional<int> index)
{
  RunPaths const p{m.output_dir()};
  fs::path src;
  if (variant == "truth") {
    src = p.phantom();
  } else {
    src = p.recon(parse_variant(variant), factor);
  }
  require_file(src, "volume");
  auto const v = load_volume(src);
  int const idx = index ? *index : v.grid().dim(m.slice_axis) / 2;
  if (out.has_parent_path()) { fs::create_directories(out.parent_path()); }
  save_pgm_slice(out, v, m.slice_axis, idx, max_abs(v.span()));
}

} // namespace csmri
