// Batch driver over the csmri C API.

#include "csmri/csmri.h"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Failure
{
  csmri_status status;
  std::string message;
};

void check(csmri_status s)
{
  if (s != CSMRI_OK) { throw Failure{s, csmri_last_error()}; }
}

struct Manifest
{
  csmri_manifest *h = nullptr;
  ~Manifest() { csmri_manifest_free(h); }
};

void print_factors(csmri_manifest const *m)
{
  size_t n = 0;
  check(csmri_manifest_factor_count(m, &n));
  std::cout << "factor,undersampling\n";
  for (size_t i = 0; i < n; ++i) {
    int f = 0;
    double r = 0.0;
    check(csmri_manifest_factor(m, i, &f, &r));
    std::cout << f << ',' << r << '\n';
  }
}

void print_file(std::string const &path)
{
  std::ifstream in(path);
  if (in) { std::cout << in.rdbuf(); }
}

std::string output_dir(csmri_manifest const *m)
{
  size_t need = 0;
  check(csmri_manifest_output_dir(m, nullptr, 0, &need));
  std::string dir(need + 1, '\0');
  check(csmri_manifest_output_dir(m, dir.data(), dir.size(), &need));
  dir.resize(need);
  return dir;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"csmri: simulate, reconstruct and evaluate compressed-sensing MRI runs"};
  app.require_subcommand(1);

  std::string manifest_path;
  std::string variant;
  int factor = 1;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  int slice = -1;

  auto add_common = [&](CLI::App *c) {
    c->add_option("--manifest", manifest_path, "run manifest (built-in defaults if omitted)");
    c->add_option("--seed", seed, "noise seed override");
  };

  auto *sim = app.add_subcommand("simulate", "phantom, coils, trajectory and noisy k-space");
  add_common(sim);
  sim->add_option("--out", out, "output directory override");

  auto *rec = app.add_subcommand("reconstruct", "one variant at one retrospective factor");
  add_common(rec);
  rec->add_option("--variant", variant, "itSENSE | WaveCS | TV | 2DShearCS | 3DShearCS")->required();
  rec->add_option("--factor", factor, "retrospective factor")->check(CLI::PositiveNumber);
  rec->add_option("--out", out, "output directory override");

  auto *ev = app.add_subcommand("evaluate", "metrics table and slice panels");
  add_common(ev);
  ev->add_option("--out", out, "output directory override");

  auto *sw = app.add_subcommand("sweep", "simulate, all variants x factors, evaluate");
  add_common(sw);
  sw->add_option("--out", out, "output directory override");
  sw->add_option("--threads", threads, "parallel reconstruction jobs")->check(CLI::PositiveNumber);

  auto *ex = app.add_subcommand("export-slice", "one slice as an 8-bit graymap");
  add_common(ex);
  ex->add_option("--variant", variant, "variant name or 'truth'")->required();
  ex->add_option("--factor", factor, "retrospective factor")->check(CLI::PositiveNumber);
  ex->add_option("--out", out, "image path")->required();
  ex->add_option("--slice", slice, "slice index (default: center)");

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const &e) {
    return app.exit(e);
  } catch (CLI::CallForAllHelp const &e) {
    return app.exit(e);
  } catch (CLI::ParseError const &e) {
    std::printf("error category=%s message=%s\n", csmri_status_name(CSMRI_ERR_INVALID_ARGUMENT), e.what());
    return int(CSMRI_ERR_INVALID_ARGUMENT);
  }

  try {
    Manifest m;
    if (manifest_path.empty()) {
      check(csmri_manifest_default(&m.h));
    } else {
      check(csmri_manifest_load(manifest_path.c_str(), &m.h));
    }
    if (seed) { check(csmri_manifest_set_noise_seed(m.h, *seed)); }
    if (!out.empty() && !ex->parsed()) { check(csmri_manifest_set_output(m.h, out.c_str())); }

    if (sim->parsed()) {
      double sigma = 0.0;
      check(csmri_simulate(m.h, &sigma));
      print_factors(m.h);
      std::cout << "noise_sigma," << sigma << '\n';
    } else if (rec->parsed()) {
      csmri_recon_summary s{};
      check(csmri_reconstruct(m.h, variant.c_str(), factor, &s));
      std::cout << "variant=" << variant << " factor=" << factor << " iterations=" << s.iterations
                << " residual=" << s.final_residual;
      if (!std::isnan(s.final_rel_err)) { std::cout << " rel_err_truth=" << s.final_rel_err; }
      std::cout << '\n';
    } else if (ev->parsed()) {
      size_t rows = 0;
      check(csmri_evaluate(m.h, &rows));
      print_file(output_dir(m.h) + "/results.csv");
    } else if (sw->parsed()) {
      size_t rows = 0;
      check(csmri_sweep(m.h, threads, &rows));
      print_file(output_dir(m.h) + "/results.csv");
    } else if (ex->parsed()) {
      check(csmri_export_slice(m.h, variant.c_str(), factor, out.c_str(), slice));
      std::cout << out << '\n';
    }
  } catch (Failure const &f) {
    std::string msg = f.message;
    for (auto &c : msg) {
      if (c == '\n') { c = ' '; }
    }
    std::printf("error category=%s message=%s\n", csmri_status_name(f.status), msg.c_str());
    return int(f.status);
  }
  return 0;
}
