#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dds/config.hpp"
#include "dds/dtf.hpp"
#include "dds/error.hpp"
#include "dds/harness.hpp"

namespace fs = std::filesystem;
using namespace dds;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "Experiment config (INI)");
  app->add_option("--set", c.sets, "Override a config entry, section.key=value (repeatable)");
  app->add_option("-o,--out", c.out_dir, "Output directory (overrides output.dir)");
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(c.config_path);
  for (const auto& s : c.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const ExperimentConfig& cfg) {
  fs::path p(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.output_dir + "': " + ec.message());
  return p;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

Tensor viewable(const Tensor& t, std::size_t slice) {
  Tensor img = t.ndim() == 3 ? t.slice(slice) : t;
  return img.is_complex() ? img.abs() : img;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion sampling with Krylov data consistency: synthetic experiments"};
  app.require_subcommand(1);

  Common sim_c, rec_c, sweep_c, noff_c;

  auto* sim = app.add_subcommand("simulate", "Phantom, operator and measurements to DTF files");
  add_common(sim, sim_c);

  auto* rec = app.add_subcommand("reconstruct", "Run one reconstruction");
  add_common(rec, rec_c);
  std::uint64_t rec_seed = 0;
  std::string rec_input, rec_truth;
  bool rec_pgm = false;
  rec->add_option("--seed", rec_seed, "Sampler seed")->required();
  rec->add_option("--input", rec_input, "Measurement DTF (default: synthesize from the config)");
  rec->add_option("--truth", rec_truth, "Ground-truth DTF for metrics (default: the config phantom)");
  rec->add_flag("--pgm", rec_pgm, "Also write recon.pgm (magnitude; middle slice for volumes)");

  auto* sweep = app.add_subcommand("sweep", "Parameter sweep, one metrics row per run");
  add_common(sweep, sweep_c);
  std::uint64_t sweep_seed = 0;
  std::string axis = "eta", values, strategies;
  int threads = 1;
  bool timing = false;
  sweep->add_option("--seed", sweep_seed, "Base sampler seed")->required();
  sweep->add_option("--axis", axis, "eta | nfe | cg-steps | lambda");
  sweep->add_option("--values", values, "Comma-separated axis values")->required();
  sweep->add_option("--strategies", strategies, "Comma-separated DC strategies (default: sampler.strategy)");
  sweep->add_option("--threads", threads, "Worker threads");
  sweep->add_flag("--timing", timing, "Add a wall-clock column (not reproducible)");

  auto* noff = app.add_subcommand("noise-offset", "Noise-level offset of one DC step per strategy");
  add_common(noff, noff_c);
  std::uint64_t noff_seed = 1;
  noff->add_option("--seed", noff_seed, "Trial seed");

  auto* met = app.add_subcommand("metrics", "PSNR / SSIM / residual of a DTF against a reference");
  std::string met_x, met_ref;
  met->add_option("image", met_x, "Reconstruction DTF")->required();
  met->add_option("reference", met_ref, "Reference DTF")->required();

  auto* emit = app.add_subcommand("emit", "Write a DTF image as 8-bit PGM");
  std::string emit_in, emit_out;
  std::size_t emit_slice = 0;
  emit->add_option("input", emit_in, "DTF file")->required();
  emit->add_option("output", emit_out, "PGM file")->required();
  emit->add_option("--slice", emit_slice, "Slice index for volumes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      auto cfg = load_config(sim_c);
      auto dir = out_dir(cfg);
      Problem p = build_problem(cfg);
      save_dtf((dir / "truth.dtf").string(), p.truth);
      save_dtf((dir / "y.dtf").string(), p.y);
      if (!p.mask.empty()) save_dtf((dir / "mask.dtf").string(), p.mask);
      if (!p.coil_maps.empty()) save_dtf((dir / "coils.dtf").string(), p.coil_maps);
      write_text_file((dir / "config.ini").string(), cfg.to_ini());
    } else if (rec->parsed()) {
      auto cfg = load_config(rec_c);
      auto dir = out_dir(cfg);
      Problem p = build_problem(cfg);
      if (!rec_input.empty()) {
        Tensor y = load_dtf(rec_input);
        if (y.shape() != p.y.shape())
          throw ConfigError("measurement shape " + shape_to_string(y.shape()) + " does not match the operator range " +
                            shape_to_string(p.y.shape()));
        p.y = y;
      }
      if (!rec_truth.empty()) p.truth = load_dtf(rec_truth);
      auto r = reconstruct(p, cfg, rec_seed);
      save_dtf((dir / "recon.dtf").string(), r.recon.x0);
      write_text_file((dir / "trace.csv").string(), trace_to_csv(r.recon.trace));
      if (cfg.problem == ProblemKind::Ct3d)
        write_text_file((dir / "objective.csv").string(), objective_to_csv(r.objective));
      MetricsRow m = metrics_row(r.recon.x0, p.truth, &p.a, &p.y);
      m.run_id = "0";
      m.strategy = cfg.problem == ProblemKind::Ct3d ? "admm-tv" : to_string(cfg.sampler.strategy);
      m.nfe = cfg.sampler.nfe;
      m.m = cfg.sampler.cg_steps;
      m.eta = cfg.sampler.resolved_eta();
      m.lambda = cfg.problem == ProblemKind::Ct3d ? cfg.tv.lambda : 0.0;
      write_text_file((dir / "metrics.csv").string(), metrics_to_csv({m}));
      write_text_file((dir / "config.ini").string(), cfg.to_ini());
      if (rec_pgm) {
        const std::size_t mid = r.recon.x0.ndim() == 3 ? r.recon.x0.shape()[0] / 2 : 0;
        emit_pgm(viewable(r.recon.x0, mid), (dir / "recon.pgm").string());
      }
      std::cout << metrics_csv_header() << metrics_csv_line(m);
      if (!r.recon.accepted) std::cerr << "warning: no attempt met rejection-tau; kept the best residual\n";
    } else if (sweep->parsed()) {
      auto cfg = load_config(sweep_c);
      auto dir = out_dir(cfg);
      SweepSpec spec;
      spec.axis = parse_sweep_axis(axis);
      for (const auto& v : split(values)) {
        try {
          spec.values.push_back(std::stod(v));
        } catch (const std::exception&) {
          throw ConfigError("bad sweep value '" + v + "'");
        }
      }
      for (const auto& s : split(strategies)) spec.strategies.push_back(parse_strategy(s));
      spec.threads = threads;
      Problem p = build_problem(cfg);
      auto rows = run_sweep(p, cfg, spec, sweep_seed);
      const std::string csv = metrics_to_csv(rows, timing);
      write_text_file((dir / "sweep.csv").string(), csv);
      write_text_file((dir / "config.ini").string(), cfg.to_ini());
      std::cout << csv;
    } else if (noff->parsed()) {
      auto cfg = load_config(noff_c);
      auto dir = out_dir(cfg);
      auto res = run_noise_offset_experiment(cfg, noff_seed);
      write_text_file((dir / "noise_offset.csv").string(), noise_offset_to_csv(res));
      write_text_file((dir / "config.ini").string(), cfg.to_ini());
      std::cout << "dds-cg smallest offset in " << res.dds_wins << " of " << res.trials << " trials\n";
    } else if (met->parsed()) {
      Tensor x = load_dtf(met_x), ref = load_dtf(met_ref);
      MetricsRow m = metrics_row(x, ref);
      m.run_id = "0";
      m.strategy = "-";
      std::cout << metrics_csv_header() << metrics_csv_line(m);
    } else if (emit->parsed()) {
      Tensor t = load_dtf(emit_in);
      if (t.ndim() == 3 && emit_slice >= t.shape()[0]) throw ConfigError("--slice out of range");
      emit_pgm(viewable(t, emit_slice), emit_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
