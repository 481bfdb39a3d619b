#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "icbf/report.hpp"
#include "icbf/scenario_io.hpp"
#include "icbf/sim.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitSafety = 3;

std::string default_out_dir() {
  if (const char* env = std::getenv("ICBF_OUT_DIR"); env && *env) return env;
  return "out";
}

struct RunOutputs {
  std::filesystem::path dir;
  icbf::TrajectoryLog log;
};

// Simulate and write the full artifact set for one scenario configuration.
RunOutputs run_and_report(const icbf::LoadedScenario& scn, bool baseline,
                          const std::filesystem::path& out_dir) {
  RunOutputs out;
  out.dir = out_dir;
  out.log = baseline ? icbf::simulate_baseline(scn.cfg) : icbf::simulate(scn.cfg);

  std::filesystem::create_directories(out_dir);
  icbf::write_csv(out.log, (out_dir / "trajectory.csv").string());
  icbf::write_summary_json(out.log, {scn.cfg.name, scn.digest, kVersion},
                           (out_dir / "summary.json").string());
  const icbf::FieldBounds bounds = icbf::plot_bounds(out.log, scn.cfg);
  const icbf::FieldGrid grid =
      icbf::lambda_grid(scn.cfg.model, scn.cfg.beacons, bounds, 141, 141);
  icbf::write_svg_trajectory(out.log, scn.cfg, grid, (out_dir / "trajectory.svg").string());
  icbf::write_svg_barriers(out.log, scn.cfg, (out_dir / "barriers.svg").string());
  return out;
}

int cmd_run(const std::string& ref, bool baseline, std::optional<double> dt_override,
            const std::string& out_root) {
  icbf::LoadedScenario scn = icbf::resolve_scenario(ref);
  if (dt_override) scn.cfg.dt = *dt_override;

  const std::filesystem::path dir =
      std::filesystem::path(out_root) / (scn.cfg.name + (baseline ? "-baseline" : ""));
  const RunOutputs out = run_and_report(scn, baseline, dir);

  const auto& s = out.log.summary;
  std::printf("%s%s: %zu records, min_h_r=%.6g, lam in [%.6g, %.6g], max|u|=%.6g\n",
              scn.cfg.name.c_str(), baseline ? " (baseline)" : "",
              out.log.records.size(), s.min_h_r, s.min_lam, s.max_lam, s.max_u_norm);
  if (s.violation_time)
    std::printf("  raw barrier first negative at t=%.6g s\n", *s.violation_time);
  std::printf("  outputs: %s\n", out.dir.string().c_str());

  if (!baseline && s.aborted) {
    std::fprintf(stderr, "safety violation at step %ld: %s\n", s.violation_step,
                 s.abort_reason.c_str());
    return kExitSafety;
  }
  return 0;
}

// "barrier.kappa" or "/barrier/kappa" -> nlohmann json_pointer
nlohmann::json::json_pointer to_pointer(const std::string& param) {
  std::string p = param;
  if (p.empty()) throw icbf::ConfigError("empty --param path", "(param)");
  if (p[0] != '/') {
    std::string out;
    for (const char c : p) out += (c == '.') ? '/' : c;
    p = "/" + out;
  }
  return nlohmann::json::json_pointer(p);
}

int cmd_sweep(const std::string& ref, const std::string& param,
              const std::vector<double>& values, const std::string& out_root, int jobs) {
  if (values.empty()) throw icbf::ConfigError("--values must list at least one number", "(values)");

  const icbf::LoadedScenario base = icbf::resolve_scenario(ref);
  nlohmann::json base_json = nlohmann::json::parse(base.canonical_json);
  const auto ptr = to_pointer(param);

  // Validate every configuration up front so a bad value fails fast.
  std::vector<icbf::LoadedScenario> scns;
  for (const double v : values) {
    nlohmann::json j = base_json;
    try {
      j.at(ptr) = v;
    } catch (const nlohmann::json::exception&) {
      j[ptr] = v;  // creating a new leaf is allowed for optional fields
    }
    scns.push_back(icbf::load_scenario_text(j.dump(), "sweep:" + param));
  }

  std::string pdir = param;
  for (auto& c : pdir)
    if (c == '/' || c == '.') c = '_';

  std::vector<icbf::RunSummary> results(values.size());
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
  std::string worker_error;
#pragma omp parallel for schedule(dynamic)
  for (size_t i = 0; i < scns.size(); ++i) {
    try {
      const std::filesystem::path dir = std::filesystem::path(out_root) / base.cfg.name /
                                        "sweep" / (pdir + "=" + std::to_string(values[i]));
      results[i] = run_and_report(scns[i], false, dir).log.summary;
    } catch (const std::exception& e) {
#pragma omp critical
      worker_error = e.what();
    }
  }
  if (!worker_error.empty()) throw icbf::InvalidInput("sweep run failed: " + worker_error);

  std::string csv =
      "value,min_h_r,min_lam,max_lam,max_u_norm,max_correction,mean_step_ms,lse_slack\n";
  std::printf("%12s %12s %12s %12s %12s %14s %12s %10s\n", "value", "min_h_r", "min_lam",
              "max_lam", "max|u|", "max|u-u_d|", "step_ms", "lse_slack");
  bool any_violation = false;
  for (size_t i = 0; i < values.size(); ++i) {
    const auto& s = results[i];
    const double kappa = scns[i].cfg.barrier.kappa;
    const double slack = std::log(2.0) / kappa;
    std::printf("%12.6g %12.6g %12.6g %12.6g %12.6g %14.6g %12.4g %10.3g\n", values[i],
                s.min_h_r, s.min_lam, s.max_lam, s.max_u_norm, s.max_correction,
                s.mean_step_ms, slack);
    char line[256];
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  values[i], s.min_h_r, s.min_lam, s.max_lam, s.max_u_norm,
                  s.max_correction, s.mean_step_ms, slack);
    csv += line;
    any_violation |= s.aborted;
  }
  const std::filesystem::path sweep_csv =
      std::filesystem::path(out_root) / base.cfg.name / "sweep" / (pdir + ".csv");
  std::filesystem::create_directories(sweep_csv.parent_path());
  std::ofstream(sweep_csv) << csv;
  std::printf("sweep table: %s\n", sweep_csv.string().c_str());

  if (any_violation) {
    std::fprintf(stderr, "at least one sweep run ended in a safety violation\n");
    return kExitSafety;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"information-aware safe localization simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_ref, out_root = default_out_dir();
  bool baseline = false;
  std::optional<double> dt_override;
  int jobs = 0;

  auto* run = app.add_subcommand("run", "simulate one scenario");
  run->add_option("config", config_ref, "builtin scenario name or JSON config path")
      ->required();
  run->add_flag("--baseline", baseline, "apply the raw LQR control, no filtering");
  double dt_value = 0.0;
  auto* dt_opt = run->add_option("--dt", dt_value, "override the integration step [s]");
  run->add_option("--out", out_root, "output directory root");
  run->add_option("--jobs", jobs, "OpenMP thread count for plotting");

  std::string param;
  std::string values_csv;
  auto* sweep = app.add_subcommand("sweep", "re-run a scenario over parameter values");
  sweep->add_option("config", config_ref, "builtin scenario name or JSON config path")
      ->required();
  sweep->add_option("--param", param, "config path, e.g. barrier.kappa")->required();
  sweep->add_option("--values", values_csv, "comma-separated numbers")->required();
  sweep->add_option("--out", out_root, "output directory root");
  sweep->add_option("--jobs", jobs, "parallel sweep workers");

  auto* scenarios = app.add_subcommand("scenarios", "list builtin scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (scenarios->parsed()) {
      for (const auto& n : icbf::builtin_names()) std::printf("%s\n", n.c_str());
      return 0;
    }
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#endif
    if (run->parsed()) {
      if (*dt_opt) dt_override = dt_value;
      return cmd_run(config_ref, baseline, dt_override, out_root);
    }
    if (sweep->parsed()) {
      std::vector<double> values;
      std::stringstream ss(values_csv);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        size_t pos = 0;
        double v = 0.0;
        try {
          v = std::stod(tok, &pos);
        } catch (const std::exception&) {
          throw icbf::ConfigError("--values: not a number: " + tok, "(values)");
        }
        if (pos != tok.size())
          throw icbf::ConfigError("--values: not a number: " + tok, "(values)");
        values.push_back(v);
      }
      return cmd_sweep(config_ref, param, values, out_root, jobs);
    }
  } catch (const icbf::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const icbf::SafetyViolation& e) {
    std::fprintf(stderr, "safety violation at step %ld: %s\n", e.step, e.what());
    return kExitSafety;
  } catch (const icbf::NonSimpleEigenvalue& e) {
    std::fprintf(stderr, "safety machinery failed: %s\n", e.what());
    return kExitSafety;
  } catch (const icbf::BeaconSingularity& e) {
    std::fprintf(stderr, "safety machinery failed: %s\n", e.what());
    return kExitSafety;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
