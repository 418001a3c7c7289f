#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "owtsim/owtsim.hpp"

namespace {

using namespace owtsim;

void print_summary(const RunSummary& summary) {
  std::printf("case      %s\n", summary.case_id.c_str());
  std::printf("digest    %s\n", summary.digest.c_str());
  std::printf("wall time %.2f s\n", summary.wall_time_s);
  for (const auto& w : summary.warnings) std::printf("warning   %s\n", w.c_str());
  std::printf("results   %s\n", summary.results.dump(2).c_str());
  for (const auto& f : summary.files) std::printf("wrote     %s\n", f.c_str());
}

int run_command(const std::string& config_path, const std::string& case_name,
                const std::string& out_dir, const std::vector<std::string>& overrides) {
  RunConfig cfg = parse_config(config_path, overrides);
  LoadCase lc = load_case_from_string(case_name);
  RunSummary summary = run_case(cfg, lc, out_dir);
  print_summary(summary);
  return 0;
}

int modes_command(const std::string& config_path, const std::string& variant,
                  const std::string& out_dir, const std::vector<std::string>& overrides) {
  RunConfig cfg = parse_config(config_path, overrides);
  BuiltSystem sys = load_system(cfg);
  RunSummary summary = run_lc_eigen(sys, eigen_variant_from_string(variant), out_dir);
  std::printf("%-6s %-10s %-12s %s\n", "mode", "f_Hz", "zeta", "class");
  for (const auto& entry : summary.results["modes"])
    std::printf("%-6d %-10.4f %-12.5f %s\n", entry["mode"].get<int>(),
                entry["f_Hz"].get<double>(), entry["zeta"].get<double>(),
                entry["class"].get<std::string>().c_str());
  std::printf("digest %s; CSV in %s\n", summary.digest.c_str(), out_dir.c_str());
  return 0;
}

int check_command(const std::string& config_path, const std::vector<std::string>& overrides) {
  RunConfig cfg = parse_config(config_path, overrides);
  BuiltSystem sys = load_system(cfg);
  ChainModel clamped = build_variant(sys, false, false);
  std::printf("config ok: digest %s\n", cfg.digest().c_str());
  std::printf("station table %s: %g m to %g m\n", cfg.station_csv.c_str(), sys.table.bottom(),
              sys.table.top());
  std::printf("clamped variant: %d dofs, %d joints\n", clamped.ndof(), clamped.n_joints());
  if (!sys.curves.empty()) {
    ChainModel soil = build_variant(sys, true, cfg.water_depth > 0);
    std::printf("soil variant: %d dofs, %d soil nodes, %zu hydro strips\n", soil.ndof(),
                static_cast<int>(soil.soil_nodes.size()), soil.strips.size());
  } else {
    std::printf("no p-y file configured; soil-supported variants unavailable\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"owtsim: monopile offshore wind turbine structural simulator"};
  app.require_subcommand(1);

  std::string config_path, case_name, out_dir = "out", variant = "clamped_dry";
  std::vector<std::string> overrides;
  long long seed = -1;

  CLI::App* run = app.add_subcommand("run", "execute a load case");
  run->add_option("--config", config_path, "configuration file")->required();
  run->add_option("--case", case_name, "LC12, LC21, LC23, LC51, or custom")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override [run] seed");
  run->add_option("--set", overrides, "section.key=value override (repeatable)");

  CLI::App* modes = app.add_subcommand("modes", "eigenanalysis table");
  modes->add_option("--config", config_path, "configuration file")->required();
  modes->add_option("--variant", variant, "clamped_dry or soil_wet");
  modes->add_option("--out", out_dir, "output directory");
  modes->add_option("--set", overrides, "section.key=value override (repeatable)");

  CLI::App* check = app.add_subcommand("check", "validate a configuration");
  check->add_option("--config", config_path, "configuration file")->required();
  check->add_option("--set", overrides, "section.key=value override (repeatable)");

  CLI11_PARSE(app, argc, argv);
  if (seed >= 0) overrides.push_back("run.seed=" + std::to_string(seed));

  try {
    if (run->parsed()) return run_command(config_path, case_name, out_dir, overrides);
    if (modes->parsed()) return modes_command(config_path, variant, out_dir, overrides);
    return check_command(config_path, overrides);
  } catch (const owtsim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const owtsim::SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
