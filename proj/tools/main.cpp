#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Extrapolation of stationary sequences from observations with gaps"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  std::optional<int> truncation;

  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"estimate", "Optimal estimate, mean-square error and filter taps"},
           {"oracle-check", "Spectral error against the finite-window projection oracle"},
           {"simulate", "Monte-Carlo check of the estimate on simulated paths"},
           {"minimax", "Least favourable densities and saddle-point checks"}}) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides [output] dir)");
    sub->add_option("--seed", seed, "Random seed (overrides [simulation] and [minimax] seeds)");
    sub->add_option("--grid", grid, "Quadrature grid size (power of two)");
    sub->add_option("--truncation", truncation, "Future truncation K");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gapx::cli::kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  gapx::cli::RunConfig cfg;
  try {
    cfg = gapx::cli::load_config(config_path);
  } catch (const gapx::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return gapx::cli::kConfigError;
  }
  if (seed) {
    cfg.simulation.seed = *seed;
    cfg.minimax.opt.seed = *seed;
  }
  if (grid) {
    if (*grid < 64 || !gapx::is_power_of_two(*grid)) {
      std::cerr << "config error: --grid must be a power of two >= 64\n";
      return gapx::cli::kConfigError;
    }
    cfg.model.grid_size = *grid;
  }
  if (truncation) {
    if (*truncation < 1) {
      std::cerr << "config error: --truncation must be positive\n";
      return gapx::cli::kConfigError;
    }
    cfg.solver.truncation = *truncation;
    cfg.minimax.opt.truncation = *truncation;
    cfg.oracle.truncations = {*truncation};
  }
  const std::filesystem::path out = out_dir.empty() ? cfg.base_dir / cfg.output_dir : std::filesystem::path(out_dir);
  return gapx::cli::run_command(command, cfg, out, std::cerr);
}
