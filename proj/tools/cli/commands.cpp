#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "gapx/characterization.hpp"
#include "gapx/errors.hpp"

namespace gapx::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return fmt::format("{:.17e}", v); }

class Output {
 public:
  Output(const fs::path& path, const RunConfig& cfg, const std::string& command, std::uint64_t seed)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << fmt::format("# gapx {}\n# config_hash = {}\n# seed = {}\n", command, config_hash(cfg), seed);
  }

  template <class... Args>
  void line(fmt::format_string<Args...> f, Args&&... args) {
    out_ << fmt::format(f, std::forward<Args>(args)...) << '\n';
  }

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::ofstream out_;
};

struct Inputs {
  SpectralModel model;
  MissingPattern pattern;
  FunctionalSpec functional;
};

Inputs inputs(const RunConfig& cfg) {
  Inputs in{build_model(cfg), build_pattern(cfg), build_functional(cfg)};
  if (in.functional.dim() != in.model.dim)
    throw ConfigError(fmt::format("{}:{}: functional: coefficient dimension {} differs from model dimension {}",
                                  cfg.source, cfg.lines.count("functional") ? cfg.lines.at("functional") : 0,
                                  in.functional.dim(), in.model.dim));
  return in;
}

fs::path prepare(const fs::path& dir) {
  fs::create_directories(dir);
  return dir;
}

std::string theta_header(std::size_t d) {
  std::string out;
  for (std::size_t k = 0; k < d; ++k) out += fmt::format("theta{},", k);
  return out;
}

std::string theta_row(const std::vector<double>& theta) {
  std::string out;
  for (double t : theta) out += num(t) + ",";
  return out;
}

}  // namespace

std::vector<fs::path> cmd_estimate(const RunConfig& cfg, const fs::path& out_dir) {
  const Inputs in = inputs(cfg);
  const EstimateResult r = estimate(in.model, in.pattern, in.functional, cfg.solver);
  const Diagnostics& d = r.diagnostics;
  const fs::path dir = prepare(out_dir);
  const std::uint64_t seed = cfg.simulation.seed;

  Output s(dir / "result.summary", cfg, "estimate", seed);
  s.line("delta = {}", num(r.delta));
  s.line("delta_quadrature = {}", num(r.delta_quadrature));
  s.line("variant = {}", to_string(r.variant));
  s.line("truncation = {}", d.truncation);
  s.line("grid_size = {}", d.grid_size);
  s.line("obs_window = {}", d.obs_window);
  s.line("cond_B = {}", num(d.cond_B));
  s.line("solve_residual = {}", num(d.solve_residual));
  s.line("truncation_change = {}", num(d.truncation_change));
  s.line("delta_discrepancy = {}", num(d.delta_discrepancy));
  s.line("gap_constraint = {}", num(d.gap_constraint));
  s.line("orthogonality = {}", num(d.orthogonality));
  s.line("tap_tail_mass = {}", num(d.tap_tail_mass));

  Output t(dir / "taps.csv", cfg, "estimate", seed);
  t.line("lag,component,re,im");
  for (std::size_t i = 0; i < r.taps.lags.size(); ++i)
    for (Eigen::Index k = 0; k < r.taps.taps[i].size(); ++k)
      t.line("{},{},{},{}", r.taps.lags[i], k, num(r.taps.taps[i](k).real()), num(r.taps.taps[i](k).imag()));

  Output h(dir / "h_grid.csv", cfg, "estimate", seed);
  std::string head = "lambda";
  for (int k = 0; k < in.model.dim; ++k) head += fmt::format(",h{}_re,h{}_im", k, k);
  h.line("{}", head);
  for (std::size_t m = 0; m < r.lambda.size(); ++m) {
    std::string row = num(r.lambda[m]);
    for (Eigen::Index k = 0; k < r.h_grid[m].size(); ++k)
      row += "," + num(r.h_grid[m](k).real()) + "," + num(r.h_grid[m](k).imag());
    h.line("{}", row);
  }
  return {s.path(), t.path(), h.path()};
}

std::vector<fs::path> cmd_oracle_check(const RunConfig& cfg, const fs::path& out_dir) {
  const Inputs in = inputs(cfg);
  const auto& Ks = cfg.oracle.truncations;
  const auto& Ls = cfg.oracle.windows;
  const std::size_t rows = std::max(Ks.size(), Ls.size());

  struct Row {
    int K, L;
    double spectral, oracle;
  };
  std::vector<Row> table;
  std::map<int, double> spectral_at;
  for (std::size_t i = 0; i < rows; ++i) {
    const int K = Ks.size() == 1 ? Ks[0] : Ks[i];
    const int L = Ls.size() == 1 ? Ls[0] : Ls[i];
    if (!spectral_at.contains(K))
      spectral_at[K] = mean_square_error(in.model, in.pattern, in.functional, K);
    const OracleResult o = projection_oracle(in.model, in.pattern, in.functional, L);
    table.push_back({K, L, spectral_at[K], o.delta_oracle});
  }

  auto diff = [](const Row& r) { return std::abs(r.oracle - r.spectral); };
  auto rel = [&](const Row& r) { return diff(r) / std::max(std::abs(r.oracle), 1e-300); };
  bool oracle_monotone = true;
  bool diff_decreasing = true;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const double slack = 1e-12 * std::max(1.0, std::abs(table[i - 1].oracle));
    if (table[i].L >= table[i - 1].L && table[i].oracle > table[i - 1].oracle + slack) oracle_monotone = false;
    if (diff(table[i]) > diff(table[i - 1]) + slack) diff_decreasing = false;
  }
  const bool converged = rel(table.back()) <= cfg.oracle.tol;

  const fs::path dir = prepare(out_dir);
  Output o(dir / "comparison.csv", cfg, "oracle-check", cfg.simulation.seed);
  o.line("# converged = {}", converged);
  o.line("# oracle_nonincreasing = {}", oracle_monotone);
  o.line("# difference_decreasing = {}", diff_decreasing);
  o.line("K,L_obs,delta_spectral,delta_oracle,abs_diff,rel_diff");
  for (const Row& r : table)
    o.line("{},{},{},{},{},{}", r.K, r.L, num(r.spectral), num(r.oracle), num(diff(r)), num(rel(r)));
  return {o.path()};
}

std::vector<fs::path> cmd_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  const Inputs in = inputs(cfg);
  SolverOptions opts = cfg.solver;
  if (cfg.simulation.window > 0) opts.obs_window = cfg.simulation.window;
  const EstimateResult r = estimate(in.model, in.pattern, in.functional, opts);
  const MonteCarloResult mc = monte_carlo_mse(in.model, in.pattern, in.functional, r.taps, cfg.simulation);
  const double z = mc.std_error > 0.0 ? (mc.mse_hat - r.delta) / mc.std_error : 0.0;

  const fs::path dir = prepare(out_dir);
  Output o(dir / "mc.csv", cfg, "simulate", cfg.simulation.seed);
  o.line("replications,seed,path_length,obs_window,mse_hat,std_error,delta_spectral,z_score");
  o.line("{},{},{},{},{},{},{},{}", cfg.simulation.replications, cfg.simulation.seed,
         cfg.simulation.path_length, r.diagnostics.obs_window, num(mc.mse_hat), num(mc.std_error),
         num(r.delta), num(z));
  return {o.path()};
}

std::vector<fs::path> cmd_minimax(const RunConfig& cfg, const fs::path& out_dir) {
  const DensityClass cls = build_class(cfg);
  check_supported(cls);
  const MissingPattern pattern = build_pattern(cfg);
  const FunctionalSpec functional = build_functional(cfg);
  if (functional.dim() != cls.dim)
    throw ConfigError(fmt::format("{}:{}: functional: coefficient dimension differs from class dimension",
                                  cfg.source, cfg.lines.count("functional") ? cfg.lines.at("functional") : 0));
  const MinimaxConfig& mm = cfg.minimax;

  LeastFavorableResult r;
  if (mm.theta.empty()) {
    r = maximize_delta(cls, pattern, functional, mm.opt);
  } else {
    if (static_cast<int>(mm.theta.size()) != family_dimension(cls))
      throw ConfigError(fmt::format("{}:{}: minimax.theta: expected {} parameters", cfg.source,
                                    cfg.lines.count("minimax.theta") ? cfg.lines.at("minimax.theta") : 0,
                                    family_dimension(cls)));
    r = evaluate_member(cls, pattern, functional, mm.theta, mm.opt.truncation);
  }
  const SaddleReport saddle = verify_saddle_point(r, cls, functional, mm.saddle_samples, mm.saddle_tol, mm.opt.seed);
  const ResidualReport residuals = characterization_residuals(r, cls, functional);

  const fs::path dir = prepare(out_dir);
  const std::uint64_t seed = mm.opt.seed;
  const std::size_t d = r.theta_star.size();

  Output s(dir / "lfd.summary", cfg, "minimax", seed);
  s.line("class_f = {}", kind_name(cls.f));
  s.line("class_g = {}", cls.g ? kind_name(*cls.g) : std::string("none"));
  s.line("mode = {}", mm.theta.empty() ? "maximize" : "fixed");
  std::string theta;
  for (std::size_t k = 0; k < d; ++k) theta += (k ? " " : "") + num(r.theta_star[k]);
  s.line("theta_star = {}", theta);
  s.line("delta_star = {}", num(r.delta_star));
  s.line("at_boundary = {}", r.at_boundary);
  s.line("evaluations = {}", r.evaluations.size());
  s.line("saddle_reference = {}", num(saddle.reference));
  s.line("saddle_tol = {}", num(saddle.tol));
  s.line("saddle_violations = {}", saddle.violations());
  s.line("saddle_pass = {}", saddle.all_pass());
  s.line("max_residual = {}", num(residuals.max_residual()));

  Output sc(dir / "saddle.csv", cfg, "minimax", seed);
  sc.line("index,{}delta,reference,excess,pass", theta_header(d));
  for (std::size_t i = 0; i < saddle.entries.size(); ++i) {
    const SaddleEntry& e = saddle.entries[i];
    sc.line("{},{}{},{},{},{}", i, theta_row(e.theta), num(e.delta), num(saddle.reference),
            num(e.delta - saddle.reference), e.pass ? "pass" : "violation");
  }

  Output rc(dir / "residuals.csv", cfg, "minimax", seed);
  rc.line("equation,residual,lhs_norm,multiplier,value");
  for (const EquationResidual& e : residuals.equations) {
    if (e.multipliers.empty()) rc.line("{},{},{},,", e.equation, num(e.residual), num(e.lhs_norm));
    for (const MultiplierFit& m : e.multipliers)
      rc.line("{},{},{},{},{}", e.equation, num(e.residual), num(e.lhs_norm), m.name, num(m.value));
  }

  Output tr(dir / "trace.csv", cfg, "minimax", seed);
  tr.line("index,{}delta", theta_header(d));
  for (std::size_t i = 0; i < r.evaluations.size(); ++i) {
    const Evaluation& e = r.evaluations[i];
    tr.line("{},{}{}", i, theta_row(e.theta), std::isnan(e.delta) ? std::string("nan") : num(e.delta));
  }
  return {s.path(), sc.path(), rc.path(), tr.path()};
}

int run_command(const std::string& name, const RunConfig& cfg, const fs::path& out_dir, std::ostream& err) {
  try {
    if (name == "estimate") cmd_estimate(cfg, out_dir);
    else if (name == "oracle-check") cmd_oracle_check(cfg, out_dir);
    else if (name == "simulate") cmd_simulate(cfg, out_dir);
    else if (name == "minimax") cmd_minimax(cfg, out_dir);
    else {
      err << "unknown command '" << name << "'\n";
      return kConfigError;
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UnsupportedClass& e) {
    err << "unsupported class: " << e.what() << '\n';
    return kUnsupported;
  } catch (const InvalidParameter& e) {
    err << "invalid parameter: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidPattern& e) {
    err << "invalid pattern: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace gapx::cli
