#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gapx/density_class.hpp"
#include "gapx/extrapolator.hpp"
#include "gapx/minimax.hpp"
#include "gapx/oracle_sim.hpp"
#include "gapx/spectral_model.hpp"

namespace gapx::cli {

/// Invalid configuration. The message is anchored as "<source>:<line>: ...".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  /// example1 | ar1 | var1 | joint_var1 | rational | grid
  std::string kind = "example1";
  int grid_size = kDefaultGridSize;
  /// example1
  double b1 = 0.5;
  double b2 = 0.3;
  /// ar1; noise_scale = 0 gives the noiseless problem
  double signal_b = 0.0;
  double signal_scale = 1.0;
  double noise_b = 0.0;
  double noise_scale = 0.0;
  /// var1; an empty noise_sigma gives the noiseless problem
  CMatrix signal_phi;
  CMatrix signal_sigma;
  CMatrix noise_phi;
  CMatrix noise_sigma;
  /// joint_var1: 2T x 2T transition and innovation covariance
  CMatrix phi;
  CMatrix sigma;
  /// joint_var1, rational and grid
  int dim = 1;
  /// rational: keys F_i_j_num, F_i_j_den, G_i_j_num, G_i_j_den
  std::map<std::string, std::vector<cplx>> rational;
  bool hermitian = true;
  /// grid: CSV rows "lambda, F entries (re, im) row-major[, G entries]"
  std::string grid_file;
};

struct ConstraintConfig {
  std::string kind = "D0_1";
  double level = 1.0;
  std::vector<double> levels;
  CMatrix moment;
  CMatrix weight;
  /// Density specs: "white <matrix>", "ar1 <b> <scale>", "signal" or "noise"
  /// (the [model] densities).
  std::string lower;
  std::string upper;
  std::string anchor;
  double eps = 0.1;
  double delta = 0.1;
  std::vector<double> deltas;
  Eigen::MatrixXd delta_matrix;
};

struct MinimaxConfig {
  /// shapes: parametric family from the shape bases; model: the [model]
  /// densities as a single member.
  std::string family = "shapes";
  ConstraintConfig f;
  std::optional<ConstraintConfig> g;
  ShapeBasis f_shape{ShapeKind::ma, 2, -0.9, 0.9};
  ShapeBasis g_shape{ShapeKind::flat, 0, 0.0, 0.0};
  OptConfig opt;
  int saddle_samples = 100;
  double saddle_tol = 1e-6;
  /// Evaluate this member instead of maximizing when non-empty.
  std::vector<double> theta;
};

struct OracleConfig {
  /// Schedule of (K, L_obs); a single entry in either list is broadcast.
  std::vector<int> truncations{64};
  std::vector<int> windows{50, 100, 200};
  double tol = 1e-4;
};

struct RunConfig {
  ModelConfig model;
  std::vector<MissingPattern::Interval> intervals;
  std::vector<CVector> a{CVector::Ones(1)};
  bool finite_horizon = true;
  SolverOptions solver;
  SimulationConfig simulation;
  OracleConfig oracle;
  MinimaxConfig minimax;
  std::string output_dir = "out";
  /// Directory relative file paths are resolved against.
  std::filesystem::path base_dir;
  /// Source name and "section.key" -> line, for anchoring build errors.
  std::string source = "config";
  std::map<std::string, int> lines;
};

RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(serialize_config(c)) is equivalent to c.
std::string serialize_config(const RunConfig& cfg);

/// CRC-32 of the canonical text, 8 hex digits.
std::string config_hash(const RunConfig& cfg);

bool equivalent(const RunConfig& a, const RunConfig& b);

SpectralModel build_model(const RunConfig& cfg);
MissingPattern build_pattern(const RunConfig& cfg);
FunctionalSpec build_functional(const RunConfig& cfg);
DensityClass build_class(const RunConfig& cfg);

/// Scalar or "(re,im)" token; throws std::invalid_argument.
cplx parse_complex(const std::string& token);
std::string format_complex(cplx z);

}  // namespace gapx::cli
