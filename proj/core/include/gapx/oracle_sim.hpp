#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "gapx/extrapolator.hpp"
#include "gapx/operator_system.hpp"
#include "gapx/spectral_model.hpp"

namespace gapx {

struct SimulationConfig {
  int path_length = 256;
  int replications = 1000;
  std::uint64_t seed = 1;
  /// Observation window L_obs; 0 selects max(50, 4K).
  int window = 0;
};

struct OracleResult {
  double delta_oracle = 0.0;
  std::map<int, CVector> taps_oracle;
  int window = 0;
  /// Variance of A_N xi, the error with no observations.
  double variance = 0.0;
};

/// Exact finite-window MMSE by Gaussian projection onto
/// {xi(j) + eta(j) : j in [-L_obs, -1] \ S}.
OracleResult projection_oracle(const SpectralModel& model, const MissingPattern& pattern,
                               const FunctionalSpec& functional, int obs_window);

/// Counter-based generator: the i-th output of stream (seed, stream) is a
/// SplitMix64 finalizer applied to a Weyl sequence keyed by both, so any
/// replication can be regenerated independently.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// One realization: column t holds time t of the path.
struct SamplePath {
  CMatrix xi;
  CMatrix eta;
};

/// Block circulant embedding of the joint (xi, eta) covariance sequence.
class PathSampler {
 public:
  /// Throws SimulationMethod when an embedding eigenvalue falls below
  /// -1e-8 relative to the largest.
  PathSampler(const SpectralModel& model, int path_length);

  SamplePath draw(std::uint64_t seed, std::uint64_t replication) const;

  int path_length() const noexcept { return path_length_; }
  int embedding_size() const noexcept { return embedding_; }
  bool real_valued() const noexcept { return real_; }
  /// Most negative eigenvalue that was clipped, relative to the largest.
  double clipped() const noexcept { return clipped_; }

 private:
  int dim_ = 1;
  int path_length_ = 0;
  int embedding_ = 0;
  bool real_ = true;
  double clipped_ = 0.0;
  std::vector<CMatrix> root_;
};

std::vector<SamplePath> sample_paths(const SpectralModel& model, const SimulationConfig& config);

struct MonteCarloResult {
  double mse_hat = 0.0;
  double std_error = 0.0;
  std::vector<double> squared_errors;
};

/// Empirical mean of |A_N xi - sum_j taps(j)^T (xi + eta)(j)|^2 over
/// independent replications, serial summation for reproducibility.
MonteCarloResult monte_carlo_mse(const SpectralModel& model, const MissingPattern& pattern,
                                 const FunctionalSpec& functional, const TapSet& taps,
                                 const SimulationConfig& config);

}  // namespace gapx
