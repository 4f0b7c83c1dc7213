#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "npiv/estimator.hpp"
#include "npiv/rng.hpp"

namespace npiv {

enum class WeightLaw { Mammen, Rademacher, Gaussian, RecenteredExponential };

struct BootstrapConfig {
  int reps = 1000;
  WeightLaw law = WeightLaw::Mammen;
  std::uint64_t seed = 0;
  // When set, bootstrap draw b uses stream->split(b) instead of
  // root(seed).split(b); lets simulation harnesses nest substreams.
  std::optional<SplitRng> stream;
  std::vector<double> levels = {0.90, 0.95, 0.99};
  // Test hook: fills the weight vector in place of the configured law.
  std::function<void(SplitRng&, Eigen::VectorXd&)> weight_override;
};

// Heteroskedasticity-robust instrument-score second moment
// Omega = (1/n) sum_i resid_i^2 b(W_i) b(W_i)'.
Eigen::MatrixXd omega_hat(const NpivFit& fit);

// Sandwich standard deviation ||v||_sd = sqrt(d' proj Omega proj' d) of the
// linearized functional with gradient d (J-vector); scale by 1/sqrt(n) to get
// the standard error of the plug-in estimate.
double sieve_sd(const NpivFit& fit, const Eigen::VectorXd& d);

// sqrt(n) (estimate - null) / sd_unscaled.
double t_statistic(double estimate, double null_value, double sd_unscaled, long n);

// Mean-zero variance-one multiplier weights. The two-point law puts mass
// (sqrt5+1)/(2 sqrt5) on -(sqrt5-1)/2 and the rest on (sqrt5+1)/2.
Eigen::VectorXd draw_weights(WeightLaw law, long n, SplitRng& rng);

struct UniformBand {
  Eigen::MatrixXd points;   // G x coords
  Eigen::VectorXd center;   // fitted values
  Eigen::VectorXd sd;       // per-point standard error (already / sqrt(n))
  std::vector<double> levels;
  std::vector<double> crit;             // bootstrap sup critical value per level
  std::vector<std::uint8_t> degenerate; // points dropped from the sup (sd ~ 0)
  bool any_degenerate = false;

  double lo(std::size_t level_idx, Eigen::Index g) const {
    return center(g) - crit[level_idx] * sd(g);
  }
  double hi(std::size_t level_idx, Eigen::Index g) const {
    return center(g) + crit[level_idx] * sd(g);
  }
};

// Per-replication sup of the studentized bootstrap score process over the
// grid points, in replication order.
std::vector<double> score_bootstrap_sup(const NpivFit& fit, const Eigen::MatrixXd& points,
                                        const BootstrapConfig& cfg);

// Order statistic ceil(level * #sups) of the sup draws.
double bootstrap_quantile(const std::vector<double>& sups, double level);

// Simultaneous confidence band over the grid at each requested level.
UniformBand uniform_band(const NpivFit& fit, const Eigen::MatrixXd& points,
                         const BootstrapConfig& cfg);

// True if truth(g) lies inside the band at every non-degenerate point.
bool band_covers(const UniformBand& band, const Eigen::VectorXd& truth,
                 std::size_t level_idx);

}  // namespace npiv
