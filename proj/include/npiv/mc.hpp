#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "npiv/adaptive.hpp"
#include "npiv/inference.hpp"
#include "npiv/rng.hpp"

namespace npiv {

// Simulation designs with an endogenous regressor: latent normals
// (U, V*, W*) with corr(U, V*) = 0.5 and W* independent, X* = W* + V*,
// X = Phi(X*/sqrt 2) (exactly uniform), W = Phi(W*), Y = truth(X) + U.
enum class McDesign { Linear, Nonlinear };

// Linear: 4x - 2. Nonlinear: log(|6x - 3| + 1) sgn(x - 1/2).
double mc_truth(McDesign design, double x);

Dataset simulate_design(McDesign design, long n, SplitRng& rng);

// Runs `work(r)` for r in [0, items) on `threads` threads (0 = hardware
// count). Output must be written into per-index slots; any escaped exception
// is rethrown on the calling thread.
void parallel_for(int items, int threads, const std::function<void(int)>& work);

struct McTableConfig {
  McDesign design = McDesign::Linear;
  long n = 1000;
  int reps = 1000;
  SieveLadder ladder;
  SelectConfig select;
  std::uint64_t seed = 1;
  int threads = 0;
  double failure_budget = 0.01;  // tolerated fraction of failed replications
  int loss_grid_points = 1000;
  std::pair<double, double> loss_range = {0.05, 0.95};
};

struct McRepRecord {
  int j_hat = 0;
  int j_max_hat = 0;
  int j_sup_oracle = 0;  // infeasible sup-loss minimizer over the candidates
  int j_l2_oracle = 0;
  double sup_err = 0.0;  // losses of the selected fit
  double l2_err = 0.0;
  double sup_ratio = 0.0;  // selected / oracle, always >= 1
  double l2_ratio = 0.0;
  bool failed = false;
};

struct McTableResult {
  double mean_sup_ratio = 0.0;
  double mean_l2_ratio = 0.0;
  double mean_sup_err = 0.0;
  double mean_l2_err = 0.0;
  double median_sup_err = 0.0;
  double median_l2_err = 0.0;
  int failures = 0;
  int reps = 0;
  std::vector<McRepRecord> records;
};

// Selection-quality table: per replication, run the dimension selection,
// record losses of the selected fit against the truth and the ratios against
// the infeasible in-sample oracles over the same candidate set.
McTableResult run_table_mc(const McTableConfig& cfg);

struct McCoverageConfig {
  McDesign design = McDesign::Nonlinear;
  long n = 1000;
  int reps = 250;
  SieveLadder ladder;
  SelectConfig select;
  std::uint64_t seed = 1;
  int threads = 0;
  double failure_budget = 0.01;
  int boot_reps = 500;
  WeightLaw law = WeightLaw::Mammen;
  std::vector<double> levels = {0.90, 0.95, 0.99};
  int band_grid_points = 100;
  std::pair<double, double> band_range = {0.05, 0.95};
  // Center the band at the largest feasible dimension instead of the selected
  // one; the extra flexibility trades bias for width.
  bool band_at_max_dim = true;
};

struct McCoverageResult {
  std::vector<double> levels;
  std::vector<double> coverage;   // fraction of replications covering everywhere
  std::vector<double> mean_crit;  // average bootstrap critical value
  int failures = 0;
  int reps = 0;
};

// Band-coverage experiment: per replication, select the dimension, build the
// score-bootstrap band, and check whether it covers the truth at every grid
// point.
McCoverageResult run_coverage_mc(const McCoverageConfig& cfg);

}  // namespace npiv
