#pragma once

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

#include "npiv/estimator.hpp"

namespace npiv {

// Family/order templates for the regressor and instrument ladders; `dim`,
// `lo`, `hi` of the protos are filled per candidate from the data (or the
// domain override).
struct SieveLadder {
  BasisSpec psi_proto;
  BasisSpec b_proto;
};

// Instrument dimension target as a function of the regressor dimension.
enum class KRule { Same, Double };

struct SelectConfig {
  KRule k_rule = KRule::Same;
  double sigma_bar = 1.0;       // noise scale in the comparison threshold
  bool estimate_sigma = false;  // plug-in residual sd from the largest candidate instead
  double growth_a = 0.1;        // 'a' in L(J) = a log log J of the feasibility rule
  int dim_cap = 200;            // hard stop for the feasibility scan
  int grid_points = 1000;
  // Absolute evaluation window for the sup-norm comparisons; when absent, the
  // central [0.05, 0.95] sample-quantile range of the regressor.
  std::optional<std::pair<double, double>> grid_range;
  // Basis interval; when absent, the data range padded by domain_pad.
  std::optional<std::pair<double, double>> domain;
  double domain_pad = 1e-9;
};

struct CandidateFit {
  int j = 0;
  int k = 0;
  double tau = 0.0;    // whitened-cross-matrix ill-posedness measure
  double e_min = 0.0;  // lambda_min of the regressor Gram
  double xi = 0.0;     // sup l1 norm of the regressor basis
  double v_sup = 0.0;  // sup-norm noise scale tau * xi * sqrt(log n / (n e_min))
  NpivFit fit;
  Eigen::VectorXd on_grid;  // fitted values on the comparison grid
};

struct SelectResult {
  std::vector<CandidateFit> candidates;  // ascending in j
  int selected = -1;                     // index of the chosen candidate
  int j_min = 0;
  int j_trip = 0;      // first ladder dim at which the feasibility rule trips (0 = none)
  int j_max_hat = 0;   // largest ladder dim strictly before the trip
  bool capped = false; // the rule never tripped below dim_cap
  bool scan_error = false;  // the scan stopped on a numerical failure
  double sigma_bar_used = 1.0;
  Eigen::VectorXd grid;  // comparison grid

  int j_hat() const { return candidates[static_cast<size_t>(selected)].j; }
  const NpivFit& fit() const { return candidates[static_cast<size_t>(selected)].fit; }
};

// Sup-norm sampling-noise scale of a candidate:
// tau * xi * sqrt(log(n) / (n * e_min)).
double sup_noise_scale(double tau, double xi, long n, double e_min);

// Lower end of the dimension ladder: max(floor(log log n), family minimum).
int min_ladder_dim(long n, const BasisSpec& psi_proto);

// Chooses the regressor dimension from a univariate sample:
//  1. scan the ladder dims J > j_min until
//     tau_J * zeta_sq(J) * sqrt(a log log J * log n / n) >= 1 (or the cap);
//  2. candidates are the ladder dims in [j_min, last dim before the trip];
//  3. pick the smallest candidate whose fit is within
//     sqrt(2) * sigma_bar * (v_sup(j) + v_sup(l)) in sup norm of every larger
//     candidate's fit on the comparison grid.
SelectResult select_dimension(const Dataset& data, const SieveLadder& ladder,
                              const SelectConfig& cfg);

}  // namespace npiv
