#include "npiv/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace npiv {

namespace {

double sample_quantile(Eigen::VectorXd v, double q) {
  std::sort(v.data(), v.data() + v.size());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const auto hi = std::min<Eigen::Index>(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v(lo) * (1.0 - frac) + v(hi) * frac;
}

int k_target(KRule rule, int j) { return rule == KRule::Double ? 2 * j : j; }

}  // namespace

double sup_noise_scale(double tau, double xi, long n, double e_min) {
  if (!(tau > 0.0) || !(xi > 0.0)) throw InputError("sup_noise_scale needs tau, xi > 0");
  if (n < 2) throw InputError("sup_noise_scale needs n >= 2");
  if (!(e_min > 0.0)) throw NumericError("degenerate regressor Gram in sup_noise_scale");
  return tau * xi * std::sqrt(std::log(static_cast<double>(n)) /
                              (static_cast<double>(n) * e_min));
}

int min_ladder_dim(long n, const BasisSpec& psi_proto) {
  if (n < 2) throw InputError("dimension selection needs n >= 2");
  const double ll = std::log(std::log(static_cast<double>(n)));
  const int floor_ll = ll > 0 ? static_cast<int>(std::floor(ll)) : 0;
  return std::max(floor_ll, psi_proto.min_dim());
}

SelectResult select_dimension(const Dataset& data, const SieveLadder& ladder,
                              const SelectConfig& cfg) {
  if (data.x.cols() != 1 || data.w.cols() != 1)
    throw InputError("dimension selection supports univariate regressor and instrument");
  if (data.y.size() != data.x.rows() || data.y.size() != data.w.rows())
    throw InputError("dataset columns disagree on n");
  if (!(cfg.sigma_bar > 0.0) && !cfg.estimate_sigma)
    throw InputError("sigma_bar must be positive");
  if (!(cfg.growth_a > 0.0)) throw InputError("growth constant must be positive");
  const long n = data.n();

  // Basis intervals from the data range (padded) or the override.
  auto interval = [&](const Eigen::VectorXd& col) {
    if (cfg.domain) return *cfg.domain;
    return std::make_pair(col.minCoeff() - cfg.domain_pad, col.maxCoeff() + cfg.domain_pad);
  };
  const auto [x_lo, x_hi] = interval(data.x.col(0));
  const auto [w_lo, w_hi] = interval(data.w.col(0));
  BasisSpec psi_proto = ladder.psi_proto;
  psi_proto.lo = x_lo;
  psi_proto.hi = x_hi;
  BasisSpec b_proto = ladder.b_proto;
  b_proto.lo = w_lo;
  b_proto.hi = w_hi;

  SelectResult res;
  res.j_min = min_ladder_dim(n, psi_proto);

  // Feasibility scan over the ladder dimensions above j_min: find the first
  // one where the noise-growth rule trips (or the fit degenerates). The
  // usable upper bound is the last ladder dimension before that trip, so a
  // dimension whose noise bound already exceeds the rule is never a
  // candidate.
  res.j_trip = 0;
  res.capped = true;
  const double log_n = std::log(static_cast<double>(n));
  for (int j : admissible_dims(psi_proto, res.j_min + 1, cfg.dim_cap)) {
    const double lg = std::log(std::log(static_cast<double>(j)));
    if (!(lg > 0.0)) continue;
    const int k =
        next_admissible_dim(b_proto, std::max(b_proto.min_dim(), k_target(cfg.k_rule, j)));
    if (k >= n) {  // cannot whiten an instrument Gram with K >= n
      res.j_trip = j;
      res.scan_error = true;
      res.capped = false;
      break;
    }
    BasisSpec psi_s = psi_proto;
    psi_s.dim = j;
    BasisSpec b_s = b_proto;
    b_s.dim = k;
    double tau;
    try {
      tau = tau_hat(data, psi_s, b_s);
    } catch (const NumericError&) {
      res.j_trip = j;
      res.scan_error = true;
      res.capped = false;
      break;
    }
    if (tau * zeta_sq(psi_proto, j) * std::sqrt(cfg.growth_a * lg * log_n / n) >= 1.0) {
      res.j_trip = j;
      res.capped = false;
      break;
    }
  }

  const int upper = res.capped ? cfg.dim_cap : res.j_trip - 1;
  const std::vector<int> dims = admissible_dims(psi_proto, res.j_min, upper);
  if (dims.empty())
    throw InputError("no ladder dimension fits between j_min = " + std::to_string(res.j_min) +
                     " and the feasibility stop " + std::to_string(res.j_trip));
  res.j_max_hat = dims.back();

  // Comparison grid.
  double g_lo, g_hi;
  if (cfg.grid_range) {
    g_lo = cfg.grid_range->first;
    g_hi = cfg.grid_range->second;
  } else {
    g_lo = sample_quantile(data.x.col(0), 0.05);
    g_hi = sample_quantile(data.x.col(0), 0.95);
  }
  if (!(g_hi > g_lo)) throw InputError("comparison grid range is empty");
  if (cfg.grid_points < 2) throw InputError("comparison grid needs at least two points");
  res.grid = linspace(g_lo, g_hi, cfg.grid_points);

  // Endpoint-inclusive grid for the sup-l1 basis norm (exact for splines,
  // attained at the interval ends for the other families).
  const Eigen::VectorXd xi_grid = linspace(x_lo, x_hi, 201);

  res.candidates.reserve(dims.size());
  for (int j : dims) {
    CandidateFit c;
    c.j = j;
    c.k = next_admissible_dim(b_proto, std::max(b_proto.min_dim(), k_target(cfg.k_rule, j)));
    BasisSpec psi_s = psi_proto;
    psi_s.dim = j;
    BasisSpec b_s = b_proto;
    b_s.dim = c.k;
    c.fit = fit_npiv(data, psi_s, b_s);
    c.tau = c.fit.tau_hat;
    c.e_min = c.fit.e_hat;
    c.xi = xi_sup_l1(psi_s, xi_grid);
    c.v_sup = sup_noise_scale(c.tau, c.xi, n, c.e_min);
    c.on_grid = c.fit.predict(res.grid);
    res.candidates.push_back(std::move(c));
  }

  res.sigma_bar_used =
      cfg.estimate_sigma ? res.candidates.back().fit.residual_sd() : cfg.sigma_bar;
  if (!(res.sigma_bar_used > 0.0))
    throw NumericError("estimated noise scale is not positive");

  // Smallest candidate within threshold of every larger candidate. The last
  // candidate satisfies the condition vacuously, so selection always succeeds.
  const double root2 = std::sqrt(2.0);
  for (std::size_t i = 0; i < res.candidates.size(); ++i) {
    bool ok = true;
    for (std::size_t l = i + 1; l < res.candidates.size(); ++l) {
      const double dist = sup_distance(res.candidates[i].on_grid, res.candidates[l].on_grid);
      const double thresh = root2 * res.sigma_bar_used *
                            (res.candidates[i].v_sup + res.candidates[l].v_sup);
      if (dist > thresh) {
        ok = false;
        break;
      }
    }
    if (ok) {
      res.selected = static_cast<int>(i);
      break;
    }
  }
  return res;
}

}  // namespace npiv
