#include "npiv/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace npiv {

namespace {

// Shared machinery for the studentized process: rows of `loadings` are the
// per-observation score contributions mapped into coefficient space,
// Z_b(t) = psi(t)' loadings' w_b / sqrt(n), and sd(t)^2 = psi(t)' O psi(t)
// with O = loadings' loadings / n.
struct BandCore {
  Eigen::MatrixXd dmat;      // G x J regressor design on the grid
  Eigen::MatrixXd loadings;  // n x J: diag(resid) * B * proj'
  Eigen::VectorXd center;    // G
  Eigen::VectorXd sd_raw;    // G, unscaled by sqrt(n)
  std::vector<std::uint8_t> degenerate;
  bool any_degenerate = false;
};

BandCore build_core(const NpivFit& fit, const Eigen::MatrixXd& points) {
  if (points.rows() == 0) throw InputError("band grid is empty");
  BandCore core;
  core.dmat = design_matrix(fit.psi, points);
  core.center = core.dmat * fit.coeffs;
  core.loadings =
      (fit.b_design.array().colwise() * fit.residuals.array()).matrix() * fit.proj.transpose();
  const Eigen::MatrixXd omega_proj =
      core.loadings.transpose() * core.loadings / static_cast<double>(fit.n);
  core.sd_raw =
      (core.dmat * omega_proj).cwiseProduct(core.dmat).rowwise().sum().cwiseMax(0.0).cwiseSqrt();

  const double sd_max = core.sd_raw.maxCoeff();
  if (!(sd_max > 0.0))
    throw NumericError("all grid points have degenerate variance; no band is possible");
  const double tol = 1e-12 * sd_max;
  core.degenerate.assign(static_cast<size_t>(points.rows()), 0);
  for (Eigen::Index g = 0; g < points.rows(); ++g) {
    if (!(core.sd_raw(g) > tol)) {
      core.degenerate[static_cast<size_t>(g)] = 1;
      core.any_degenerate = true;
    }
  }
  return core;
}

std::vector<double> bootstrap_sups(const NpivFit& fit, const BandCore& core,
                                   const BootstrapConfig& cfg) {
  if (cfg.reps < 1) throw InputError("bootstrap reps must be >= 1");
  const SplitRng base = cfg.stream ? *cfg.stream : SplitRng::root(cfg.seed);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(fit.n));
  std::vector<double> sups(static_cast<size_t>(cfg.reps), 0.0);
  Eigen::VectorXd w(fit.n), q, z;
  for (int b = 0; b < cfg.reps; ++b) {
    SplitRng rng = base.split(static_cast<std::uint64_t>(b));
    if (cfg.weight_override)
      cfg.weight_override(rng, w);
    else
      w = draw_weights(cfg.law, fit.n, rng);
    q = core.loadings.transpose() * w * inv_sqrt_n;  // J
    z = core.dmat * q;                               // G
    double sup = 0.0;
    for (Eigen::Index g = 0; g < z.size(); ++g) {
      if (core.degenerate[static_cast<size_t>(g)]) continue;
      sup = std::max(sup, std::abs(z(g)) / core.sd_raw(g));
    }
    sups[static_cast<size_t>(b)] = sup;
  }
  return sups;
}

}  // namespace

Eigen::MatrixXd omega_hat(const NpivFit& fit) {
  const Eigen::ArrayXd u2 = fit.residuals.array().square();
  return fit.b_design.transpose() * (fit.b_design.array().colwise() * u2).matrix() /
         static_cast<double>(fit.n);
}

double sieve_sd(const NpivFit& fit, const Eigen::VectorXd& d) {
  if (d.size() != fit.coeffs.size())
    throw InputError("gradient length does not match coefficient count");
  const Eigen::VectorXd g = fit.proj.transpose() * d;           // K
  const Eigen::VectorXd scores = fit.b_design * g;               // n
  const double var =
      (scores.array() * fit.residuals.array()).square().sum() / static_cast<double>(fit.n);
  return std::sqrt(std::max(var, 0.0));
}

double t_statistic(double estimate, double null_value, double sd_unscaled, long n) {
  if (!(sd_unscaled > 0.0)) throw NumericError("t statistic unavailable: zero standard error");
  return std::sqrt(static_cast<double>(n)) * (estimate - null_value) / sd_unscaled;
}

Eigen::VectorXd draw_weights(WeightLaw law, long n, SplitRng& rng) {
  if (n < 1) throw InputError("weight vector length must be >= 1");
  Eigen::VectorXd w(n);
  switch (law) {
    case WeightLaw::Mammen: {
      const double s5 = std::sqrt(5.0);
      const double p_low = (s5 + 1.0) / (2.0 * s5);
      const double low = -(s5 - 1.0) / 2.0;
      const double high = (s5 + 1.0) / 2.0;
      for (long i = 0; i < n; ++i) w(i) = rng.uniform01() < p_low ? low : high;
      return w;
    }
    case WeightLaw::Rademacher:
      for (long i = 0; i < n; ++i) w(i) = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      return w;
    case WeightLaw::Gaussian:
      for (long i = 0; i < n; ++i) w(i) = rng.normal();
      return w;
    case WeightLaw::RecenteredExponential:
      for (long i = 0; i < n; ++i) w(i) = rng.exponential() - 1.0;
      return w;
  }
  throw InputError("unknown weight law");
}

std::vector<double> score_bootstrap_sup(const NpivFit& fit, const Eigen::MatrixXd& points,
                                        const BootstrapConfig& cfg) {
  return bootstrap_sups(fit, build_core(fit, points), cfg);
}

double bootstrap_quantile(const std::vector<double>& sups, double level) {
  if (sups.empty()) throw InputError("no bootstrap draws");
  if (!(level > 0.0 && level < 1.0)) throw InputError("level must be inside (0, 1)");
  std::vector<double> sorted = sups;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(
      std::min<double>(std::ceil(level * static_cast<double>(sorted.size())),
                       static_cast<double>(sorted.size())));
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

UniformBand uniform_band(const NpivFit& fit, const Eigen::MatrixXd& points,
                         const BootstrapConfig& cfg) {
  if (cfg.levels.empty()) throw InputError("no confidence levels requested");
  for (double lv : cfg.levels)
    if (!(lv > 0.0 && lv < 1.0)) throw InputError("levels must be inside (0, 1)");

  const BandCore core = build_core(fit, points);
  const std::vector<double> sups = bootstrap_sups(fit, core, cfg);

  UniformBand band;
  band.points = points;
  band.center = core.center;
  band.sd = core.sd_raw / std::sqrt(static_cast<double>(fit.n));
  band.levels = cfg.levels;
  band.degenerate = core.degenerate;
  band.any_degenerate = core.any_degenerate;
  band.crit.reserve(cfg.levels.size());
  for (double lv : cfg.levels) band.crit.push_back(bootstrap_quantile(sups, lv));
  return band;
}

bool band_covers(const UniformBand& band, const Eigen::VectorXd& truth,
                 std::size_t level_idx) {
  if (truth.size() != band.center.size())
    throw InputError("truth vector length does not match band grid");
  if (level_idx >= band.crit.size()) throw InputError("level index out of range");
  for (Eigen::Index g = 0; g < truth.size(); ++g) {
    if (band.degenerate[static_cast<size_t>(g)]) continue;
    if (truth(g) < band.lo(level_idx, g) || truth(g) > band.hi(level_idx, g)) return false;
  }
  return true;
}

}  // namespace npiv
